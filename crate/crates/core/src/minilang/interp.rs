//! Deterministic tree-walking interpreter over the typed program.
//!
//! One step is charged per executed CFG node (statement, loop or branch condition, global
//! initializer), so `while (true) {}` exhausts the step budget like any other divergent loop.

use std::cmp::Ordering;

use super::ast::{BinaryOp, UnaryOp};
use super::check::{TExpr, TExprKind, TStmt, TStmtKind, TypedProgram, VarRef};
use super::value::Value;

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

/// Maximum MiniLang call depth before execution aborts with a runtime error.
pub const MAX_CALL_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub enum ExecError {
    DivisionByZero,
    StackOverflow,
    Timeout,
    UnknownFunction(String),
    /// An operand reached an operator it does not support. Never happens for programs accepted
    /// by the type checker.
    TypeFault(String),
}

enum Flow {
    Next,
    Return(Value),
}

struct Machine<'p> {
    program: &'p TypedProgram,
    globals: Vec<Value>,
    steps: u64,
    limit: u64,
    depth: usize,
}

/// Runs the global initializers and then calls `callee(args)`.
pub fn execute(
    program: &TypedProgram,
    callee: &str,
    args: Vec<Value>,
    step_limit: u64,
) -> Result<Value, ExecError> {
    let (fi, _) = program
        .function(callee)
        .ok_or_else(|| ExecError::UnknownFunction(callee.to_string()))?;
    let mut m = Machine {
        program,
        globals: program
            .globals
            .iter()
            .map(|g| Value::default_for(g.ty))
            .collect(),
        steps: 0,
        limit: step_limit,
        depth: 0,
    };
    let mut no_locals = Vec::new();
    for (gi, g) in program.globals.iter().enumerate() {
        if let Some(init) = &g.init {
            m.step()?;
            let v = m.eval(init, &mut no_locals)?;
            m.globals[gi] = v;
        }
    }
    m.call(fi, args)
}

impl<'p> Machine<'p> {
    fn step(&mut self) -> Result<(), ExecError> {
        self.steps += 1;
        if self.steps > self.limit {
            Err(ExecError::Timeout)
        } else {
            Ok(())
        }
    }

    fn call(&mut self, fi: usize, args: Vec<Value>) -> Result<Value, ExecError> {
        let f = &self.program.functions[fi];
        if args.len() != f.params.len() {
            return Err(ExecError::TypeFault(format!(
                "`{}` called with {} argument(s)",
                f.name,
                args.len()
            )));
        }
        for (a, p) in args.iter().zip(&f.params) {
            if a.ty() != *p {
                return Err(ExecError::TypeFault(format!(
                    "argument of type {} passed for {}",
                    a.ty(),
                    p
                )));
            }
        }
        if self.depth >= MAX_CALL_DEPTH {
            return Err(ExecError::StackOverflow);
        }
        self.depth += 1;
        let mut locals = args;
        locals.resize(f.slot_count, Value::Void);
        let flow = self.exec_block(&f.body, &mut locals);
        self.depth -= 1;
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Next => Ok(Value::Void),
        }
    }

    fn exec_block(&mut self, stmts: &[TStmt], locals: &mut Vec<Value>) -> Result<Flow, ExecError> {
        for s in stmts {
            if let Flow::Return(v) = self.exec(s, locals)? {
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn exec(&mut self, stmt: &TStmt, locals: &mut Vec<Value>) -> Result<Flow, ExecError> {
        match &stmt.kind {
            TStmtKind::Decl { slot, init, .. } => {
                self.step()?;
                let v = self.eval(init, locals)?;
                locals[*slot] = v;
            }
            TStmtKind::Assign { target, value, .. } => {
                self.step()?;
                let v = self.eval(value, locals)?;
                match target {
                    VarRef::Local(s) => locals[*s] = v,
                    VarRef::Global(g) => self.globals[*g] = v,
                }
            }
            TStmtKind::Expr(e) => {
                self.step()?;
                self.eval(e, locals)?;
            }
            TStmtKind::Return(e) => {
                self.step()?;
                let v = match e {
                    Some(e) => self.eval(e, locals)?,
                    None => Value::Void,
                };
                return Ok(Flow::Return(v));
            }
            TStmtKind::If { cond, then, els } => {
                self.step()?;
                if self.eval_bool(cond, locals)? {
                    return self.exec_block(then, locals);
                } else if let Some(els) = els {
                    return self.exec_block(els, locals);
                }
            }
            TStmtKind::While { cond, body } => loop {
                self.step()?;
                if !self.eval_bool(cond, locals)? {
                    break;
                }
                if let Flow::Return(v) = self.exec_block(body, locals)? {
                    return Ok(Flow::Return(v));
                }
            },
            TStmtKind::Block(b) => return self.exec_block(b, locals),
        }
        Ok(Flow::Next)
    }

    fn eval_bool(&mut self, e: &TExpr, locals: &mut Vec<Value>) -> Result<bool, ExecError> {
        match self.eval(e, locals)? {
            Value::Bool(b) => Ok(b),
            other => Err(ExecError::TypeFault(format!("condition of type {}", other.ty()))),
        }
    }

    fn eval(&mut self, e: &TExpr, locals: &mut Vec<Value>) -> Result<Value, ExecError> {
        match &e.kind {
            TExprKind::Literal { value, .. } => Ok(value.clone()),
            TExprKind::Var { var, .. } => Ok(match var {
                VarRef::Local(s) => locals[*s].clone(),
                VarRef::Global(g) => self.globals[*g].clone(),
            }),
            TExprKind::Paren(inner) => self.eval(inner, locals),
            TExprKind::Unary { op, operand, .. } => {
                let v = self.eval(operand, locals)?;
                unary(*op, v)
            }
            TExprKind::Binary { op, lhs, rhs, .. } => match op {
                BinaryOp::And => {
                    Ok(Value::Bool(self.eval_bool(lhs, locals)? && self.eval_bool(rhs, locals)?))
                }
                BinaryOp::Or => {
                    Ok(Value::Bool(self.eval_bool(lhs, locals)? || self.eval_bool(rhs, locals)?))
                }
                _ => {
                    let a = self.eval(lhs, locals)?;
                    let b = self.eval(rhs, locals)?;
                    binary(*op, a, b)
                }
            },
            TExprKind::Call { func, args, .. } => {
                let mut values = Vec::with_capacity(args.len());
                for a in args {
                    values.push(self.eval(a, locals)?);
                }
                self.call(*func, values)
            }
        }
    }
}

fn unary(op: UnaryOp, v: Value) -> Result<Value, ExecError> {
    match (op, v) {
        (UnaryOp::Neg, Value::Int(i)) => Ok(Value::Int(i.wrapping_neg())),
        (UnaryOp::Neg, Value::Float(f)) => Ok(Value::Float(-f)),
        (UnaryOp::Not, Value::Bool(b)) => Ok(Value::Bool(!b)),
        (op, v) => Err(ExecError::TypeFault(format!(
            "`{}` applied to {}",
            op.lexeme(),
            v.ty()
        ))),
    }
}

fn compare(op: BinaryOp, ord: Option<Ordering>) -> bool {
    use BinaryOp::*;
    match ord {
        None => op == Ne,
        Some(o) => match op {
            Lt => o == Ordering::Less,
            Le => o != Ordering::Greater,
            Gt => o == Ordering::Greater,
            Ge => o != Ordering::Less,
            Eq => o == Ordering::Equal,
            Ne => o != Ordering::Equal,
            _ => unreachable!(),
        },
    }
}

fn binary(op: BinaryOp, a: Value, b: Value) -> Result<Value, ExecError> {
    use BinaryOp::*;
    use Value::*;
    let fault = |a: &Value, b: &Value| {
        Err(ExecError::TypeFault(format!(
            "`{}` applied to {} and {}",
            op.lexeme(),
            a.ty(),
            b.ty()
        )))
    };
    if op.is_relational() {
        let ord = match (&a, &b) {
            (Int(x), Int(y)) => Some(x.cmp(y)),
            (Float(x), Float(y)) => x.partial_cmp(y),
            (String(x), String(y)) => Some(x.cmp(y)),
            (Bool(x), Bool(y)) if matches!(op, Eq | Ne) => Some(x.cmp(y)),
            _ => return fault(&a, &b),
        };
        return Ok(Bool(compare(op, ord)));
    }
    match (a, b) {
        (Int(x), Int(y)) => Ok(Int(match op {
            Add => x.wrapping_add(y),
            Sub => x.wrapping_sub(y),
            Mul => x.wrapping_mul(y),
            Div if y == 0 => return Err(ExecError::DivisionByZero),
            Rem if y == 0 => return Err(ExecError::DivisionByZero),
            Div => x.wrapping_div(y),
            Rem => x.wrapping_rem(y),
            BitAnd => x & y,
            BitOr => x | y,
            BitXor => x ^ y,
            Shl => x.wrapping_shl(y as u32),
            Shr => x.wrapping_shr(y as u32),
            _ => return fault(&Int(x), &Int(y)),
        })),
        (Float(x), Float(y)) => Ok(Float(match op {
            Add => x + y,
            Sub => x - y,
            Mul => x * y,
            Div | Rem if y == 0.0 => return Err(ExecError::DivisionByZero),
            Div => x / y,
            Rem => x % y,
            _ => return fault(&Float(x), &Float(y)),
        })),
        (Bool(x), Bool(y)) => Ok(Bool(match op {
            BitAnd => x & y,
            BitOr => x | y,
            BitXor => x ^ y,
            _ => return fault(&Bool(x), &Bool(y)),
        })),
        (String(x), String(y)) if op == Add => Ok(String(x + &y)),
        (a, b) => fault(&a, &b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str, callee: &str, args: Vec<Value>) -> Result<Value, ExecError> {
        let p = TypedProgram::compile(src).unwrap();
        execute(&p, callee, args, DEFAULT_STEP_LIMIT)
    }

    #[test]
    fn returns_constant() {
        assert_eq!(run("fn f() -> int { return 1; }", "f", vec![]), Ok(Value::Int(1)));
    }

    #[test]
    fn division_by_zero() {
        assert_eq!(
            run("fn f() -> int { return 1 / 0; }", "f", vec![]),
            Err(ExecError::DivisionByZero)
        );
        assert_eq!(
            run("fn f() -> float { return 1.0 % 0.0; }", "f", vec![]),
            Err(ExecError::DivisionByZero)
        );
    }

    #[test]
    fn divergent_loop_times_out() {
        assert_eq!(
            run("fn f() -> int { while (true) {} return 0; }", "f", vec![]),
            Err(ExecError::Timeout)
        );
    }

    #[test]
    fn step_limit_is_exact() {
        // decl + 3 * (cond + assign) + final cond + return = 9 steps
        let src = "fn f() -> int { var i: int = 0; while (i < 3) { i = i + 1; } return i; }";
        let p = TypedProgram::compile(src).unwrap();
        assert_eq!(execute(&p, "f", vec![], 9), Ok(Value::Int(3)));
        assert_eq!(execute(&p, "f", vec![], 8), Err(ExecError::Timeout));
    }

    #[test]
    fn globals_initialize_in_order_and_functions_see_them() {
        let src = "var a: int = 2;\nvar b: int = a * 10;\nfn f(x: int) -> int { a = a + x; return a + b; }";
        assert_eq!(run(src, "f", vec![Value::Int(1)]), Ok(Value::Int(23)));
    }

    #[test]
    fn recursion_and_depth_limit() {
        let src = "fn fact(n: int) -> int { if (n <= 1) { return 1; } return n * fact(n - 1); }\nfn loop(n: int) -> int { return loop(n + 1); }";
        assert_eq!(run(src, "fact", vec![Value::Int(10)]), Ok(Value::Int(3628800)));
        assert_eq!(run(src, "loop", vec![Value::Int(0)]), Err(ExecError::StackOverflow));
    }

    #[test]
    fn short_circuit() {
        let src = "fn f(x: int) -> bool { return x != 0 && 10 / x > 1; }";
        assert_eq!(run(src, "f", vec![Value::Int(0)]), Ok(Value::Bool(false)));
        assert_eq!(run(src, "f", vec![Value::Int(2)]), Ok(Value::Bool(true)));
    }

    #[test]
    fn strings_and_floats() {
        let src = "fn f(s: string) -> string { if (s < \"m\") { return s + \"!\"; } return s; }\nfn g(x: float) -> float { return x / 2.0 - 0.25; }";
        assert_eq!(
            run(src, "f", vec![Value::String("abc".into())]),
            Ok(Value::String("abc!".into()))
        );
        assert_eq!(run(src, "g", vec![Value::Float(1.5)]), Ok(Value::Float(0.5)));
    }

    #[test]
    fn integer_edge_cases_are_defined() {
        let src = "fn f(a: int, b: int) -> int { return a / b + (a << 70) + (a % b); }";
        let min = Value::Int(i64::MIN);
        assert!(run(src, "f", vec![min, Value::Int(-1)]).is_ok());
    }

    #[test]
    fn argument_type_fault_detected() {
        let p = TypedProgram::compile("fn f(x: int) -> int { return x; }").unwrap();
        assert!(matches!(
            execute(&p, "f", vec![Value::Bool(true)], 10),
            Err(ExecError::TypeFault(_))
        ));
        assert!(matches!(
            execute(&p, "g", vec![], 10),
            Err(ExecError::UnknownFunction(_))
        ));
    }
}
