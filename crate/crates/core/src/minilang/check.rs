//! Type checking and name resolution.
//!
//! The checker is the compilability oracle for mutants: a mutant is kept only when its source
//! passes [`type_check`]. Besides the usual operand and call checks it enforces two Java-style
//! structural rules: every path of a non-void function returns, and no statement follows a
//! statement that always returns.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::ast::*;
use super::lexer::{tokenize, unescape_string, TokenKind, TokenStream};
use super::parser::parse;
use super::value::Value;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Local,
    Param,
    Global,
    Function,
}

/// Storage of a variable at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRef {
    Local(usize),
    Global(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Declaration {
    pub name: String,
    pub kind: SymbolKind,
    /// Variable type, or return type for functions.
    pub ty: Type,
    /// Parameter types; empty for variables.
    pub params: Vec<Type>,
    pub token: usize,
    /// Index of the owning function for locals and params.
    pub owner: Option<usize>,
    /// Token range in which the name may be used.
    pub visible: Span,
}

pub type DeclId = usize;

#[derive(Debug, Clone, Default)]
pub struct SymbolTable {
    pub decls: Vec<Declaration>,
    /// Identifier token index -> declaration.
    pub uses: BTreeMap<usize, DeclId>,
}

impl SymbolTable {
    pub fn resolve(&self, token: usize) -> Option<&Declaration> {
        self.uses.get(&token).map(|&id| &self.decls[id])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: Type,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExprKind {
    Literal {
        token: usize,
        value: Value,
    },
    Var {
        name: String,
        token: usize,
        var: VarRef,
    },
    Unary {
        op: UnaryOp,
        op_token: usize,
        operand: Box<TExpr>,
    },
    Binary {
        op: BinaryOp,
        op_token: usize,
        lhs: Box<TExpr>,
        rhs: Box<TExpr>,
    },
    Call {
        name: String,
        token: usize,
        func: usize,
        args: Vec<TExpr>,
    },
    Paren(Box<TExpr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TStmt {
    pub kind: TStmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TStmtKind {
    Decl {
        name: String,
        token: usize,
        slot: usize,
        init: TExpr,
    },
    Assign {
        name: String,
        token: usize,
        target: VarRef,
        value: TExpr,
    },
    Expr(TExpr),
    If {
        cond: TExpr,
        then: Vec<TStmt>,
        els: Option<Vec<TStmt>>,
    },
    While {
        cond: TExpr,
        body: Vec<TStmt>,
    },
    Return(Option<TExpr>),
    Block(Vec<TStmt>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalInfo {
    pub name: String,
    pub ty: Type,
    pub token: usize,
    pub init: Option<TExpr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionInfo {
    pub name: String,
    pub token: usize,
    pub params: Vec<Type>,
    pub ret: Type,
    pub body: Vec<TStmt>,
    pub span: Span,
    pub body_span: Span,
    pub slot_count: usize,
}

impl FunctionInfo {
    pub fn same_signature(&self, other: &FunctionInfo) -> bool {
        self.params == other.params && self.ret == other.ret
    }
}

/// A parsed, type-checked MiniLang compilation unit.
#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub source: String,
    pub tokens: TokenStream,
    pub globals: Vec<GlobalInfo>,
    pub functions: Vec<FunctionInfo>,
    pub symbols: SymbolTable,
}

impl TypedProgram {
    /// Tokenizes, parses and type-checks `source`.
    pub fn compile(source: &str) -> Result<TypedProgram> {
        let tokens = tokenize(source)?;
        let ast = parse(&tokens)?;
        type_check(source, tokens, &ast)
    }

    pub fn function(&self, name: &str) -> Option<(usize, &FunctionInfo)> {
        self.functions.iter().enumerate().find(|(_, f)| f.name == name)
    }

    /// Symbols visible at token `at`: locals and params of the enclosing function that are
    /// already declared, globals (only earlier ones inside a global initializer), and all
    /// functions. A local hides a global of the same name.
    pub fn symbols_in_scope(&self, at: usize) -> Vec<&Declaration> {
        let in_function = self.functions.iter().position(|f| f.span.contains(at));
        let in_global = self.globals.iter().position(|g| g.span.contains(at));
        let mut vars: Vec<&Declaration> = Vec::new();
        if let Some(fi) = in_function {
            vars.extend(self.symbols.decls.iter().filter(|d| {
                matches!(d.kind, SymbolKind::Local | SymbolKind::Param)
                    && d.owner == Some(fi)
                    && d.visible.contains(at)
            }));
        }
        let globals = self
            .symbols
            .decls
            .iter()
            .filter(|d| d.kind == SymbolKind::Global)
            .enumerate()
            .filter(|(gi, _)| in_global.is_none_or(|cur| *gi < cur))
            .map(|(_, d)| d)
            .filter(|g| !vars.iter().any(|v| v.name == g.name))
            .collect::<Vec<_>>();
        vars.extend(globals);
        vars.extend(
            self.symbols
                .decls
                .iter()
                .filter(|d| d.kind == SymbolKind::Function),
        );
        vars
    }
}

pub fn type_check(source: &str, tokens: TokenStream, ast: &Ast) -> Result<TypedProgram> {
    let mut checker = Checker {
        tokens: &tokens,
        symbols: SymbolTable::default(),
        function_ids: HashMap::new(),
        global_ids: HashMap::new(),
        functions: Vec::new(),
        scopes: Vec::new(),
        current_fn: None,
        slot_count: 0,
        visible_globals: 0,
    };
    checker.declare_items(ast)?;
    let mut globals = Vec::new();
    let mut functions = Vec::new();
    let mut global_index = 0;
    for item in &ast.items {
        match item {
            Item::Global(g) => {
                checker.visible_globals = global_index;
                let init = match &g.init {
                    Some(e) => {
                        let te = checker.expr(e)?;
                        checker.expect_type(&te, g.ty)?;
                        Some(te)
                    }
                    None => None,
                };
                global_index += 1;
                globals.push(GlobalInfo {
                    name: g.name.name.clone(),
                    ty: g.ty,
                    token: g.name.token,
                    init,
                    span: g.span,
                });
            }
            Item::Function(f) => {
                checker.visible_globals = usize::MAX;
                functions.push(checker.function(f, functions.len())?);
            }
        }
    }
    let symbols = checker.symbols;
    Ok(TypedProgram {
        source: source.to_string(),
        tokens,
        globals,
        functions,
        symbols,
    })
}

struct ScopeEntry {
    decl: DeclId,
    var: VarRef,
    ty: Type,
}

struct Checker<'a> {
    tokens: &'a TokenStream,
    symbols: SymbolTable,
    function_ids: HashMap<String, (usize, DeclId)>,
    global_ids: HashMap<String, (usize, DeclId)>,
    functions: Vec<(Vec<Type>, Type)>,
    scopes: Vec<HashMap<String, ScopeEntry>>,
    current_fn: Option<(usize, Type)>,
    slot_count: usize,
    visible_globals: usize,
}

impl<'a> Checker<'a> {
    fn error_at(&self, token: usize, message: impl Into<String>) -> Error {
        let (line, col) = self
            .tokens
            .get(token)
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1));
        Error::Type {
            line,
            col,
            message: message.into(),
        }
    }

    fn declare_items(&mut self, ast: &Ast) -> Result<()> {
        let end = self.tokens.len().saturating_sub(1);
        let mut fi = 0;
        let mut gi = 0;
        for item in ast.items.iter() {
            match item {
                Item::Function(f) => {
                    let name = &f.name.name;
                    if self.function_ids.contains_key(name) || self.global_ids.contains_key(name)
                    {
                        return Err(self.error_at(f.name.token, format!("duplicate name `{name}`")));
                    }
                    let params: Vec<Type> = f.params.iter().map(|p| p.ty).collect();
                    let id = self.symbols.decls.len();
                    self.symbols.decls.push(Declaration {
                        name: name.clone(),
                        kind: SymbolKind::Function,
                        ty: f.ret,
                        params: params.clone(),
                        token: f.name.token,
                        owner: None,
                        visible: Span::new(0, end),
                    });
                    self.symbols.uses.insert(f.name.token, id);
                    self.function_ids.insert(name.clone(), (fi, id));
                    self.functions.push((params, f.ret));
                    fi += 1;
                }
                Item::Global(g) => {
                    let name = &g.name.name;
                    if self.function_ids.contains_key(name) || self.global_ids.contains_key(name)
                    {
                        return Err(self.error_at(g.name.token, format!("duplicate name `{name}`")));
                    }
                    let id = self.symbols.decls.len();
                    self.symbols.decls.push(Declaration {
                        name: name.clone(),
                        kind: SymbolKind::Global,
                        ty: g.ty,
                        params: Vec::new(),
                        token: g.name.token,
                        owner: None,
                        visible: Span::new(0, end),
                    });
                    self.symbols.uses.insert(g.name.token, id);
                    self.global_ids.insert(name.clone(), (gi, id));
                    gi += 1;
                }
            }
        }
        Ok(())
    }

    fn function(&mut self, f: &FunctionDecl, index: usize) -> Result<FunctionInfo> {
        self.current_fn = Some((index, f.ret));
        self.slot_count = 0;
        self.scopes.clear();
        self.scopes.push(HashMap::new());
        for p in &f.params {
            let slot = self.declare_local(&p.name, p.ty, SymbolKind::Param, f.body.span)?;
            debug_assert_eq!(slot + 1, self.slot_count);
        }
        let body = self.block(&f.body)?;
        if f.ret != Type::Void && !always_returns(&body) {
            return Err(self.error_at(
                f.body.span.last,
                format!("function `{}` may finish without returning a value", f.name.name),
            ));
        }
        self.scopes.clear();
        self.current_fn = None;
        Ok(FunctionInfo {
            name: f.name.name.clone(),
            token: f.name.token,
            params: f.params.iter().map(|p| p.ty).collect(),
            ret: f.ret,
            body,
            span: f.span,
            body_span: f.body.span,
            slot_count: self.slot_count,
        })
    }

    fn declare_local(
        &mut self,
        name: &Ident,
        ty: Type,
        kind: SymbolKind,
        visible: Span,
    ) -> Result<usize> {
        if self.scopes.iter().any(|s| s.contains_key(&name.name)) {
            return Err(self.error_at(
                name.token,
                format!("`{}` is already declared in this function", name.name),
            ));
        }
        let slot = self.slot_count;
        self.slot_count += 1;
        let id = self.symbols.decls.len();
        self.symbols.decls.push(Declaration {
            name: name.name.clone(),
            kind,
            ty,
            params: Vec::new(),
            token: name.token,
            owner: self.current_fn.map(|(i, _)| i),
            visible,
        });
        self.symbols.uses.insert(name.token, id);
        self.scopes.last_mut().expect("scope").insert(
            name.name.clone(),
            ScopeEntry {
                decl: id,
                var: VarRef::Local(slot),
                ty,
            },
        );
        Ok(slot)
    }

    fn block(&mut self, block: &Block) -> Result<Vec<TStmt>> {
        self.scopes.push(HashMap::new());
        let mut out = Vec::with_capacity(block.stmts.len());
        for stmt in &block.stmts {
            if out.last().is_some_and(stmt_always_returns) {
                return Err(self.error_at(stmt.span.first, "unreachable statement"));
            }
            let checked = self.stmt(stmt, block.span.last)?;
            out.push(checked);
        }
        self.scopes.pop();
        Ok(out)
    }

    fn stmt(&mut self, stmt: &Stmt, block_end: usize) -> Result<TStmt> {
        let kind = match &stmt.kind {
            StmtKind::Var { name, ty, init } => {
                let init = self.expr(init)?;
                self.expect_type(&init, *ty)?;
                let visible = Span::new(stmt.span.last + 1, block_end);
                let slot = self.declare_local(name, *ty, SymbolKind::Local, visible)?;
                TStmtKind::Decl {
                    name: name.name.clone(),
                    token: name.token,
                    slot,
                    init,
                }
            }
            StmtKind::Assign { target, value } => {
                let (var, ty) = self.lookup_var(target)?;
                let value = self.expr(value)?;
                self.expect_type(&value, ty)?;
                TStmtKind::Assign {
                    name: target.name.clone(),
                    token: target.token,
                    target: var,
                    value,
                }
            }
            StmtKind::Expr(e) => TStmtKind::Expr(self.expr_allow_void(e)?),
            StmtKind::If { cond, then, els } => {
                let cond = self.expr(cond)?;
                self.expect_type(&cond, Type::Bool)?;
                let then = self.block(then)?;
                let els = match els {
                    Some(b) => Some(self.block(b)?),
                    None => None,
                };
                TStmtKind::If { cond, then, els }
            }
            StmtKind::While { cond, body } => {
                let cond = self.expr(cond)?;
                self.expect_type(&cond, Type::Bool)?;
                TStmtKind::While {
                    cond,
                    body: self.block(body)?,
                }
            }
            StmtKind::Return(value) => {
                let (_, ret) = self.current_fn.expect("return outside function");
                match (value, ret) {
                    (None, Type::Void) => TStmtKind::Return(None),
                    (None, _) => {
                        return Err(self.error_at(
                            stmt.span.first,
                            format!("missing return value of type {ret}"),
                        ))
                    }
                    (Some(e), Type::Void) => {
                        return Err(self.error_at(
                            e.span.first,
                            "cannot return a value from a void function",
                        ))
                    }
                    (Some(e), _) => {
                        let v = self.expr(e)?;
                        self.expect_type(&v, ret)?;
                        TStmtKind::Return(Some(v))
                    }
                }
            }
            StmtKind::Block(b) => TStmtKind::Block(self.block(b)?),
        };
        Ok(TStmt {
            kind,
            span: stmt.span,
        })
    }

    fn expect_type(&self, e: &TExpr, ty: Type) -> Result<()> {
        if e.ty == ty {
            Ok(())
        } else {
            Err(self.error_at(
                e.span.first,
                format!("expected {ty}, found {}", e.ty),
            ))
        }
    }

    fn lookup_var(&mut self, name: &Ident) -> Result<(VarRef, Type)> {
        for scope in self.scopes.iter().rev() {
            if let Some(entry) = scope.get(&name.name) {
                self.symbols.uses.insert(name.token, entry.decl);
                return Ok((entry.var, entry.ty));
            }
        }
        if let Some(&(gi, id)) = self.global_ids.get(&name.name) {
            if gi < self.visible_globals {
                self.symbols.uses.insert(name.token, id);
                return Ok((VarRef::Global(gi), self.symbols.decls[id].ty));
            }
        }
        Err(self.error_at(name.token, format!("unknown variable `{}`", name.name)))
    }

    fn expr(&mut self, e: &Expr) -> Result<TExpr> {
        let te = self.expr_allow_void(e)?;
        if te.ty == Type::Void {
            return Err(self.error_at(e.span.first, "void value used in an expression"));
        }
        Ok(te)
    }

    fn expr_allow_void(&mut self, e: &Expr) -> Result<TExpr> {
        let (kind, ty) = match &e.kind {
            ExprKind::Literal { token } => {
                let value = self.literal(*token)?;
                let ty = value.ty();
                (
                    TExprKind::Literal {
                        token: *token,
                        value,
                    },
                    ty,
                )
            }
            ExprKind::Var(name) => {
                let (var, ty) = self.lookup_var(name)?;
                (
                    TExprKind::Var {
                        name: name.name.clone(),
                        token: name.token,
                        var,
                    },
                    ty,
                )
            }
            ExprKind::Paren(inner) => {
                let inner = self.expr(inner)?;
                let ty = inner.ty;
                (TExprKind::Paren(Box::new(inner)), ty)
            }
            ExprKind::Unary {
                op,
                op_token,
                operand,
            } => {
                let operand = self.expr(operand)?;
                let ok = match op {
                    UnaryOp::Neg => operand.ty.is_numeric(),
                    UnaryOp::Not => operand.ty == Type::Bool,
                };
                if !ok {
                    return Err(self.error_at(
                        *op_token,
                        format!("operator `{}` cannot be applied to {}", op.lexeme(), operand.ty),
                    ));
                }
                let ty = operand.ty;
                (
                    TExprKind::Unary {
                        op: *op,
                        op_token: *op_token,
                        operand: Box::new(operand),
                    },
                    ty,
                )
            }
            ExprKind::Binary {
                op,
                op_token,
                lhs,
                rhs,
            } => {
                let lhs = self.expr(lhs)?;
                let rhs = self.expr(rhs)?;
                let ty = binary_result(*op, lhs.ty, rhs.ty).ok_or_else(|| {
                    self.error_at(
                        *op_token,
                        format!(
                            "operator `{}` cannot be applied to {} and {}",
                            op.lexeme(),
                            lhs.ty,
                            rhs.ty
                        ),
                    )
                })?;
                (
                    TExprKind::Binary {
                        op: *op,
                        op_token: *op_token,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    },
                    ty,
                )
            }
            ExprKind::Call { callee, args } => {
                let Some(&(fi, id)) = self.function_ids.get(&callee.name) else {
                    return Err(
                        self.error_at(callee.token, format!("unknown function `{}`", callee.name))
                    );
                };
                let (params, ret) = self.functions[fi].clone();
                if params.len() != args.len() {
                    return Err(self.error_at(
                        callee.token,
                        format!(
                            "`{}` expects {} argument(s), found {}",
                            callee.name,
                            params.len(),
                            args.len()
                        ),
                    ));
                }
                let mut targs = Vec::with_capacity(args.len());
                for (a, p) in args.iter().zip(&params) {
                    let ta = self.expr(a)?;
                    self.expect_type(&ta, *p)?;
                    targs.push(ta);
                }
                self.symbols.uses.insert(callee.token, id);
                (
                    TExprKind::Call {
                        name: callee.name.clone(),
                        token: callee.token,
                        func: fi,
                        args: targs,
                    },
                    ret,
                )
            }
        };
        Ok(TExpr {
            kind,
            ty,
            span: e.span,
        })
    }

    fn literal(&self, token: usize) -> Result<Value> {
        let t = &self.tokens.tokens[token];
        Ok(match t.kind {
            TokenKind::IntLiteral => Value::Int(
                t.lexeme
                    .parse::<i64>()
                    .map_err(|_| self.error_at(token, "integer literal out of range"))?,
            ),
            TokenKind::FloatLiteral => {
                let v: f64 = t
                    .lexeme
                    .parse()
                    .map_err(|_| self.error_at(token, "malformed float literal"))?;
                if !v.is_finite() {
                    return Err(self.error_at(token, "float literal out of range"));
                }
                Value::Float(v)
            }
            TokenKind::BoolLiteral => Value::Bool(t.lexeme == "true"),
            TokenKind::StringLiteral => Value::String(unescape_string(&t.lexeme)),
            _ => unreachable!("parser only builds literals from literal tokens"),
        })
    }
}

/// Result type of a binary operator, or `None` when the operands are not accepted.
pub fn binary_result(op: BinaryOp, lhs: Type, rhs: Type) -> Option<Type> {
    use BinaryOp::*;
    if lhs != rhs || lhs == Type::Void {
        return None;
    }
    let t = lhs;
    match op {
        Add if t == Type::String => Some(t),
        Add | Sub | Mul | Div | Rem if t.is_numeric() => Some(t),
        Eq | Ne => Some(Type::Bool),
        Lt | Le | Gt | Ge if t != Type::Bool => Some(Type::Bool),
        And | Or if t == Type::Bool => Some(t),
        BitAnd | BitOr | BitXor if matches!(t, Type::Int | Type::Bool) => Some(t),
        Shl | Shr if t == Type::Int => Some(t),
        _ => None,
    }
}

pub fn stmt_always_returns(stmt: &TStmt) -> bool {
    match &stmt.kind {
        TStmtKind::Return(_) => true,
        TStmtKind::If {
            then,
            els: Some(els),
            ..
        } => always_returns(then) && always_returns(els),
        TStmtKind::Block(b) => always_returns(b),
        _ => false,
    }
}

pub fn always_returns(stmts: &[TStmt]) -> bool {
    stmts.last().is_some_and(stmt_always_returns)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compile(src: &str) -> Result<TypedProgram> {
        TypedProgram::compile(src)
    }

    fn names(decls: &[&Declaration]) -> Vec<String> {
        let mut v: Vec<String> = decls.iter().map(|d| d.name.clone()).collect();
        v.sort();
        v
    }

    fn token_of(p: &TypedProgram, lexeme: &str, nth: usize) -> usize {
        p.tokens
            .tokens
            .iter()
            .filter(|t| t.lexeme == lexeme)
            .nth(nth)
            .unwrap()
            .index
    }

    #[test]
    fn homogeneous_arithmetic() {
        let p = compile("fn f(a: int, b: int) -> int { return a + b; }").unwrap();
        let TStmtKind::Return(Some(e)) = &p.functions[0].body[0].kind else {
            panic!()
        };
        assert_eq!(e.ty, Type::Int);
    }

    #[test]
    fn operand_mismatch_rejected() {
        assert!(matches!(
            compile("var g: int = 1 + true;"),
            Err(Error::Type { .. })
        ));
        assert!(matches!(
            compile("fn f() -> float { return 1 + 2.0; }"),
            Err(Error::Type { .. })
        ));
    }

    #[test]
    fn call_argument_type_checked() {
        let err = compile("fn f(x: int) -> int { return x; } fn g() -> int { return f(1.5); }");
        assert!(matches!(err, Err(Error::Type { .. })));
        let arity = compile("fn f(x: int) -> int { return x; } fn g() -> int { return f(); }");
        assert!(matches!(arity, Err(Error::Type { .. })));
    }

    #[test]
    fn unknown_identifier_and_wrong_return() {
        assert!(compile("fn f() -> int { return y; }").is_err());
        assert!(compile("fn f() -> int { return true; }").is_err());
        assert!(compile("fn f() { return 1; }").is_err());
        assert!(compile("fn f() -> int { }").is_err());
    }

    #[test]
    fn all_paths_return_and_unreachable() {
        assert!(compile("fn f(x: int) -> int { if (x > 0) { return 1; } else { return 2; } }").is_ok());
        assert!(compile("fn f(x: int) -> int { if (x > 0) { return 1; } }").is_err());
        assert!(compile("fn f(x: int) -> int { while (x > 0) { return 1; } }").is_err());
        assert!(compile("fn f() -> int { return 1; return 2; }").is_err());
    }

    #[test]
    fn scope_inside_function_body() {
        let p = compile("var g: string = \"s\";\nfn f(a: int) { var b: int = 0; b = a; }").unwrap();
        let here = token_of(&p, "b", 1);
        assert_eq!(names(&p.symbols_in_scope(here)), ["a", "b", "f", "g"]);
        let before_b = token_of(&p, "0", 0);
        assert_eq!(names(&p.symbols_in_scope(before_b)), ["a", "f", "g"]);
    }

    #[test]
    fn scope_in_global_initializer_sees_earlier_globals_only() {
        let p = compile("var a: int = 1;\nvar b: int = a + 1;\nvar c: int = 2;\nfn f() {}").unwrap();
        let at = token_of(&p, "a", 1);
        assert_eq!(names(&p.symbols_in_scope(at)), ["a", "f"]);
        assert!(compile("var a: int = b;\nvar b: int = 1;").is_err());
    }

    #[test]
    fn outside_any_scope_gives_globals_and_functions() {
        let p = compile("var a: int = 1;\nfn f(x: int) {}").unwrap();
        let fn_kw = token_of(&p, "fn", 0);
        assert_eq!(names(&p.symbols_in_scope(fn_kw)), ["a", "f"]);
    }

    #[test]
    fn locals_shadow_globals_but_not_locals() {
        let p = compile("var x: int = 1;\nfn f() -> int { var x: int = 2; return x; }").unwrap();
        let use_x = token_of(&p, "x", 2);
        let scope = p.symbols_in_scope(use_x);
        let xs: Vec<_> = scope.iter().filter(|d| d.name == "x").collect();
        assert_eq!(xs.len(), 1);
        assert_eq!(xs[0].kind, SymbolKind::Local);
        assert_eq!(p.symbols.resolve(use_x).unwrap().kind, SymbolKind::Local);
        assert!(compile("fn f(x: int) { var x: int = 2; }").is_err());
        assert!(compile("fn f() { { var y: int = 1; } var y: int = 2; }").is_ok());
    }

    #[test]
    fn void_values_rejected_in_expressions() {
        assert!(compile("fn g() {} fn f() { g(); }").is_ok());
        assert!(compile("fn g() {} fn f() -> int { var x: int = g(); return x; }").is_err());
    }

    #[test]
    fn operator_table() {
        use BinaryOp::*;
        assert_eq!(binary_result(Add, Type::String, Type::String), Some(Type::String));
        assert_eq!(binary_result(Sub, Type::String, Type::String), None);
        assert_eq!(binary_result(Lt, Type::Bool, Type::Bool), None);
        assert_eq!(binary_result(Eq, Type::Bool, Type::Bool), Some(Type::Bool));
        assert_eq!(binary_result(BitXor, Type::Bool, Type::Bool), Some(Type::Bool));
        assert_eq!(binary_result(Shl, Type::Float, Type::Float), None);
        assert_eq!(binary_result(Rem, Type::Float, Type::Float), Some(Type::Float));
    }
}
