use crate::minilang::ast::{BinaryOp, UnaryOp};
use crate::minilang::check::{binary_result, TExpr, TExprKind, TStmtKind, TypedProgram};
use crate::minilang::{Span, Value};

use super::sites::{walk_root, GenContext, Root};
use super::{apply_mutant, Mutant, Operator};

const RELATIONAL: [BinaryOp; 6] = [
    BinaryOp::Lt,
    BinaryOp::Le,
    BinaryOp::Gt,
    BinaryOp::Ge,
    BinaryOp::Eq,
    BinaryOp::Ne,
];
const ARITHMETIC: [BinaryOp; 5] = [
    BinaryOp::Add,
    BinaryOp::Sub,
    BinaryOp::Mul,
    BinaryOp::Div,
    BinaryOp::Rem,
];
const LOGICAL: [BinaryOp; 2] = [BinaryOp::And, BinaryOp::Or];
const BITWISE: [BinaryOp; 3] = [BinaryOp::BitAnd, BinaryOp::BitOr, BinaryOp::BitXor];
const SHIFT: [BinaryOp; 2] = [BinaryOp::Shl, BinaryOp::Shr];

/// ROR, COR, AOR, ORU, LOR, SOR, STD and LVR mutants in source order.
pub fn generate_traditional(ctx: &GenContext<'_>) -> Vec<Mutant> {
    let mut out = Vec::new();
    for root in ctx.roots() {
        if let Root::Stmt(s) = root {
            if matches!(
                s.kind,
                TStmtKind::Assign { .. } | TStmtKind::Expr(_) | TStmtKind::Return(_)
            ) {
                if let Some(m) = ctx.mutant(Operator::STD, s.span.first, s.span, "") {
                    if still_compiles(ctx.program, &m) {
                        out.push(m);
                    }
                }
            }
        }
        walk_root(&root, &mut |e, parent| expr_mutants(ctx, e, parent, &mut out));
    }
    out
}

fn still_compiles(program: &TypedProgram, m: &Mutant) -> bool {
    apply_mutant(&program.source, m)
        .and_then(|src| TypedProgram::compile(&src))
        .is_ok()
}

fn expr_mutants(ctx: &GenContext<'_>, e: &TExpr, parent: Option<&TExpr>, out: &mut Vec<Mutant>) {
    let mut push = |op: Operator, anchor: usize, span: Span, replacement: &str| {
        if let Some(m) = ctx.mutant(op, anchor, span, replacement) {
            if m.replacement != m.original {
                out.push(m);
            }
        }
    };
    match &e.kind {
        TExprKind::Binary {
            op,
            op_token,
            lhs,
            rhs,
        } => {
            let (family, operator) = if op.is_relational() {
                (&RELATIONAL[..], Operator::ROR)
            } else if op.is_arithmetic() {
                (&ARITHMETIC[..], Operator::AOR)
            } else if op.is_logical() {
                (&LOGICAL[..], Operator::COR)
            } else if op.is_bitwise() {
                (&BITWISE[..], Operator::LOR)
            } else {
                (&SHIFT[..], Operator::SOR)
            };
            for &alt in family {
                if alt != *op && binary_result(alt, lhs.ty, rhs.ty) == Some(e.ty) {
                    push(operator, *op_token, Span::single(*op_token), alt.lexeme());
                }
            }
            if operator == Operator::COR {
                push(operator, *op_token, e.span, &ctx.text(lhs.span));
                push(operator, *op_token, e.span, &ctx.text(rhs.span));
                push(operator, *op_token, e.span, "true");
                push(operator, *op_token, e.span, "false");
            }
        }
        TExprKind::Unary { op_token, .. } => {
            push(Operator::ORU, *op_token, Span::single(*op_token), "");
        }
        TExprKind::Var { name, token, .. } => {
            let negated = matches!(
                parent.map(|p| &p.kind),
                Some(TExprKind::Unary {
                    op: UnaryOp::Neg,
                    ..
                })
            );
            if e.ty.is_numeric() && !negated {
                push(Operator::ORU, *token, Span::single(*token), &format!("-{name}"));
            }
        }
        TExprKind::Literal { token, value } => {
            for lexeme in literal_values(value) {
                push(Operator::LVR, *token, Span::single(*token), &lexeme);
            }
        }
        TExprKind::Call { .. } | TExprKind::Paren(_) => {}
    }
}

fn literal_values(v: &Value) -> Vec<String> {
    match v {
        Value::Int(i) => [-1i64, 0, 1]
            .into_iter()
            .filter(|c| c != i)
            .map(|c| c.to_string())
            .collect(),
        Value::Float(f) => [(-1.0, "-1.0"), (0.0, "0.0"), (1.0, "1.0")]
            .into_iter()
            .filter(|(c, _)| c != f)
            .map(|(_, s)| s.to_string())
            .collect(),
        Value::Bool(b) => vec![(!b).to_string()],
        Value::String(s) if !s.is_empty() => vec!["\"\"".to_string()],
        _ => vec![],
    }
}
