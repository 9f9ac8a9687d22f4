use crate::minilang::check::{SymbolKind, TExprKind, TStmtKind};
use crate::minilang::{Span, Type};

use super::sites::{walk_root, GenContext, Root};
use super::{Mutant, Operator};

/// Variables of type `ty` visible at `token`, other than `name`, sorted by name.
pub(crate) fn same_type_vars(ctx: &GenContext<'_>, token: usize, ty: Type, name: &str) -> Vec<String> {
    let mut names: Vec<String> = ctx
        .program
        .symbols_in_scope(token)
        .into_iter()
        .filter(|d| d.kind != SymbolKind::Function && d.ty == ty && d.name != name)
        .map(|d| d.name.clone())
        .collect();
    names.sort();
    names.dedup();
    names
}

/// Replaces each variable use, assignment targets included, by every other in-scope variable of
/// the same type.
pub fn generate_var(ctx: &GenContext<'_>) -> Vec<Mutant> {
    let mut out = Vec::new();
    for root in ctx.roots() {
        let mut uses: Vec<(usize, String, Type)> = Vec::new();
        if let Root::Stmt(s) = root {
            if let TStmtKind::Assign { name, token, value, .. } = &s.kind {
                uses.push((*token, name.clone(), value.ty));
            }
        }
        walk_root(&root, &mut |e, _| {
            if let TExprKind::Var { name, token, .. } = &e.kind {
                uses.push((*token, name.clone(), e.ty));
            }
        });
        for (token, name, ty) in uses {
            for candidate in same_type_vars(ctx, token, ty, &name) {
                out.extend(ctx.mutant(Operator::VAR, token, Span::single(token), &candidate));
            }
        }
    }
    out
}

/// Replaces each callee by every other function with an identical signature.
pub fn generate_mcr(ctx: &GenContext<'_>) -> Vec<Mutant> {
    let functions = &ctx.program.functions;
    let mut out = Vec::new();
    for root in ctx.roots() {
        walk_root(&root, &mut |e, _| {
            if let TExprKind::Call { token, func, .. } = &e.kind {
                let callee = &functions[*func];
                for other in functions {
                    if other.name != callee.name && other.same_signature(callee) {
                        out.extend(ctx.mutant(Operator::MCR, *token, Span::single(*token), &other.name));
                    }
                }
            }
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::build_cfg;
    use crate::minilang::TypedProgram;

    fn run(src: &str, f: fn(&GenContext<'_>) -> Vec<Mutant>) -> Vec<(String, String)> {
        let p = TypedProgram::compile(src).unwrap();
        let cfgs = build_cfg(&p);
        let ctx = GenContext::new(&p, &cfgs);
        f(&ctx)
            .into_iter()
            .map(|m| (m.original, m.replacement))
            .collect()
    }

    fn pairs(v: &[(&str, &str)]) -> Vec<(String, String)> {
        v.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn var_uses_scope_and_type() {
        let src = "var g: int = 0;\nvar s: string = \"\";\nfn f(a: int, b: float) -> int { var c: int = a; c = g; return c; }";
        assert_eq!(
            run(src, generate_var),
            pairs(&[
                ("a", "g"),
                ("c", "a"),
                ("c", "g"),
                ("g", "a"),
                ("g", "c"),
                ("c", "a"),
                ("c", "g"),
            ])
        );
    }

    #[test]
    fn var_in_global_initializer_sees_earlier_globals_only() {
        let src = "var a: int = 1;\nvar b: int = 2;\nvar c: int = b;\nvar d: int = 4;\nfn f() {}";
        assert_eq!(run(src, generate_var), pairs(&[("b", "a")]));
    }

    #[test]
    fn local_hides_global_of_same_name() {
        let src = "var x: int = 0;\nvar y: int = 0;\nfn f(x: int) -> int { return y; }";
        assert_eq!(run(src, generate_var), pairs(&[("y", "x")]));
    }

    #[test]
    fn mcr_same_signature_in_declaration_order() {
        let src = "fn max(a: int, b: int) -> int { return a; }\nfn min(a: int, b: int) -> int { return b; }\nfn neg(a: int) -> int { return -a; }\nfn sum(a: int, b: int) -> int { return a + b; }\nfn g() -> int { return max(1, neg(2)); }";
        assert_eq!(
            run(src, generate_mcr),
            pairs(&[("max", "min"), ("max", "sum")])
        );
    }
}
