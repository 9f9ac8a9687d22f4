use crate::cfg::Cfg;
use crate::minilang::check::{GlobalInfo, TExpr, TExprKind, TStmt, TStmtKind, TypedProgram};
use crate::minilang::Span;

use super::{Mutant, MutantId, Operator};

/// Shared state for the generators: the program and a token → CFG node map.
pub struct GenContext<'a> {
    pub program: &'a TypedProgram,
    pub cfgs: &'a [Cfg],
    node_of_token: Vec<Option<(usize, usize)>>,
}

/// A CFG node's syntax: a simple statement, a branch condition or a global initializer.
#[derive(Clone, Copy)]
pub(crate) enum Root<'a> {
    Stmt(&'a TStmt),
    Cond(&'a TExpr),
    Global(&'a GlobalInfo),
}

impl<'a> Root<'a> {
    fn first_token(&self) -> usize {
        match self {
            Root::Stmt(s) => s.span.first,
            Root::Cond(e) => e.span.first,
            Root::Global(g) => g.span.first,
        }
    }

    /// Top-level expressions of the node.
    pub(crate) fn exprs(&self) -> Vec<&'a TExpr> {
        match self {
            Root::Stmt(s) => match &s.kind {
                TStmtKind::Decl { init, .. } => vec![init],
                TStmtKind::Assign { value, .. } => vec![value],
                TStmtKind::Expr(e) => vec![e],
                TStmtKind::Return(Some(e)) => vec![e],
                _ => vec![],
            },
            Root::Cond(e) => vec![e],
            Root::Global(g) => g.init.iter().collect(),
        }
    }
}

impl<'a> GenContext<'a> {
    pub fn new(program: &'a TypedProgram, cfgs: &'a [Cfg]) -> Self {
        let mut node_of_token = vec![None; program.tokens.len()];
        for (ci, g) in cfgs.iter().enumerate() {
            for n in g.executable_nodes() {
                if let Some(span) = n.span {
                    for slot in &mut node_of_token[span.first..=span.last] {
                        *slot = Some((ci, n.id));
                    }
                }
            }
        }
        GenContext {
            program,
            cfgs,
            node_of_token,
        }
    }

    /// The `(cfg index, node id)` whose span contains `token`.
    pub fn node_at(&self, token: usize) -> Option<(usize, usize)> {
        self.node_of_token.get(token).copied().flatten()
    }

    pub(crate) fn roots(&self) -> Vec<Root<'a>> {
        fn collect<'b>(stmts: &'b [TStmt], out: &mut Vec<Root<'b>>) {
            for s in stmts {
                match &s.kind {
                    TStmtKind::If { cond, then, els } => {
                        out.push(Root::Cond(cond));
                        collect(then, out);
                        if let Some(els) = els {
                            collect(els, out);
                        }
                    }
                    TStmtKind::While { cond, body } => {
                        out.push(Root::Cond(cond));
                        collect(body, out);
                    }
                    TStmtKind::Block(b) => collect(b, out),
                    _ => out.push(Root::Stmt(s)),
                }
            }
        }
        let mut roots = Vec::new();
        for f in &self.program.functions {
            collect(&f.body, &mut roots);
        }
        roots.extend(
            self.program
                .globals
                .iter()
                .filter(|g| g.init.is_some())
                .map(Root::Global),
        );
        roots.sort_by_key(|r| r.first_token());
        roots
    }

    pub(crate) fn text(&self, span: Span) -> String {
        self.program
            .tokens
            .text(&self.program.source, span.first, span.last)
    }

    pub(crate) fn lexeme(&self, token: usize) -> &'a str {
        &self.program.tokens.tokens[token].lexeme
    }

    /// Builds a mutant rewriting `span`; `None` when the anchor lies outside every CFG node.
    pub(crate) fn mutant(
        &self,
        operator: Operator,
        anchor: usize,
        span: Span,
        replacement: &str,
    ) -> Option<Mutant> {
        let (ci, node) = self.node_at(anchor)?;
        let tokens = &self.program.tokens.tokens;
        let source = &self.program.source;
        let start = tokens[span.first].offset;
        let end = tokens[span.last].end();
        let replacement = pad(
            source[..start].chars().next_back(),
            replacement,
            source[end..].chars().next(),
        );
        let t = &tokens[anchor];
        Some(Mutant {
            id: MutantId::new(operator, anchor, &replacement),
            operator,
            kind_class: operator.class(),
            cfg_owner: self.cfgs[ci].owner.clone(),
            cfg_node: node,
            token_index: anchor,
            span,
            original: source[start..end].to_string(),
            replacement,
            line: t.line,
            col: t.col,
        })
    }
}

fn is_word(c: Option<char>) -> bool {
    c.is_some_and(|c| c.is_alphanumeric() || c == '_' || c == '.')
}

/// Keeps neighbouring tokens from fusing once the span is rewritten.
fn pad(before: Option<char>, replacement: &str, after: Option<char>) -> String {
    if replacement.is_empty() {
        return if is_word(before) && is_word(after) {
            " ".to_string()
        } else {
            String::new()
        };
    }
    let mut out = String::new();
    if is_word(before) && is_word(replacement.chars().next()) {
        out.push(' ');
    }
    out.push_str(replacement);
    if is_word(after) && is_word(replacement.chars().next_back()) {
        out.push(' ');
    }
    out
}

/// Pre-order walk passing each expression with its parent.
pub(crate) fn walk_expr<'e>(
    e: &'e TExpr,
    parent: Option<&'e TExpr>,
    f: &mut impl FnMut(&'e TExpr, Option<&'e TExpr>),
) {
    f(e, parent);
    match &e.kind {
        TExprKind::Literal { .. } | TExprKind::Var { .. } => {}
        TExprKind::Unary { operand, .. } => walk_expr(operand, Some(e), f),
        TExprKind::Binary { lhs, rhs, .. } => {
            walk_expr(lhs, Some(e), f);
            walk_expr(rhs, Some(e), f);
        }
        TExprKind::Call { args, .. } => {
            for a in args {
                walk_expr(a, Some(e), f);
            }
        }
        TExprKind::Paren(inner) => walk_expr(inner, Some(e), f),
    }
}

pub(crate) fn walk_root<'e>(root: &Root<'e>, f: &mut impl FnMut(&'e TExpr, Option<&'e TExpr>)) {
    for e in root.exprs() {
        walk_expr(e, None, f);
    }
}
