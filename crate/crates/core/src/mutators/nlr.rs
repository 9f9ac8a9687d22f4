use std::collections::{BTreeMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::minilang::check::TExprKind;
use crate::minilang::lexer::unescape_string;
use crate::minilang::{Span, TokenKind, TokenStream, Type, TypedProgram};

use super::sites::{walk_root, GenContext};
use super::tailored::same_type_vars;
use super::{Mutant, Operator};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Continuation {
    kind: Option<TokenKind>,
    /// `(stream, position of the third token)`.
    occurrences: Vec<(usize, usize)>,
}

/// Token trigrams of a corpus, keyed by their two-token prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrigramIndex {
    table: BTreeMap<(String, String), BTreeMap<String, Continuation>>,
    subject: Option<usize>,
    streams: usize,
}

/// Indexes every consecutive token triple of each stream; triples never span two streams.
pub fn build_trigram_index(streams: &[&TokenStream]) -> TrigramIndex {
    let mut index = TrigramIndex {
        streams: streams.len(),
        ..TrigramIndex::default()
    };
    for (s, stream) in streams.iter().enumerate() {
        for (i, w) in stream.tokens.windows(3).enumerate() {
            let c = index
                .table
                .entry((w[0].lexeme.clone(), w[1].lexeme.clone()))
                .or_default()
                .entry(w[2].lexeme.clone())
                .or_default();
            c.kind = Some(w[2].kind);
            c.occurrences.push((s, i + 2));
        }
    }
    index
}

impl TrigramIndex {
    /// Index over the program (stream 0, the subject) followed by the extra corpus streams.
    pub fn for_program(program: &TypedProgram, corpus: &[TokenStream]) -> TrigramIndex {
        let mut streams = vec![&program.tokens];
        streams.extend(corpus);
        let mut index = build_trigram_index(&streams);
        index.subject = Some(0);
        index
    }

    /// The stream whose mutation sites are excluded at query time.
    pub fn subject(&self) -> Option<usize> {
        self.subject
    }

    pub fn stream_count(&self) -> usize {
        self.streams
    }

    pub fn prefix_count(&self) -> usize {
        self.table.len()
    }

    /// Third tokens seen after `(a, b)` with their multiplicities, in lexeme order.
    pub fn continuations(&self, a: &str, b: &str) -> Vec<(String, usize)> {
        self.lookup(a, b, None)
            .into_iter()
            .map(|(lexeme, _, n)| (lexeme, n))
            .collect()
    }

    /// Like [`continuations`](Self::continuations) but ignoring the occurrence at `site` of the
    /// subject stream.
    fn lookup(&self, a: &str, b: &str, site: Option<usize>) -> Vec<(String, Option<TokenKind>, usize)> {
        let Some(next) = self.table.get(&(a.to_string(), b.to_string())) else {
            return Vec::new();
        };
        next.iter()
            .map(|(lexeme, c)| {
                let n = c
                    .occurrences
                    .iter()
                    .filter(|&&(s, pos)| !(Some(s) == self.subject && Some(pos) == site))
                    .count();
                (lexeme.clone(), c.kind, n)
            })
            .filter(|(_, _, n)| *n > 0)
            .collect()
    }
}

/// Normal form of a numeric literal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CanonicalNumber {
    Int(i64),
    Float(f64),
}

impl fmt::Display for CanonicalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CanonicalNumber::Int(i) => write!(f, "{i}"),
            CanonicalNumber::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Folds the sign, evaluates the exponent and drops redundant zeros. Lexemes without `.` or an
/// exponent are integers.
pub fn canonicalize_numeric_literal(lexeme: &str) -> Result<CanonicalNumber> {
    let malformed = || Error::MalformedLiteral(lexeme.to_string());
    let body = lexeme.strip_prefix(['-', '+']).unwrap_or(lexeme);
    if !body.starts_with(|c: char| c.is_ascii_digit())
        || !body
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
    {
        return Err(malformed());
    }
    if body.chars().all(|c| c.is_ascii_digit()) {
        return lexeme
            .parse::<i64>()
            .map(CanonicalNumber::Int)
            .map_err(|_| malformed());
    }
    let x: f64 = lexeme.parse().map_err(|_| malformed())?;
    if !x.is_finite() {
        return Err(malformed());
    }
    Ok(CanonicalNumber::Float(if x == 0.0 { 0.0 } else { x }))
}

/// Identity of a candidate for deduplication.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Canon {
    Int(i64),
    Float(u64),
    Bool(bool),
    Str(String),
    Ident(String),
}

fn canon_literal(lexeme: &str, kind: TokenKind) -> Option<Canon> {
    match kind {
        TokenKind::IntLiteral | TokenKind::FloatLiteral => {
            match canonicalize_numeric_literal(lexeme).ok()? {
                CanonicalNumber::Int(i) => Some(Canon::Int(i)),
                CanonicalNumber::Float(x) => Some(Canon::Float(x.to_bits())),
            }
        }
        TokenKind::BoolLiteral => Some(Canon::Bool(lexeme == "true")),
        TokenKind::StringLiteral => Some(Canon::Str(unescape_string(lexeme))),
        _ => None,
    }
}

fn literal_kind(ty: Type) -> Option<TokenKind> {
    match ty {
        Type::Int => Some(TokenKind::IntLiteral),
        Type::Float => Some(TokenKind::FloatLiteral),
        Type::Bool => Some(TokenKind::BoolLiteral),
        Type::String => Some(TokenKind::StringLiteral),
        Type::Void => None,
    }
}

fn is_primitive(ty: Type) -> bool {
    matches!(ty, Type::Int | Type::Float | Type::Bool)
}

/// Replaces literals and primitive variable reads by literals that follow the same two-token
/// prefix elsewhere in the corpus; literal sites also get same-typed primitive variables.
pub fn generate_nlr(ctx: &GenContext<'_>, index: &TrigramIndex) -> Vec<Mutant> {
    let mut out = Vec::new();
    for root in ctx.roots() {
        walk_root(&root, &mut |e, _| {
            let (token, original, is_literal) = match &e.kind {
                TExprKind::Literal { token, .. } => {
                    let kind = ctx.program.tokens.tokens[*token].kind;
                    match canon_literal(ctx.lexeme(*token), kind) {
                        Some(c) => (*token, c, true),
                        None => return,
                    }
                }
                TExprKind::Var { name, token, .. } if is_primitive(e.ty) => {
                    (*token, Canon::Ident(name.clone()), false)
                }
                _ => return,
            };
            if token < 2 {
                return;
            }
            let Some(want) = literal_kind(e.ty) else {
                return;
            };
            let mut found: Vec<(String, Canon, usize)> = index
                .lookup(ctx.lexeme(token - 2), ctx.lexeme(token - 1), Some(token))
                .into_iter()
                .filter(|(_, kind, _)| *kind == Some(want))
                .filter_map(|(lexeme, _, n)| canon_literal(&lexeme, want).map(|c| (lexeme, c, n)))
                .collect();
            found.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
            let mut candidates: Vec<(String, Canon)> =
                found.into_iter().map(|(l, c, _)| (l, c)).collect();
            if is_literal && is_primitive(e.ty) {
                candidates.extend(
                    same_type_vars(ctx, token, e.ty, "")
                        .into_iter()
                        .map(|name| (name.clone(), Canon::Ident(name))),
                );
            }
            let mut seen = HashSet::from([original]);
            for (lexeme, canon) in candidates {
                if seen.insert(canon) {
                    out.extend(ctx.mutant(Operator::NLR, token, Span::single(token), &lexeme));
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
    use crate::minilang::tokenize;

    #[test]
    fn index_slides_over_each_stream() {
        let s = tokenize("a b c b c d").unwrap();
        let index = build_trigram_index(&[&s]);
        assert_eq!(index.continuations("b", "c"), [("b".to_string(), 1), ("d".to_string(), 1)]);
        assert_eq!(index.continuations("a", "b"), [("c".to_string(), 1)]);
        let short = tokenize("a b").unwrap();
        assert_eq!(build_trigram_index(&[&short]).prefix_count(), 0);
        let dup = tokenize("x y z x y z").unwrap();
        assert_eq!(build_trigram_index(&[&dup]).continuations("x", "y"), [("z".to_string(), 2)]);
    }

    #[test]
    fn streams_do_not_join() {
        let a = tokenize("p q").unwrap();
        let b = tokenize("r s").unwrap();
        assert_eq!(build_trigram_index(&[&a, &b]).prefix_count(), 0);
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(canonicalize_numeric_literal("-0").unwrap(), CanonicalNumber::Int(0));
        assert_eq!(canonicalize_numeric_literal("007").unwrap(), CanonicalNumber::Int(7));
        assert_eq!(canonicalize_numeric_literal("1e-1").unwrap(), CanonicalNumber::Float(0.1));
        assert_eq!(canonicalize_numeric_literal("10e-1").unwrap(), CanonicalNumber::Float(1.0));
        assert_eq!(canonicalize_numeric_literal("-0.0").unwrap().to_string(), "0");
        assert_eq!(canonicalize_numeric_literal("2.50").unwrap().to_string(), "2.5");
        for bad in ["", "-", "abc", "1e", "inf", "NaN", "--1", "1x", "99999999999999999999"] {
            assert!(canonicalize_numeric_literal(bad).is_err(), "{bad}");
        }
    }

    fn nlr(src: &str, corpus: &[&str]) -> Vec<(String, String)> {
        let p = TypedProgram::compile(src).unwrap();
        let cfgs = build_cfg(&p);
        let corpus: Vec<_> = corpus.iter().map(|c| tokenize(c).unwrap()).collect();
        let index = TrigramIndex::for_program(&p, &corpus);
        let ctx = GenContext::new(&p, &cfgs);
        generate_nlr(&ctx, &index)
            .into_iter()
            .map(|m| (m.original, m.replacement))
            .collect()
    }

    #[test]
    fn string_literal_from_corpus() {
        let src = "fn f(s: string) -> string { return s + \"[]\"; }";
        let got = nlr(src, &["fn g(s: string) -> string { return s + \"[\"; }"]);
        assert_eq!(got, [("\"[]\"".to_string(), "\"[\"".to_string())]);
    }

    #[test]
    fn signed_zero_is_one_candidate() {
        let src = "fn f(x: int) -> int { return x * 5; }";
        let got = nlr(src, &["x * -0", "x * 0"]);
        assert_eq!(
            got,
            [("5".to_string(), "-0".to_string()), ("5".to_string(), "x".to_string())]
        );
    }

    #[test]
    fn site_itself_is_not_a_candidate() {
        let src = "fn f() -> int { return 5; }";
        assert!(nlr(src, &[]).is_empty());
        // the same trigram elsewhere in the program counts
        let src = "fn f() -> int { return 5; }\nfn g() -> int { return 6; }";
        assert_eq!(
            nlr(src, &[]),
            [("5".to_string(), "6".to_string()), ("6".to_string(), "5".to_string())]
        );
    }

    #[test]
    fn literal_sites_get_variables_and_variable_sites_do_not() {
        let src = "fn f(a: int, b: int) -> int { return a + 1; }";
        assert_eq!(
            nlr(src, &[]),
            [("1".to_string(), "a".to_string()), ("1".to_string(), "b".to_string())]
        );
        let src = "fn f(a: int, b: int) -> int { return b + a; }";
        assert_eq!(nlr(src, &["return b + 3;"]), [("a".to_string(), "3".to_string())]);
    }

    #[test]
    fn frequency_orders_candidates() {
        let src = "fn f(x: float) -> float { return x * 2.0; }";
        let got = nlr(src, &["x * 0.5", "x * 3.0", "x * 3.0"]);
        assert_eq!(
            got,
            [
                ("2.0".to_string(), "3.0".to_string()),
                ("2.0".to_string(), "0.5".to_string()),
                ("2.0".to_string(), "x".to_string()),
            ]
        );
    }
}
