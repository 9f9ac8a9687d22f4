//! Lossless tokenizer for MiniLang.
//!
//! Whitespace and comments are kept as leading trivia on the following token (or as trailing
//! trivia of the stream), so `detokenize(tokenize(s)) == s` for every lexable `s`.
//!
//! A `-` that directly precedes a digit in operand position is lexed as part of a signed numeric
//! literal (`return -1;` yields the single literal `-1`), while `a -1` and `a - 1` lex as a
//! binary minus. This keeps every literal a single token, which the literal operators rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenKind {
    Identifier,
    IntLiteral,
    FloatLiteral,
    StringLiteral,
    BoolLiteral,
    Operator,
    Keyword,
    Punctuation,
}

impl TokenKind {
    pub fn is_literal(self) -> bool {
        matches!(
            self,
            TokenKind::IntLiteral
                | TokenKind::FloatLiteral
                | TokenKind::StringLiteral
                | TokenKind::BoolLiteral
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub col: usize,
    /// Position in the token stream, 0-based and contiguous.
    pub index: usize,
    /// Byte offset of the lexeme in the source.
    pub offset: usize,
    /// Whitespace and comments preceding the lexeme.
    pub leading: String,
}

impl Token {
    pub fn end(&self) -> usize {
        self.offset + self.lexeme.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    /// Trivia after the last token.
    pub trailing: String,
}

impl TokenStream {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&Token> {
        self.tokens.get(index)
    }

    pub fn lexemes(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.lexeme.clone()).collect()
    }

    /// Source text from the start of token `first` to the end of token `last`, trivia between
    /// them included.
    pub fn text(&self, source: &str, first: usize, last: usize) -> String {
        source[self.tokens[first].offset..self.tokens[last].end()].to_string()
    }
}

pub const KEYWORDS: &[&str] = &[
    "fn", "var", "if", "else", "while", "return", "int", "float", "bool", "string",
];

const OPERATORS: &[&str] = &[
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+", "-", "*", "/", "%", "<", ">", "!", "&",
    "|", "^", "=",
];

const PUNCTUATION: &[&str] = &["->", "(", ")", "{", "}", ",", ";", ":"];

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn bump_n(&mut self, n: usize) {
        for _ in 0..n {
            self.bump();
        }
    }

    fn error(&self, line: usize, col: usize, message: impl Into<String>) -> Error {
        Error::Lex {
            line,
            col,
            message: message.into(),
        }
    }
}

fn ends_operand(token: Option<&Token>) -> bool {
    match token {
        Some(t) => match t.kind {
            TokenKind::Identifier
            | TokenKind::IntLiteral
            | TokenKind::FloatLiteral
            | TokenKind::StringLiteral
            | TokenKind::BoolLiteral => true,
            TokenKind::Punctuation => t.lexeme == ")",
            _ => false,
        },
        None => false,
    }
}

pub fn tokenize(source: &str) -> Result<TokenStream> {
    let mut cur = Cursor {
        src: source,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens: Vec<Token> = Vec::new();
    loop {
        let trivia_start = cur.pos;
        skip_trivia(&mut cur)?;
        let leading = source[trivia_start..cur.pos].to_string();
        let Some(c) = cur.peek() else {
            return Ok(TokenStream {
                tokens,
                trailing: leading,
            });
        };
        let (line, col, start) = (cur.line, cur.col, cur.pos);
        let kind = if c.is_ascii_alphabetic() || c == '_' {
            while matches!(cur.peek(), Some(ch) if ch.is_ascii_alphanumeric() || ch == '_') {
                cur.bump();
            }
            let word = &source[start..cur.pos];
            if word == "true" || word == "false" {
                TokenKind::BoolLiteral
            } else if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit()
            || (c == '-'
                && matches!(cur.peek_at(1), Some(d) if d.is_ascii_digit())
                && !ends_operand(tokens.last()))
        {
            if c == '-' {
                cur.bump();
            }
            lex_number(&mut cur)?
        } else if c == '"' {
            lex_string(&mut cur, line, col)?;
            TokenKind::StringLiteral
        } else if let Some(p) = PUNCTUATION.iter().find(|p| cur.rest().starts_with(**p)) {
            cur.bump_n(p.chars().count());
            TokenKind::Punctuation
        } else if let Some(op) = OPERATORS.iter().find(|op| cur.rest().starts_with(**op)) {
            cur.bump_n(op.chars().count());
            TokenKind::Operator
        } else {
            return Err(cur.error(line, col, format!("illegal character `{c}`")));
        };
        let index = tokens.len();
        tokens.push(Token {
            kind,
            lexeme: source[start..cur.pos].to_string(),
            line,
            col,
            index,
            offset: start,
            leading,
        });
    }
}

fn skip_trivia(cur: &mut Cursor<'_>) -> Result<()> {
    loop {
        match cur.peek() {
            Some(c) if c.is_whitespace() => {
                cur.bump();
            }
            Some('/') if cur.peek_at(1) == Some('/') => {
                while !matches!(cur.peek(), None | Some('\n')) {
                    cur.bump();
                }
            }
            Some('/') if cur.peek_at(1) == Some('*') => {
                let (line, col) = (cur.line, cur.col);
                cur.bump_n(2);
                loop {
                    match cur.peek() {
                        None => return Err(cur.error(line, col, "unterminated block comment")),
                        Some('*') if cur.peek_at(1) == Some('/') => {
                            cur.bump_n(2);
                            break;
                        }
                        Some(_) => {
                            cur.bump();
                        }
                    }
                }
            }
            _ => return Ok(()),
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>) -> Result<TokenKind> {
    let mut kind = TokenKind::IntLiteral;
    while matches!(cur.peek(), Some(d) if d.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some('.') && matches!(cur.peek_at(1), Some(d) if d.is_ascii_digit()) {
        kind = TokenKind::FloatLiteral;
        cur.bump();
        while matches!(cur.peek(), Some(d) if d.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let digits_at = if matches!(cur.peek_at(1), Some('+' | '-')) { 2 } else { 1 };
        if matches!(cur.peek_at(digits_at), Some(d) if d.is_ascii_digit()) {
            kind = TokenKind::FloatLiteral;
            cur.bump_n(digits_at);
            while matches!(cur.peek(), Some(d) if d.is_ascii_digit()) {
                cur.bump();
            }
        }
    }
    if matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
        let (line, col) = (cur.line, cur.col);
        return Err(cur.error(line, col, "malformed numeric literal"));
    }
    Ok(kind)
}

fn lex_string(cur: &mut Cursor<'_>, line: usize, col: usize) -> Result<()> {
    cur.bump();
    loop {
        match cur.bump() {
            None | Some('\n') => return Err(cur.error(line, col, "unterminated string literal")),
            Some('"') => return Ok(()),
            Some('\\') => match cur.bump() {
                Some('"' | '\\' | 'n' | 't') => {}
                _ => return Err(cur.error(line, col, "invalid escape in string literal")),
            },
            Some(_) => {}
        }
    }
}

/// Decodes the value of a string literal lexeme (quotes included).
pub fn unescape_string(lexeme: &str) -> String {
    let inner = &lexeme[1..lexeme.len() - 1];
    let mut out = String::with_capacity(inner.len());
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some('t') => out.push('\t'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn escape_string(value: &str) -> String {
    let mut out = String::from("\"");
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn detokenize(stream: &TokenStream) -> String {
    let mut out = String::new();
    for t in &stream.tokens {
        out.push_str(&t.leading);
        out.push_str(&t.lexeme);
    }
    out.push_str(&stream.trailing);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds_and_lexemes(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .tokens
            .into_iter()
            .map(|t| (t.kind, t.lexeme))
            .collect()
    }

    #[test]
    fn empty_input() {
        let ts = tokenize("").unwrap();
        assert!(ts.is_empty());
        assert_eq!(ts.trailing, "");
    }

    #[test]
    fn simple_assignment() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_lexemes("x = 1;"),
            vec![
                (Identifier, "x".into()),
                (Operator, "=".into()),
                (IntLiteral, "1".into()),
                (Punctuation, ";".into()),
            ]
        );
    }

    #[test]
    fn unterminated_string_reports_start() {
        match tokenize("\"abc") {
            Err(Error::Lex { line, col, .. }) => assert_eq!((line, col), (1, 1)),
            other => panic!("expected lex error, got {other:?}"),
        }
    }

    #[test]
    fn illegal_character() {
        assert!(matches!(
            tokenize("x = 1 $ 2;"),
            Err(Error::Lex { line: 1, col: 7, .. })
        ));
    }

    #[test]
    fn signed_literals_only_in_operand_position() {
        use TokenKind::*;
        assert_eq!(
            kinds_and_lexemes("return -1;")[1],
            (IntLiteral, "-1".to_string())
        );
        let binary = kinds_and_lexemes("a -1");
        assert_eq!(binary[1], (Operator, "-".to_string()));
        assert_eq!(binary[2], (IntLiteral, "1".to_string()));
        let nested = kinds_and_lexemes("a - -0.5e2");
        assert_eq!(nested[2], (FloatLiteral, "-0.5e2".to_string()));
        let unary = kinds_and_lexemes("-x");
        assert_eq!(unary[0], (Operator, "-".to_string()));
        let after_paren = kinds_and_lexemes("(a)-1");
        assert_eq!(after_paren[3], (Operator, "-".to_string()));
    }

    #[test]
    fn float_forms() {
        use TokenKind::*;
        for src in ["0.1", "1e-1", "10E+3", "2.5e0"] {
            assert_eq!(kinds_and_lexemes(src), vec![(FloatLiteral, src.to_string())]);
        }
        assert!(tokenize("12abc").is_err());
    }

    #[test]
    fn positions_and_trivia() {
        let src = "fn f() {\n  // note\n  return 1; /* end */\n}\n";
        let ts = tokenize(src).unwrap();
        let ret = ts.tokens.iter().find(|t| t.lexeme == "return").unwrap();
        assert_eq!((ret.line, ret.col), (3, 3));
        assert!(ret.leading.contains("// note"));
        assert_eq!(ts.trailing, "\n");
        for (i, t) in ts.tokens.iter().enumerate() {
            assert_eq!(t.index, i);
            assert_eq!(&src[t.offset..t.end()], t.lexeme);
        }
        assert_eq!(detokenize(&ts), src);
    }

    #[test]
    fn string_escapes_roundtrip() {
        let lex = "\"a\\\"b\\\\c\\n\"";
        assert_eq!(unescape_string(lex), "a\"b\\c\n");
        assert_eq!(escape_string(&unescape_string(lex)), lex);
    }
}
