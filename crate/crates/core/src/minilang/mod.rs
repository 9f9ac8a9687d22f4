//! MiniLang: the small statically typed language every other module works on.

pub mod ast;
pub mod check;
pub mod interp;
pub mod lexer;
pub mod parser;
pub mod testcase;
pub mod value;

pub use ast::{Span, Type};
pub use check::{type_check, Declaration, SymbolKind, TypedProgram};
pub use interp::{execute, ExecError, DEFAULT_STEP_LIMIT};
pub use lexer::{detokenize, tokenize, Token, TokenKind, TokenStream};
pub use parser::parse;
pub use testcase::{run_test, Expected, TestCase, Verdict};
pub use value::Value;
