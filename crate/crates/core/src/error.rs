use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("lexical error at {line}:{col}: {message}")]
    Lex {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("type error at {line}:{col}: {message}")]
    Type {
        line: usize,
        col: usize,
        message: String,
    },

    #[error("unknown CFG node {0}")]
    UnknownNode(String),

    #[error("stale mutant {id}: expected `{expected}` at token {token}, found `{found}`")]
    StaleMutant {
        id: String,
        token: usize,
        expected: String,
        found: String,
    },

    #[error("malformed numeric literal `{0}`")]
    MalformedLiteral(String),

    #[error("cannot train a language model on an empty corpus")]
    EmptyCorpus,

    #[error("mutant pool is empty")]
    EmptyPool,

    #[error("baseline failure: test `{test}` does not pass on the unmutated program ({outcome})")]
    BaselineFailure { test: String, outcome: String },

    #[error("invalid scope: {0}")]
    Scope(String),

    #[error("invalid test case `{name}`: {message}")]
    TestCase { name: String, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no defects supplied")]
    NoDefects,

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors that originate in the subject program (lexing, parsing, typing).
    pub fn is_subject_error(&self) -> bool {
        matches!(self, Error::Lex { .. } | Error::Syntax { .. } | Error::Type { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
