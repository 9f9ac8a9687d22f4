//! Unit tests for MiniLang programs and their verdicts.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::check::TypedProgram;
use super::interp::{execute, ExecError};
use super::value::Value;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorTag {
    RuntimeError,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expected {
    Value(Value),
    Error { error: ErrorTag },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub name: String,
    pub callee: String,
    #[serde(default)]
    pub inputs: Vec<Value>,
    pub expected: Expected,
    #[serde(default)]
    pub triggering: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    RuntimeError,
    Timeout,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::RuntimeError => "runtime-error",
            Verdict::Timeout => "timeout",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TestCase {
    /// Checks that the callee exists and the inputs match its signature.
    pub fn validate(&self, program: &TypedProgram) -> Result<()> {
        let err = |message: String| Error::TestCase {
            name: self.name.clone(),
            message,
        };
        let (_, f) = program
            .function(&self.callee)
            .ok_or_else(|| err(format!("unknown callee `{}`", self.callee)))?;
        if f.params.len() != self.inputs.len() {
            return Err(err(format!(
                "`{}` takes {} argument(s), test supplies {}",
                self.callee,
                f.params.len(),
                self.inputs.len()
            )));
        }
        for (i, (v, p)) in self.inputs.iter().zip(&f.params).enumerate() {
            if v.ty() != *p {
                return Err(err(format!("input {i} has type {}, expected {p}", v.ty())));
            }
        }
        if let Expected::Value(v) = &self.expected {
            if v.ty() != f.ret {
                return Err(err(format!(
                    "expected value has type {}, `{}` returns {}",
                    v.ty(),
                    self.callee,
                    f.ret
                )));
            }
        }
        Ok(())
    }
}

/// Executes one test. Pure in `(program, test, step_limit)`.
pub fn run_test(program: &TypedProgram, test: &TestCase, step_limit: u64) -> Verdict {
    let result = execute(program, &test.callee, test.inputs.clone(), step_limit);
    match (&test.expected, result) {
        (Expected::Value(want), Ok(got)) => {
            if want.same_as(&got) {
                Verdict::Pass
            } else {
                Verdict::Fail
            }
        }
        (Expected::Error { .. }, Ok(_)) => Verdict::Fail,
        (Expected::Error { error }, Err(e)) => {
            let actual = match e {
                ExecError::Timeout => ErrorTag::Timeout,
                _ => ErrorTag::RuntimeError,
            };
            if *error == actual {
                Verdict::Pass
            } else {
                verdict_for(&e)
            }
        }
        (Expected::Value(_), Err(e)) => verdict_for(&e),
    }
}

fn verdict_for(e: &ExecError) -> Verdict {
    match e {
        ExecError::Timeout => Verdict::Timeout,
        _ => Verdict::RuntimeError,
    }
}

pub fn parse_suite(json: &str) -> Result<Vec<TestCase>> {
    Ok(serde_json::from_str(json)?)
}

pub fn load_suite(path: impl AsRef<Path>) -> Result<Vec<TestCase>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_suite(&text)
}
