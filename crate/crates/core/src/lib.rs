pub mod cfg;
pub mod error;
pub mod harness;
pub mod lm;
pub mod minilang;
pub mod mutators;
pub mod selection;

pub use error::{Error, Result};
