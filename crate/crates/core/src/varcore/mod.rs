//! Condition algebra over boolean options and choice values.

mod bdd;
mod choice;
mod condition;
mod options;
mod value;

pub use choice::{Choice, ChoiceValue, Lifted};
pub use condition::Condition;
pub use options::{Configuration, OptionSet};
#[allow(unused_imports)]
pub(crate) use options::is_identifier;
pub use value::{apply_binary, apply_unary, BinOp, OpFault, UnOp, Value};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CondError {
    #[error("conditions range over different option sets")]
    OptionSetMismatch,
    #[error("unknown option `{0}`")]
    UnknownOption(String),
    #[error("duplicate option `{0}`")]
    DuplicateOption(String),
    #[error("invalid option name `{0}`")]
    InvalidOptionName(String),
    #[error("configuration assigns {got} options, expected {expected}")]
    IncompleteConfiguration { expected: usize, got: usize },
    #[error("condition is unsatisfiable")]
    Unsatisfiable,
    #[error("condition syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
}
