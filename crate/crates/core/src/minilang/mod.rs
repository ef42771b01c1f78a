//! The subject language: parser, AST and the concrete interpreter.

pub mod ast;
mod interp;
mod lexer;
mod parser;

pub use ast::{ErrorKind, Fault, Program, SiteId, SourceLocation};
pub use interp::{run_concrete, run_concrete_with, ConcreteRun};
pub use parser::parse;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{column}: syntax error: {message}")]
    Syntax { message: String, line: u32, column: u32 },
    #[error("{line}:{column}: duplicate option `{name}`")]
    DuplicateOption { name: String, line: u32, column: u32 },
    #[error("program has no `main` function")]
    MissingMain,
    #[error("{line}:{column}: {message}")]
    Semantic { message: String, line: u32, column: u32 },
}

impl ParseError {
    pub fn line(&self) -> Option<u32> {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::DuplicateOption { line, .. }
            | ParseError::Semantic { line, .. } => Some(*line),
            ParseError::MissingMain => None,
        }
    }
}

/// A fault raised by the subject program. Ends the configuration's run.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{location}: {kind}: {message}")]
pub struct RuntimeError {
    pub kind: ErrorKind,
    pub message: String,
    pub location: SourceLocation,
    pub fault: Fault,
}

/// Resource limits hit by an engine. Not an outcome of the subject program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ExecError {
    #[error("step budget of {limit} statements exceeded")]
    StepBudget { limit: u64 },
    #[error("call depth limit of {limit} frames exceeded")]
    DepthLimit { limit: usize },
}

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;
pub const DEFAULT_MAX_DEPTH: usize = 150;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_steps: u64,
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: DEFAULT_MAX_STEPS,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}
