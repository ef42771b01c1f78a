use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::varcore::{BinOp, OptionSet, UnOp, Value};

/// Identifier of a point in the program where an event can happen.
///
/// Sites are numbered in evaluation order by the parser, so within one
/// function body a smaller site is always reached before a larger one in a
/// straight-line walk of the code.
pub type SiteId = u32;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SourceLocation {
    pub file: Arc<str>,
    pub line: u32,
    #[serde(rename = "col")]
    pub column: u32,
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

impl fmt::Debug for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone)]
pub struct Program {
    pub options: Arc<OptionSet>,
    pub functions: Vec<Function>,
    pub file: Arc<str>,
    pub source: Arc<str>,
    index: HashMap<String, usize>,
}

impl Program {
    pub(crate) fn new(
        options: Arc<OptionSet>,
        functions: Vec<Function>,
        file: Arc<str>,
        source: Arc<str>,
    ) -> Self {
        let index = functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.name.clone(), i))
            .collect();
        Program {
            options,
            functions,
            file,
            source,
            index,
        }
    }

    pub fn function(&self, name: &str) -> Option<&Function> {
        self.index.get(name).map(|&i| &self.functions[i])
    }

    pub fn main(&self) -> &Function {
        self.function("main").expect("parser guarantees a main function")
    }

    pub fn source_lines(&self) -> Vec<&str> {
        self.source.lines().collect()
    }
}

#[derive(Debug, Clone)]
pub struct Function {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub location: SourceLocation,
    /// Site of the implicit `return null` when control falls off the end.
    pub end_site: SiteId,
    pub end_location: SourceLocation,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub location: SourceLocation,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    Assign {
        target: String,
        value: Expr,
        site: SiteId,
    },
    If {
        guard: Guard,
        then_block: Vec<Stmt>,
        else_block: Vec<Stmt>,
    },
    While {
        loop_site: SiteId,
        guard: Guard,
        body: Vec<Stmt>,
    },
    Call(Expr),
    Return {
        value: Option<Expr>,
        site: SiteId,
    },
    Throw {
        message: String,
        site: SiteId,
    },
    Assert {
        cond: Expr,
        text: String,
        site: SiteId,
    },
}

/// A branching predicate: the guard of an `if`/`while`, or the left operand
/// of a short-circuit operator.
#[derive(Debug, Clone)]
pub struct Guard {
    pub expr: Expr,
    pub site: SiteId,
    /// Source text of the predicate.
    pub text: String,
    /// Variables referenced by the predicate, first occurrence order.
    pub params: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicOp {
    And,
    Or,
}

impl LogicOp {
    pub fn symbol(self) -> &'static str {
        match self {
            LogicOp::And => "&&",
            LogicOp::Or => "||",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub location: SourceLocation,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Literal(Value),
    Var {
        name: String,
        site: SiteId,
    },
    OptionRef(usize),
    Unary {
        op: UnOp,
        operand: Box<Expr>,
        site: SiteId,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        site: SiteId,
    },
    /// Short-circuit operator. `guard` decides whether `rhs` runs; `site`
    /// checks the type of `rhs`.
    Logic {
        op: LogicOp,
        guard: Box<Guard>,
        rhs: Box<Expr>,
        site: SiteId,
    },
    Call {
        function: String,
        args: Vec<Expr>,
        site: SiteId,
    },
    Deref {
        arg: Box<Expr>,
        text: String,
        site: SiteId,
    },
}

impl Expr {
    /// Variables referenced anywhere in the expression, in source order,
    /// without duplicates.
    pub fn referenced_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match &self.kind {
            ExprKind::Literal(_) | ExprKind::OptionRef(_) => {}
            ExprKind::Var { name, .. } => {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
            ExprKind::Unary { operand, .. } => operand.collect_vars(out),
            ExprKind::Binary { lhs, rhs, .. } => {
                lhs.collect_vars(out);
                rhs.collect_vars(out);
            }
            ExprKind::Logic { guard, rhs, .. } => {
                guard.expr.collect_vars(out);
                rhs.collect_vars(out);
            }
            ExprKind::Call { args, .. } => args.iter().for_each(|a| a.collect_vars(out)),
            ExprKind::Deref { arg, .. } => arg.collect_vars(out),
        }
    }
}

/// The runtime error categories a subject program can raise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    NullDereference,
    AssertionFailure,
    UndefinedVariable,
    TypeError,
    ExplicitThrow,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::NullDereference => "null-dereference",
            ErrorKind::AssertionFailure => "assertion-failure",
            ErrorKind::UndefinedVariable => "undefined-variable",
            ErrorKind::TypeError => "type-error",
            ErrorKind::ExplicitThrow => "explicit-throw",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "null-dereference" => ErrorKind::NullDereference,
            "assertion-failure" => ErrorKind::AssertionFailure,
            "undefined-variable" => ErrorKind::UndefinedVariable,
            "type-error" => ErrorKind::TypeError,
            "explicit-throw" => ErrorKind::ExplicitThrow,
            _ => return None,
        })
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The precise failure at a site. Several faults can share an
/// [`ErrorKind`]; events at one site are ordered by fault.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Fault {
    UndefinedVariable,
    NotBoolean,
    BadOperands,
    DivisionByZero,
    NullDereference,
    AssertionFailed,
    Thrown,
}

impl Fault {
    pub fn kind(self) -> ErrorKind {
        match self {
            Fault::UndefinedVariable => ErrorKind::UndefinedVariable,
            Fault::NotBoolean | Fault::BadOperands | Fault::DivisionByZero => ErrorKind::TypeError,
            Fault::NullDereference => ErrorKind::NullDereference,
            Fault::AssertionFailed => ErrorKind::AssertionFailure,
            Fault::Thrown => ErrorKind::ExplicitThrow,
        }
    }

    /// Position of the fault's event among the events of one site.
    pub fn code(self) -> u32 {
        10 + self as u32
    }
}

impl From<crate::varcore::OpFault> for Fault {
    fn from(f: crate::varcore::OpFault) -> Self {
        use crate::varcore::OpFault;
        match f {
            OpFault::NotBoolean => Fault::NotBoolean,
            OpFault::BadOperands => Fault::BadOperands,
            OpFault::DivisionByZero => Fault::DivisionByZero,
        }
    }
}

/// Messages are a function of the site and the fault only, never of the
/// values involved, so every configuration failing at a site the same way
/// reports the same text.
pub fn unary_message(op: UnOp, fault: Fault) -> String {
    match (op, fault) {
        (UnOp::Not, _) => "operand of `!` must be boolean".to_string(),
        (UnOp::Neg, _) => "operand of unary `-` must be an integer".to_string(),
    }
}

pub fn binary_message(op: BinOp, fault: Fault) -> String {
    match fault {
        Fault::DivisionByZero => "division by zero".to_string(),
        _ => format!("operands of `{}` must be integers", op.symbol()),
    }
}

pub fn logic_message(op: LogicOp) -> String {
    format!("operands of `{}` must be boolean", op.symbol())
}

pub fn undefined_message(name: &str) -> String {
    format!("undefined variable `{name}`")
}

pub fn guard_message() -> String {
    "condition must be boolean".to_string()
}

pub fn deref_message(text: &str) -> String {
    format!("null dereference in deref({text})")
}

pub fn assert_message(text: &str, fault: Fault) -> String {
    match fault {
        Fault::AssertionFailed => format!("assertion failed: {text}"),
        _ => format!("assertion condition must be boolean: {text}"),
    }
}
