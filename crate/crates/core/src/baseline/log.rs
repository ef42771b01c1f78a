//! Per-configuration event logs.

use std::fmt::Write as _;

use serde::Serialize;

use crate::minilang::{ErrorKind, RuntimeError, SiteId, SourceLocation};
use crate::varcore::{Configuration, Value};

/// Position of an event in the structural execution order.
///
/// A key is a path of site ids: entering a call appends `[call_site, 1]`,
/// entering iteration `k` of a loop appends `[loop_site, k]`, and the event
/// itself ends with `[site, code]` where `code` is 0 for ordinary events and
/// the fault code for exceptions. Because sites are numbered in evaluation
/// order, comparing keys lexicographically orders events of any
/// configurations the way a shared execution visits them.
pub type EventKey = Vec<u32>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Assign,
    Branch,
    Call,
    Return,
    Exception,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EventPayload {
    Assign {
        variable: String,
        old: Value,
        new: Value,
    },
    Branch {
        predicate: String,
        outcome: bool,
        /// Variables referenced by the predicate with their current values.
        params: Vec<(String, Value)>,
    },
    Call {
        function: String,
        /// Parameters bound on entry.
        args: Vec<(String, Value)>,
    },
    Return {
        function: String,
        value: Value,
    },
    Exception {
        kind: ErrorKind,
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent {
    pub key: EventKey,
    /// Length of the key prefix naming the frame the event belongs to.
    pub frame_len: usize,
    pub site: SiteId,
    pub location: SourceLocation,
    pub payload: EventPayload,
}

impl TraceEvent {
    pub fn kind(&self) -> EventKind {
        match self.payload {
            EventPayload::Assign { .. } => EventKind::Assign,
            EventPayload::Branch { .. } => EventKind::Branch,
            EventPayload::Call { .. } => EventKind::Call,
            EventPayload::Return { .. } => EventKind::Return,
            EventPayload::Exception { .. } => EventKind::Exception,
        }
    }

    pub fn frame(&self) -> &[u32] {
        &self.key[..self.frame_len]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Normal,
    Error(RuntimeError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteTrace {
    pub config: Configuration,
    pub events: Vec<TraceEvent>,
    pub outcome: Outcome,
    /// Statements executed, counting each loop-guard evaluation once.
    pub steps: u64,
}

#[derive(Serialize)]
struct LogLine<'a> {
    seq: usize,
    stmt: SiteId,
    kind: EventKind,
    loc: &'a SourceLocation,
    #[serde(skip_serializing_if = "Option::is_none")]
    var: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<&'a Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outcome: Option<serde_json::Value>,
}

impl ConcreteTrace {
    /// One JSON object per line, in execution order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (seq, e) in self.events.iter().enumerate() {
            let (var, value, outcome) = match &e.payload {
                EventPayload::Assign { variable, new, .. } => (Some(variable.as_str()), Some(new), None),
                EventPayload::Branch { outcome, .. } => (None, None, Some(serde_json::json!(outcome))),
                EventPayload::Call { function, .. } => (Some(function.as_str()), None, None),
                EventPayload::Return { function, value } => (Some(function.as_str()), Some(value), None),
                EventPayload::Exception { kind, message } => (
                    None,
                    None,
                    Some(serde_json::json!({"kind": kind, "message": message})),
                ),
            };
            let line = LogLine {
                seq,
                stmt: e.site,
                kind: e.kind(),
                loc: &e.location,
                var,
                value,
                outcome,
            };
            let text = serde_json::to_string(&line).expect("log lines serialize");
            writeln!(out, "{text}").expect("writing to a String");
        }
        out
    }

    /// File-name friendly label, e.g. `cfg-0101` for four options.
    pub fn label(&self) -> String {
        let bits: String = self
            .config
            .values()
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        format!("cfg-{bits}")
    }
}
