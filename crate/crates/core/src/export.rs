//! JSON, DOT and plain-text renderings of a trace.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::minilang::{ErrorKind, SourceLocation};
use crate::tracegraph::{NodeId, NodeKind, Payload, TraceNode, VariationalTrace};
use crate::varcore::{ChoiceValue, CondError, Condition, OptionSet, Value};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0:?}")]
    Version(String),
    #[error("node {id}: {message}")]
    Node { id: NodeId, message: String },
    #[error(transparent)]
    Condition(#[from] CondError),
}

#[derive(Serialize, Deserialize)]
struct JsonTrace {
    schema_version: String,
    options: Vec<String>,
    nodes: Vec<JsonNode>,
    order: Vec<NodeId>,
}

#[derive(Serialize, Deserialize)]
struct JsonNode {
    id: NodeId,
    kind: NodeKind,
    context: String,
    location: SourceLocation,
    parent: Option<NodeId>,
    payload: JsonPayload,
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    when: String,
    value: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonPayload {
    StateChange {
        variable: String,
        old: Vec<JsonEntry>,
        new: Vec<JsonEntry>,
    },
    Decision {
        predicate: String,
        true_cond: String,
        false_cond: String,
    },
    DecisionParameter {
        variable: String,
        value: Vec<JsonEntry>,
    },
    Exception {
        kind: ErrorKind,
        message: String,
    },
    Return {
        function: String,
        value: Vec<JsonEntry>,
    },
    MethodBox {
        function: String,
        children: Vec<NodeId>,
    },
}

fn entries(c: &ChoiceValue) -> Vec<JsonEntry> {
    c.entries()
        .iter()
        .map(|(when, value)| JsonEntry {
            when: when.to_canonical_string(),
            value: value.clone(),
        })
        .collect()
}

fn json_payload(p: &Payload) -> JsonPayload {
    match p {
        Payload::StateChange { variable, old, new } => JsonPayload::StateChange {
            variable: variable.clone(),
            old: entries(old),
            new: entries(new),
        },
        Payload::Decision {
            predicate,
            true_cond,
            false_cond,
        } => JsonPayload::Decision {
            predicate: predicate.clone(),
            true_cond: true_cond.to_canonical_string(),
            false_cond: false_cond.to_canonical_string(),
        },
        Payload::DecisionParameter { variable, value } => JsonPayload::DecisionParameter {
            variable: variable.clone(),
            value: entries(value),
        },
        Payload::Exception { kind, message } => JsonPayload::Exception {
            kind: *kind,
            message: message.clone(),
        },
        Payload::Return { function, value } => JsonPayload::Return {
            function: function.clone(),
            value: entries(value),
        },
        Payload::MethodBox { function, children } => JsonPayload::MethodBox {
            function: function.clone(),
            children: children.clone(),
        },
    }
}

/// Deterministic JSON: the same trace always gives the same bytes.
pub fn to_json(t: &VariationalTrace) -> String {
    let doc = JsonTrace {
        schema_version: SCHEMA_VERSION.to_string(),
        options: t.options().names().to_vec(),
        nodes: t
            .nodes()
            .iter()
            .map(|n| JsonNode {
                id: n.id,
                kind: n.kind(),
                context: n.context.to_canonical_string(),
                location: n.location.clone(),
                parent: n.parent,
                payload: json_payload(&n.payload),
            })
            .collect(),
        order: t.nodes().iter().map(|n| n.id).collect(),
    };
    serde_json::to_string(&doc).expect("traces serialize")
}

/// Reads a trace written by [`to_json`].
pub fn from_json(text: &str) -> Result<VariationalTrace, ImportError> {
    let doc: JsonTrace = serde_json::from_str(text)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(ImportError::Version(doc.schema_version));
    }
    let opts = OptionSet::new(&doc.options)?;
    let cond = |s: &str| Condition::parse(&opts, s);
    let choice = |es: Vec<JsonEntry>| -> Result<ChoiceValue, CondError> {
        let pairs = es
            .into_iter()
            .map(|e| Ok((cond(&e.when)?, e.value)))
            .collect::<Result<Vec<_>, CondError>>()?;
        Ok(ChoiceValue::from_pairs(&opts, pairs))
    };
    let mut by_id: HashMap<NodeId, TraceNode> = HashMap::new();
    for n in doc.nodes {
        let payload = match n.payload {
            JsonPayload::StateChange { variable, old, new } => Payload::StateChange {
                variable,
                old: choice(old)?,
                new: choice(new)?,
            },
            JsonPayload::Decision {
                predicate,
                true_cond,
                false_cond,
            } => Payload::Decision {
                predicate,
                true_cond: cond(&true_cond)?,
                false_cond: cond(&false_cond)?,
            },
            JsonPayload::DecisionParameter { variable, value } => Payload::DecisionParameter {
                variable,
                value: choice(value)?,
            },
            JsonPayload::Exception { kind, message } => Payload::Exception { kind, message },
            JsonPayload::Return { function, value } => Payload::Return {
                function,
                value: choice(value)?,
            },
            JsonPayload::MethodBox { function, children } => Payload::MethodBox { function, children },
        };
        if payload.kind() != n.kind {
            return Err(ImportError::Node {
                id: n.id,
                message: format!("payload does not match kind {}", n.kind),
            });
        }
        let node = TraceNode {
            id: n.id,
            context: cond(&n.context)?,
            location: n.location,
            parent: n.parent,
            payload,
        };
        if by_id.insert(n.id, node).is_some() {
            return Err(ImportError::Node {
                id: n.id,
                message: "duplicate id".into(),
            });
        }
    }
    let mut nodes = Vec::with_capacity(by_id.len());
    for id in &doc.order {
        let n = by_id.remove(id).ok_or_else(|| ImportError::Node {
            id: *id,
            message: "listed in order but not defined".into(),
        })?;
        nodes.push(n);
    }
    if let Some(id) = by_id.keys().min() {
        return Err(ImportError::Node {
            id: *id,
            message: "missing from order".into(),
        });
    }
    Ok(VariationalTrace::from_nodes(&opts, nodes))
}

fn dot_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out
}

fn node_style(kind: NodeKind) -> &'static str {
    match kind {
        NodeKind::Decision => "shape=diamond",
        NodeKind::StateChange => "shape=box, style=filled, fillcolor=orange",
        NodeKind::DecisionParameter => "shape=box, style=filled, fillcolor=gray",
        NodeKind::Exception => "shape=box, style=filled, fillcolor=red",
        NodeKind::Return => "shape=box, style=rounded",
        NodeKind::MethodBox => "",
    }
}

/// Graphviz rendering. Method boxes become nested clusters; the other
/// nodes are chained in trace order, and an edge is labeled with the
/// condition of its target when that differs from the enclosing box's.
pub fn to_dot(t: &VariationalTrace) -> String {
    let mut out = String::from("digraph trace {\n");
    if t.is_empty() {
        out.push_str("}\n");
        return out;
    }
    out.push_str("  node [fontname=\"Helvetica\"];\n  edge [fontname=\"Helvetica\"];\n");
    let index: HashMap<NodeId, &TraceNode> = t.nodes().iter().map(|n| (n.id, n)).collect();
    if let Some(root) = t.root() {
        write_cluster(&mut out, root, &index, 1);
    }
    let mut prev: Option<NodeId> = None;
    for n in t.nodes().iter().filter(|n| n.kind() != NodeKind::MethodBox) {
        if let Some(p) = prev {
            let enclosing = n.parent.map(|b| &index[&b].context);
            match enclosing {
                Some(c) if !c.equiv(&n.context) => {
                    let _ = writeln!(out, "  n{p} -> n{} [label=\"{}\"];", n.id, dot_escape(&n.context.to_canonical_string()));
                }
                _ => {
                    let _ = writeln!(out, "  n{p} -> n{};", n.id);
                }
            }
        }
        prev = Some(n.id);
    }
    out.push_str("}\n");
    out
}

fn write_cluster(out: &mut String, b: &TraceNode, index: &HashMap<NodeId, &TraceNode>, depth: usize) {
    let pad = "  ".repeat(depth);
    let Payload::MethodBox { function, children } = &b.payload else {
        return;
    };
    let mut label = format!("{function} {}:{}", b.location.line, b.location.column);
    if !b.context.is_tautology() {
        let _ = write!(label, " [{}]", b.context);
    }
    let _ = writeln!(out, "{pad}subgraph cluster_{} {{", b.id);
    let _ = writeln!(out, "{pad}  label=\"{}\";", dot_escape(&label));
    for c in children {
        let n = index[c];
        if n.kind() == NodeKind::MethodBox {
            write_cluster(out, n, index, depth + 1);
        } else {
            let label = format!("{}:{}\n{}", n.location.line, n.location.column, n.payload);
            let _ = writeln!(
                out,
                "{pad}  n{} [label=\"{}\", {}];",
                n.id,
                dot_escape(&label),
                node_style(n.kind())
            );
        }
    }
    let _ = writeln!(out, "{pad}}}");
}

/// Indented outline for terminals.
pub fn to_text(t: &VariationalTrace) -> String {
    let mut out = String::new();
    let mut depth: HashMap<NodeId, usize> = HashMap::new();
    for n in t.nodes() {
        let d = n.parent.map_or(0, |p| depth[&p] + 1);
        depth.insert(n.id, d);
        let _ = write!(out, "{}{} {}", "  ".repeat(d), n.kind(), n.payload);
        let _ = write!(out, "  @{}:{}", n.location.line, n.location.column);
        if !n.context.is_tautology() {
            let _ = write!(out, "  if {}", n.context);
        }
        out.push('\n');
    }
    out
}

/// The file name all nodes of a trace point into, if there is one.
pub fn source_file(t: &VariationalTrace) -> Option<Arc<str>> {
    t.root().map(|n| Arc::clone(&n.location.file))
}
