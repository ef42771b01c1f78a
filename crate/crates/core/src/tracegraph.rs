//! The variational trace: node taxonomy, reduction rules, statistics and
//! per-configuration slices.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::minilang::{ErrorKind, SourceLocation};
use crate::varcore::{ChoiceValue, Condition, Configuration, OptionSet, Value};

pub type NodeId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    StateChange,
    Decision,
    DecisionParameter,
    Exception,
    Return,
    MethodBox,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::StateChange => "StateChange",
            NodeKind::Decision => "Decision",
            NodeKind::DecisionParameter => "DecisionParameter",
            NodeKind::Exception => "Exception",
            NodeKind::Return => "Return",
            NodeKind::MethodBox => "MethodBox",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "StateChange" => NodeKind::StateChange,
            "Decision" => NodeKind::Decision,
            "DecisionParameter" => NodeKind::DecisionParameter,
            "Exception" => NodeKind::Exception,
            "Return" => NodeKind::Return,
            "MethodBox" => NodeKind::MethodBox,
            _ => return None,
        })
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    /// `old` and `new` cover the configurations live in the frame; entries
    /// holding [`Value::Undefined`] mark where the variable is unbound.
    StateChange {
        variable: String,
        old: ChoiceValue,
        new: ChoiceValue,
    },
    Decision {
        predicate: String,
        true_cond: Condition,
        false_cond: Condition,
    },
    DecisionParameter {
        variable: String,
        value: ChoiceValue,
    },
    Exception {
        kind: ErrorKind,
        message: String,
    },
    Return {
        function: String,
        value: ChoiceValue,
    },
    MethodBox {
        function: String,
        children: Vec<NodeId>,
    },
}

impl Payload {
    pub fn kind(&self) -> NodeKind {
        match self {
            Payload::StateChange { .. } => NodeKind::StateChange,
            Payload::Decision { .. } => NodeKind::Decision,
            Payload::DecisionParameter { .. } => NodeKind::DecisionParameter,
            Payload::Exception { .. } => NodeKind::Exception,
            Payload::Return { .. } => NodeKind::Return,
            Payload::MethodBox { .. } => NodeKind::MethodBox,
        }
    }

    /// Applies `f` to every condition and `g` to every choice value.
    fn map_conditions(
        &self,
        f: &impl Fn(&Condition) -> Condition,
        g: &impl Fn(&ChoiceValue) -> ChoiceValue,
    ) -> Payload {
        match self {
            Payload::StateChange { variable, old, new } => Payload::StateChange {
                variable: variable.clone(),
                old: g(old),
                new: g(new),
            },
            Payload::Decision {
                predicate,
                true_cond,
                false_cond,
            } => Payload::Decision {
                predicate: predicate.clone(),
                true_cond: f(true_cond),
                false_cond: f(false_cond),
            },
            Payload::DecisionParameter { variable, value } => Payload::DecisionParameter {
                variable: variable.clone(),
                value: g(value),
            },
            Payload::Return { function, value } => Payload::Return {
                function: function.clone(),
                value: g(value),
            },
            Payload::Exception { .. } | Payload::MethodBox { .. } => self.clone(),
        }
    }
}

/// One-line summary, as used by the canonical form and the exporters.
impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::StateChange { variable, old, new } => write!(f, "{variable} old={old} new={new}"),
            Payload::Decision {
                predicate,
                true_cond,
                false_cond,
            } => write!(f, "({predicate}) true=[{true_cond}] false=[{false_cond}]"),
            Payload::DecisionParameter { variable, value } => write!(f, "{variable}={value}"),
            Payload::Exception { kind, message } => write!(f, "{kind}: {message}"),
            Payload::Return { function, value } => write!(f, "{function} -> {value}"),
            Payload::MethodBox { function, .. } => f.write_str(function),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceNode {
    pub id: NodeId,
    pub context: Condition,
    pub location: SourceLocation,
    /// Enclosing method box; `None` only for the root box of `main`.
    pub parent: Option<NodeId>,
    pub payload: Payload,
}

impl TraceNode {
    pub fn kind(&self) -> NodeKind {
        self.payload.kind()
    }
}

/// Nodes in trace order. A method box precedes its children, which follow
/// it contiguously.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariationalTrace {
    options: Arc<OptionSet>,
    nodes: Vec<TraceNode>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub decisions: usize,
    pub statements: usize,
}

impl Stats {
    pub fn le(&self, other: &Stats) -> bool {
        self.decisions <= other.decisions && self.statements <= other.statements
    }
}

impl VariationalTrace {
    pub fn empty(options: &Arc<OptionSet>) -> Self {
        VariationalTrace {
            options: Arc::clone(options),
            nodes: Vec::new(),
        }
    }

    /// Builds a trace from nodes in trace order, recomputing the child lists
    /// of method boxes from the parent links.
    pub fn from_nodes(options: &Arc<OptionSet>, mut nodes: Vec<TraceNode>) -> Self {
        let mut children: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
        for n in &nodes {
            if let Some(p) = n.parent {
                children.entry(p).or_default().push(n.id);
            }
        }
        for n in &mut nodes {
            if let Payload::MethodBox { children: c, .. } = &mut n.payload {
                *c = children.remove(&n.id).unwrap_or_default();
            }
        }
        VariationalTrace {
            options: Arc::clone(options),
            nodes,
        }
    }

    pub fn options(&self) -> &Arc<OptionSet> {
        &self.options
    }

    pub fn nodes(&self) -> &[TraceNode] {
        &self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> Option<&TraceNode> {
        self.nodes.first()
    }

    pub fn get(&self, id: NodeId) -> Option<&TraceNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn stats(&self) -> Stats {
        stats(self)
    }

    /// Checks the structural invariants; returns a description of the first
    /// violation.
    pub fn validate(&self) -> Result<(), String> {
        let mut seen = HashSet::new();
        let mut open: Vec<(NodeId, &Condition)> = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if !seen.insert(n.id) {
                return Err(format!("duplicate node id {}", n.id));
            }
            if n.context.is_unsat() {
                return Err(format!("node {} has an unsatisfiable context", n.id));
            }
            // Close boxes until the parent is on top.
            while let Some(&(top, _)) = open.last() {
                if Some(top) == n.parent {
                    break;
                }
                open.pop();
            }
            match (n.parent, open.last()) {
                (None, _) if i == 0 => {}
                (None, _) => return Err(format!("node {} has no parent", n.id)),
                (Some(_), None) => return Err(format!("node {} is outside its method box", n.id)),
                (Some(_), Some(&(_, box_ctx))) => {
                    if !n.context.implies(box_ctx) {
                        return Err(format!("node {} escapes its method box context", n.id));
                    }
                }
            }
            match &n.payload {
                Payload::MethodBox { .. } => open.push((n.id, &n.context)),
                Payload::Decision {
                    true_cond,
                    false_cond,
                    ..
                } => {
                    if true_cond.overlaps(false_cond) || !true_cond.or(false_cond).equiv(&n.context) {
                        return Err(format!("decision {} does not partition its context", n.id));
                    }
                }
                Payload::DecisionParameter { .. } => {
                    let next = self.nodes[i + 1..]
                        .iter()
                        .find(|m| m.kind() != NodeKind::DecisionParameter);
                    match next {
                        Some(d) if d.kind() == NodeKind::Decision && d.context == n.context => {}
                        _ => return Err(format!("parameter {} does not precede its decision", n.id)),
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Decides whether a node on its own describes a difference among
/// configurations. Return nodes additionally need their siblings; see
/// [`keep_return`].
fn keep_intrinsic(node: &TraceNode) -> bool {
    match &node.payload {
        Payload::StateChange { new, .. } => keep_state_change(&node.context, new),
        Payload::Decision {
            true_cond,
            false_cond,
            ..
        } => true_cond.is_sat() && false_cond.is_sat(),
        Payload::Exception { .. } => true,
        // Decided by context: parameters with their decision, returns per
        // frame, boxes by their children.
        Payload::DecisionParameter { .. } | Payload::Return { .. } | Payload::MethodBox { .. } => true,
    }
}

/// A write is a difference if the variable now holds different values in
/// different configurations where it exists, or if only some of those
/// configurations performed the write.
pub fn keep_state_change(write_ctx: &Condition, new: &ChoiceValue) -> bool {
    let defined: Vec<_> = new.entries().iter().filter(|(_, v)| v.is_defined()).collect();
    if defined.len() >= 2 {
        return true;
    }
    let existence = defined
        .iter()
        .fold(Condition::ff(write_ctx.options()), |acc, (c, _)| acc.or(c));
    !write_ctx.equiv(&existence)
}

/// A return is a difference if it returns different values, or if the frame
/// returns from more than one site (`returned` is the union of the contexts
/// of all returns of the frame).
pub fn keep_return(ctx: &Condition, value: &ChoiceValue, returned: &Condition) -> bool {
    value.len() >= 2 || !ctx.equiv(returned)
}

/// Applies the inclusion rules, keeping surviving node ids.
pub fn reduce(full: &VariationalTrace) -> VariationalTrace {
    let nodes = &full.nodes;
    let mut keep: Vec<bool> = nodes.iter().map(keep_intrinsic).collect();

    // Returns: compare against the union of returns of the same frame.
    let mut returned: HashMap<Option<NodeId>, Condition> = HashMap::new();
    for n in nodes {
        if n.kind() == NodeKind::Return {
            returned
                .entry(n.parent)
                .and_modify(|c| *c = c.or(&n.context))
                .or_insert_with(|| n.context.clone());
        }
    }
    for (i, n) in nodes.iter().enumerate() {
        if let Payload::Return { value, .. } = &n.payload {
            keep[i] = keep_return(&n.context, value, &returned[&n.parent]);
        }
    }

    // Parameters follow the decision that comes after them.
    let mut decision_keep = None;
    for i in (0..nodes.len()).rev() {
        match nodes[i].kind() {
            NodeKind::Decision => decision_keep = Some(keep[i]),
            NodeKind::DecisionParameter => keep[i] = decision_keep.unwrap_or(false),
            _ => decision_keep = None,
        }
    }

    // Boxes survive iff some descendant survives. Children come after their
    // box, so a reverse sweep sees every descendant first.
    let index: HashMap<NodeId, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let mut alive_below = vec![false; nodes.len()];
    for i in (0..nodes.len()).rev() {
        if nodes[i].kind() == NodeKind::MethodBox {
            keep[i] = alive_below[i];
        }
        if keep[i] {
            if let Some(p) = nodes[i].parent {
                alive_below[index[&p]] = true;
            }
        }
    }

    let kept = nodes
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(n, _)| n.clone())
        .collect();
    VariationalTrace::from_nodes(&full.options, kept)
}

pub fn stats(t: &VariationalTrace) -> Stats {
    let decisions = t.nodes.iter().filter(|n| n.kind() == NodeKind::Decision).count();
    let statements = t.nodes.iter().filter(|n| n.kind() != NodeKind::MethodBox).count();
    Stats {
        decisions,
        statements,
    }
}

/// What one configuration sees of a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SliceDetail {
    StateChange {
        variable: String,
        old: Value,
        new: Value,
    },
    Decision {
        predicate: String,
        outcome: bool,
    },
    DecisionParameter {
        variable: String,
        value: Value,
    },
    Exception {
        kind: ErrorKind,
        message: String,
    },
    Return {
        function: String,
        value: Value,
    },
    MethodBox {
        function: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SliceEntry {
    pub id: NodeId,
    pub location: SourceLocation,
    pub detail: SliceDetail,
}

/// Nodes whose context `cfg` satisfies, in trace order, with choice values
/// read out for `cfg`.
pub fn per_config_slice(t: &VariationalTrace, cfg: &Configuration) -> Vec<SliceEntry> {
    let read = |v: &ChoiceValue| v.value_for(cfg).cloned().unwrap_or(Value::Undefined);
    t.nodes
        .iter()
        .filter(|n| n.context.eval(cfg))
        .map(|n| {
            let detail = match &n.payload {
                Payload::StateChange { variable, old, new } => SliceDetail::StateChange {
                    variable: variable.clone(),
                    old: read(old),
                    new: read(new),
                },
                Payload::Decision {
                    predicate,
                    true_cond,
                    ..
                } => SliceDetail::Decision {
                    predicate: predicate.clone(),
                    outcome: true_cond.eval(cfg),
                },
                Payload::DecisionParameter { variable, value } => SliceDetail::DecisionParameter {
                    variable: variable.clone(),
                    value: read(value),
                },
                Payload::Exception { kind, message } => SliceDetail::Exception {
                    kind: *kind,
                    message: message.clone(),
                },
                Payload::Return { function, value } => SliceDetail::Return {
                    function: function.clone(),
                    value: read(value),
                },
                Payload::MethodBox { function, .. } => SliceDetail::MethodBox {
                    function: function.clone(),
                },
            };
            SliceEntry {
                id: n.id,
                location: n.location.clone(),
                detail,
            }
        })
        .collect()
}

/// Generator-independent rendering: ids replaced by depth, conditions and
/// choice values in canonical text. Two traces describe the same behavior
/// iff their canonical forms are equal.
pub fn canonical_form(t: &VariationalTrace) -> String {
    let mut out = String::new();
    let mut depth: HashMap<NodeId, usize> = HashMap::new();
    for n in &t.nodes {
        let d = n.parent.map_or(0, |p| depth[&p] + 1);
        depth.insert(n.id, d);
        let _ = write!(
            out,
            "{}{} [{}] {}:{} ",
            "  ".repeat(d),
            n.kind(),
            n.context,
            n.location.line,
            n.location.column
        );
        let _ = write!(out, "{}", n.payload);
        out.push('\n');
    }
    out
}

/// Substitutes constants for options throughout the trace and drops nodes
/// whose context becomes unsatisfiable. Used by projection.
pub(crate) fn fix_options(t: &VariationalTrace, fixed: &[(usize, bool)]) -> VariationalTrace {
    let fix_cond = |c: &Condition| fixed.iter().fold(c.clone(), |acc, &(i, v)| acc.fix_option(i, v));
    let fix_choice = |c: &ChoiceValue| fixed.iter().fold(c.clone(), |acc, &(i, v)| acc.fix_option(i, v));
    let nodes = t
        .nodes
        .iter()
        .filter_map(|n| {
            let context = fix_cond(&n.context);
            if context.is_unsat() {
                return None;
            }
            Some(TraceNode {
                id: n.id,
                context,
                location: n.location.clone(),
                parent: n.parent,
                payload: n.payload.map_conditions(&fix_cond, &fix_choice),
            })
        })
        .collect();
    VariationalTrace::from_nodes(&t.options, nodes)
}

/// Incremental construction in trace order. Nodes can be withdrawn while
/// their frame is open, which lets the variational interpreter decide
/// inclusion as it goes.
pub struct TraceBuilder {
    options: Arc<OptionSet>,
    slots: Vec<Option<TraceNode>>,
    open: Vec<OpenBox>,
    next_id: NodeId,
    live: usize,
    peak: usize,
}

struct OpenBox {
    slot: usize,
    id: NodeId,
    live_children: usize,
}

impl TraceBuilder {
    pub fn new(options: &Arc<OptionSet>) -> Self {
        TraceBuilder {
            options: Arc::clone(options),
            slots: Vec::new(),
            open: Vec::new(),
            next_id: 0,
            live: 0,
            peak: 0,
        }
    }

    /// Number of nodes currently held, withdrawn ones excluded.
    pub fn retained(&self) -> usize {
        self.live
    }

    pub fn peak_retained(&self) -> usize {
        self.peak
    }

    pub fn push(&mut self, context: Condition, location: SourceLocation, payload: Payload) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        let parent = self.open.last().map(|b| b.id);
        if let Some(b) = self.open.last_mut() {
            b.live_children += 1;
        }
        let is_box = matches!(payload, Payload::MethodBox { .. });
        self.live += 1;
        self.peak = self.peak.max(self.live);
        self.slots.push(Some(TraceNode {
            id,
            context,
            location,
            parent,
            payload,
        }));
        if is_box {
            self.open.push(OpenBox {
                slot: self.slots.len() - 1,
                id,
                live_children: 0,
            });
        }
        id
    }

    pub fn open_box(&mut self, context: Condition, location: SourceLocation, function: &str) -> NodeId {
        self.push(
            context,
            location,
            Payload::MethodBox {
                function: function.to_string(),
                children: Vec::new(),
            },
        )
    }

    /// Withdraws a direct child of the innermost open box, given the slot
    /// position returned by [`TraceBuilder::position_of_last`].
    pub fn withdraw(&mut self, slot: usize) {
        if self.slots[slot].take().is_some() {
            self.live -= 1;
            if let Some(b) = self.open.last_mut() {
                b.live_children -= 1;
            }
        }
    }

    pub fn position_of_last(&self) -> usize {
        self.slots.len() - 1
    }

    pub fn node(&self, slot: usize) -> Option<&TraceNode> {
        self.slots[slot].as_ref()
    }

    /// Closes the innermost box, withdrawing it if nothing inside survived.
    pub fn close_box(&mut self) {
        let b = self.open.pop().expect("a box is open");
        if b.live_children == 0 {
            self.slots[b.slot] = None;
            self.live -= 1;
            if let Some(parent) = self.open.last_mut() {
                parent.live_children -= 1;
            }
        }
    }

    pub fn finish(mut self) -> VariationalTrace {
        while !self.open.is_empty() {
            self.close_box();
        }
        let nodes = self.slots.into_iter().flatten().collect();
        VariationalTrace::from_nodes(&self.options, nodes)
    }
}
