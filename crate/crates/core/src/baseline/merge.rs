//! Turning aligned logs into one conditional trace.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use super::align::AlignedTraces;
use super::log::EventPayload;
use crate::minilang::Program;
use crate::tracegraph::{NodeId, Payload, TraceNode, VariationalTrace};
use crate::varcore::{ChoiceValue, Condition, OptionSet, Value};

struct Conds<'a> {
    opts: &'a Arc<OptionSet>,
    /// Configuration index of each trace.
    index: Vec<usize>,
    size: usize,
}

impl Conds<'_> {
    fn of(&self, traces: impl IntoIterator<Item = usize>) -> Condition {
        let mut members = vec![false; self.size];
        for t in traces {
            members[self.index[t]] = true;
        }
        Condition::from_members(self.opts, &members)
    }

    fn choice(&self, pairs: impl IntoIterator<Item = (usize, Value)>) -> ChoiceValue {
        let mut groups: Vec<(Value, Vec<usize>)> = Vec::new();
        for (t, v) in pairs {
            match groups.iter_mut().find(|(g, _)| *g == v) {
                Some((_, ts)) => ts.push(t),
                None => groups.push((v, vec![t])),
            }
        }
        ChoiceValue::from_pairs(self.opts, groups.into_iter().map(|(v, ts)| (self.of(ts), v)))
    }
}

/// Merges aligned logs into the unreduced trace: one node per column (a
/// decision parameter node per guard variable besides), in key order.
///
/// The `new` value of a write covers every configuration still running the
/// frame, so the merge replays each configuration's variables on the side.
pub fn merge(p: &Program, a: &AlignedTraces) -> VariationalTrace {
    let opts = &p.options;
    let conds = Conds {
        opts,
        index: a.configs.iter().map(|c| c.index() as usize).collect(),
        size: 1usize << opts.len(),
    };
    let n_traces = a.configs.len();

    let mut columns: Vec<_> = a.columns.iter().collect();
    columns.sort_by(|x, y| x.key.cmp(&y.key));

    let mut nodes: Vec<TraceNode> = Vec::new();
    let push = |nodes: &mut Vec<TraceNode>, context, location, parent, payload| {
        let id = nodes.len() as NodeId;
        nodes.push(TraceNode {
            id,
            context,
            location,
            parent,
            payload,
        });
        id
    };

    let main = p.main();
    let root = push(
        &mut nodes,
        Condition::tt(opts),
        main.location.clone(),
        None,
        Payload::MethodBox {
            function: main.name.clone(),
            children: Vec::new(),
        },
    );
    let mut boxes: HashMap<Vec<u32>, NodeId> = HashMap::from([(Vec::new(), root)]);
    let mut members: HashMap<Vec<u32>, Vec<usize>> = HashMap::from([(Vec::new(), (0..n_traces).collect())]);
    let mut vars: HashMap<(usize, Vec<u32>), HashMap<String, Value>> = HashMap::new();
    let mut dead = vec![false; n_traces];
    let mut returned: HashSet<(usize, Vec<u32>)> = HashSet::new();

    for col in columns {
        let first = &col.events[0].1;
        let frame = first.frame().to_vec();
        let parent = Some(boxes[&frame]);
        let location = first.location.clone();
        let ctx = conds.of(col.events.iter().map(|(t, _)| *t));
        match &first.payload {
            EventPayload::Assign { variable, .. } => {
                let old = conds.choice(col.events.iter().map(|(t, e)| match &e.payload {
                    EventPayload::Assign { old, .. } => (*t, old.clone()),
                    _ => unreachable!("a column holds one kind of event"),
                }));
                for (t, e) in &col.events {
                    if let EventPayload::Assign { new, .. } = &e.payload {
                        vars.entry((*t, frame.clone()))
                            .or_default()
                            .insert(variable.clone(), new.clone());
                    }
                }
                let live = members[&frame]
                    .iter()
                    .copied()
                    .filter(|&t| !dead[t] && !returned.contains(&(t, frame.clone())));
                let new = conds.choice(live.map(|t| {
                    let v = vars
                        .get(&(t, frame.clone()))
                        .and_then(|m| m.get(variable))
                        .cloned()
                        .unwrap_or(Value::Undefined);
                    (t, v)
                }));
                push(
                    &mut nodes,
                    ctx,
                    location,
                    parent,
                    Payload::StateChange {
                        variable: variable.clone(),
                        old,
                        new,
                    },
                );
            }
            EventPayload::Branch { predicate, params, .. } => {
                for (k, (name, _)) in params.iter().enumerate() {
                    let value = conds.choice(col.events.iter().map(|(t, e)| match &e.payload {
                        EventPayload::Branch { params, .. } => (*t, params[k].1.clone()),
                        _ => unreachable!("a column holds one kind of event"),
                    }));
                    push(
                        &mut nodes,
                        ctx.clone(),
                        location.clone(),
                        parent,
                        Payload::DecisionParameter {
                            variable: name.clone(),
                            value,
                        },
                    );
                }
                let taken = |want: bool| {
                    conds.of(col.events.iter().filter_map(|(t, e)| match &e.payload {
                        EventPayload::Branch { outcome, .. } if *outcome == want => Some(*t),
                        _ => None,
                    }))
                };
                let payload = Payload::Decision {
                    predicate: predicate.clone(),
                    true_cond: taken(true),
                    false_cond: taken(false),
                };
                push(&mut nodes, ctx, location, parent, payload);
            }
            EventPayload::Call { function, .. } => {
                let mut child = col.key[..col.key.len() - 1].to_vec();
                child.push(1);
                let id = push(
                    &mut nodes,
                    ctx,
                    location,
                    parent,
                    Payload::MethodBox {
                        function: function.clone(),
                        children: Vec::new(),
                    },
                );
                for (t, e) in &col.events {
                    if let EventPayload::Call { args, .. } = &e.payload {
                        vars.insert((*t, child.clone()), args.iter().cloned().collect());
                    }
                }
                members.insert(child.clone(), col.events.iter().map(|(t, _)| *t).collect());
                boxes.insert(child, id);
            }
            EventPayload::Return { function, .. } => {
                let value = conds.choice(col.events.iter().map(|(t, e)| match &e.payload {
                    EventPayload::Return { value, .. } => (*t, value.clone()),
                    _ => unreachable!("a column holds one kind of event"),
                }));
                for (t, _) in &col.events {
                    returned.insert((*t, frame.clone()));
                }
                push(
                    &mut nodes,
                    ctx,
                    location,
                    parent,
                    Payload::Return {
                        function: function.clone(),
                        value,
                    },
                );
            }
            EventPayload::Exception { kind, message } => {
                for (t, _) in &col.events {
                    dead[*t] = true;
                }
                push(
                    &mut nodes,
                    ctx,
                    location,
                    parent,
                    Payload::Exception {
                        kind: *kind,
                        message: message.clone(),
                    },
                );
            }
        }
    }
    VariationalTrace::from_nodes(opts, nodes)
}
