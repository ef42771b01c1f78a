//! Global alignment of event logs.

use super::log::{ConcreteTrace, EventKey, TraceEvent};
use crate::varcore::Configuration;

/// One step of an alignment of a profile `a` against a new sequence `b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AlignOp {
    /// `a[i]` and `b[j]` share a column.
    Match,
    /// `a[i]` has no counterpart in `b`.
    GapInNew,
    /// `b[j]` starts a column of its own.
    GapInProfile,
}

const MATCH: i64 = 2;
const GAP: i64 = -1;

const D_MATCH: u8 = 1;
const D_GAP_NEW: u8 = 2;
const D_GAP_PROFILE: u8 = 3;

/// Needleman-Wunsch alignment with match +2, gap -1 and mismatches
/// disallowed. Among optimal alignments the one preferring, at every step
/// from the front, a match over a gap in `b` over a gap in `a` is returned.
///
/// Scores are computed over suffixes so the traceback runs forward and the
/// tie-break applies in reading order. Only two score rows are kept; the
/// direction table takes one byte per cell.
pub fn needleman_wunsch<A, B>(a: &[A], b: &[B], eq: impl Fn(&A, &B) -> bool) -> Vec<AlignOp> {
    let (m, n) = (a.len(), b.len());
    let w = n + 1;
    let mut dir = vec![0u8; (m + 1) * w];
    let mut next: Vec<i64> = (0..=n).map(|j| GAP * (n - j) as i64).collect();
    let mut cur = vec![0i64; w];
    dir[m * w..m * w + n].fill(D_GAP_PROFILE);
    for i in (0..m).rev() {
        cur[n] = GAP * (m - i) as i64;
        dir[i * w + n] = D_GAP_NEW;
        for j in (0..n).rev() {
            let mut best = GAP + next[j];
            let mut d = D_GAP_NEW;
            if eq(&a[i], &b[j]) {
                let s = MATCH + next[j + 1];
                if s >= best {
                    best = s;
                    d = D_MATCH;
                }
            }
            let s = GAP + cur[j + 1];
            if s > best {
                best = s;
                d = D_GAP_PROFILE;
            }
            cur[j] = best;
            dir[i * w + j] = d;
        }
        std::mem::swap(&mut cur, &mut next);
    }

    let mut ops = Vec::with_capacity(m.max(n));
    let (mut i, mut j) = (0, 0);
    while i < m || j < n {
        match dir[i * w + j] {
            D_MATCH => {
                ops.push(AlignOp::Match);
                i += 1;
                j += 1;
            }
            D_GAP_NEW => {
                ops.push(AlignOp::GapInNew);
                i += 1;
            }
            _ => {
                ops.push(AlignOp::GapInProfile);
                j += 1;
            }
        }
    }
    ops
}

/// Events of several configurations sharing one key.
#[derive(Clone, Debug)]
pub struct Column {
    pub key: EventKey,
    /// `(trace index, event)` pairs in trace order.
    pub events: Vec<(usize, TraceEvent)>,
}

/// The alignment profile: columns in key order plus the configuration of
/// each trace.
#[derive(Clone, Debug, Default)]
pub struct AlignedTraces {
    pub configs: Vec<Configuration>,
    pub columns: Vec<Column>,
}

impl AlignedTraces {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of events held in the profile.
    pub fn retained_events(&self) -> usize {
        self.columns.iter().map(|c| c.events.len()).sum()
    }

    /// Aligns one more trace against the profile and folds it in.
    pub fn add(&mut self, trace: ConcreteTrace) {
        let t = self.configs.len();
        self.configs.push(trace.config);
        let ops = needleman_wunsch(&self.columns, &trace.events, |c, e| c.key == e.key);
        let old = std::mem::take(&mut self.columns);
        let mut old = old.into_iter();
        let mut new = trace.events.into_iter();
        let mut columns = Vec::with_capacity(ops.len());
        for op in ops {
            match op {
                AlignOp::Match => {
                    let mut c = old.next().expect("profile column");
                    c.events.push((t, new.next().expect("trace event")));
                    columns.push(c);
                }
                AlignOp::GapInNew => columns.push(old.next().expect("profile column")),
                AlignOp::GapInProfile => {
                    let e = new.next().expect("trace event");
                    columns.push(Column {
                        key: e.key.clone(),
                        events: vec![(t, e)],
                    });
                }
            }
        }
        // Gap columns of the two sides come out in tie-break order; sorting
        // by key keeps the profile ordered so that, for the next trace, the
        // longest common subsequence is exactly the set of shared keys.
        columns.sort_by(|x, y| x.key.cmp(&y.key));
        self.columns = columns;
    }

    /// Events of trace `t`, in column order.
    pub fn project(&self, t: usize) -> Vec<&TraceEvent> {
        self.columns
            .iter()
            .filter_map(|c| c.events.iter().find(|(i, _)| *i == t).map(|(_, e)| e))
            .collect()
    }
}

/// Progressive alignment: traces are folded in one after another.
pub fn align(traces: Vec<ConcreteTrace>) -> AlignedTraces {
    let mut a = AlignedTraces::new();
    for t in traces {
        a.add(t);
    }
    a
}
