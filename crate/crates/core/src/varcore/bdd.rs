//! Reduced ordered binary decision diagrams behind [`Condition`](super::Condition).
//!
//! All diagrams live in one process-wide manager. Node references are stable
//! for the lifetime of the process: the node table only grows, so a reference
//! handed out under the lock stays valid after the lock is released. Variable
//! `i` is the `i`-th option of an [`OptionSet`](super::OptionSet) in its
//! lexicographic order; the manager itself does not know option names.

use std::collections::HashMap;
use std::sync::{Mutex, MutexGuard, OnceLock};

pub(crate) type NodeRef = u32;

pub(crate) const FALSE: NodeRef = 0;
pub(crate) const TRUE: NodeRef = 1;

const TERMINAL_VAR: u32 = u32::MAX;
const CACHE_LIMIT: usize = 1 << 21;

/// A literal of a product term: variable index and polarity.
pub(crate) type Literal = (u32, bool);

#[derive(Clone, Copy, Debug)]
struct Node {
    var: u32,
    lo: NodeRef,
    hi: NodeRef,
}

pub(crate) struct Manager {
    nodes: Vec<Node>,
    unique: HashMap<(u32, NodeRef, NodeRef), NodeRef>,
    and_cache: HashMap<(NodeRef, NodeRef), NodeRef>,
    not_cache: HashMap<NodeRef, NodeRef>,
}

static MANAGER: OnceLock<Mutex<Manager>> = OnceLock::new();

pub(crate) fn manager() -> MutexGuard<'static, Manager> {
    MANAGER
        .get_or_init(|| Mutex::new(Manager::new()))
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl Manager {
    fn new() -> Self {
        let terminal = Node {
            var: TERMINAL_VAR,
            lo: FALSE,
            hi: FALSE,
        };
        Manager {
            nodes: vec![terminal, terminal],
            unique: HashMap::new(),
            and_cache: HashMap::new(),
            not_cache: HashMap::new(),
        }
    }

    fn var_of(&self, f: NodeRef) -> u32 {
        self.nodes[f as usize].var
    }

    fn mk(&mut self, var: u32, lo: NodeRef, hi: NodeRef) -> NodeRef {
        if lo == hi {
            return lo;
        }
        if let Some(&id) = self.unique.get(&(var, lo, hi)) {
            return id;
        }
        let id = self.nodes.len() as NodeRef;
        self.nodes.push(Node { var, lo, hi });
        self.unique.insert((var, lo, hi), id);
        id
    }

    /// Shannon cofactors of `f` with respect to `var`, which must not be
    /// below `f`'s top variable.
    fn cofactors(&self, f: NodeRef, var: u32) -> (NodeRef, NodeRef) {
        let node = self.nodes[f as usize];
        if node.var == var {
            (node.lo, node.hi)
        } else {
            (f, f)
        }
    }

    pub(crate) fn literal(&mut self, var: u32, positive: bool) -> NodeRef {
        if positive {
            self.mk(var, FALSE, TRUE)
        } else {
            self.mk(var, TRUE, FALSE)
        }
    }

    pub(crate) fn not(&mut self, f: NodeRef) -> NodeRef {
        match f {
            FALSE => return TRUE,
            TRUE => return FALSE,
            _ => {}
        }
        if let Some(&r) = self.not_cache.get(&f) {
            return r;
        }
        let node = self.nodes[f as usize];
        let lo = self.not(node.lo);
        let hi = self.not(node.hi);
        let r = self.mk(node.var, lo, hi);
        self.not_cache.insert(f, r);
        r
    }

    pub(crate) fn and(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        if a == FALSE || b == FALSE {
            return FALSE;
        }
        if a == TRUE {
            return b;
        }
        if b == TRUE || a == b {
            return a;
        }
        let key = if a < b { (a, b) } else { (b, a) };
        if let Some(&r) = self.and_cache.get(&key) {
            return r;
        }
        let var = self.var_of(a).min(self.var_of(b));
        let (a0, a1) = self.cofactors(a, var);
        let (b0, b1) = self.cofactors(b, var);
        let lo = self.and(a0, b0);
        let hi = self.and(a1, b1);
        let r = self.mk(var, lo, hi);
        if self.and_cache.len() > CACHE_LIMIT {
            self.and_cache.clear();
            self.not_cache.clear();
        }
        self.and_cache.insert(key, r);
        r
    }

    pub(crate) fn or(&mut self, a: NodeRef, b: NodeRef) -> NodeRef {
        let na = self.not(a);
        let nb = self.not(b);
        let r = self.and(na, nb);
        self.not(r)
    }

    /// Fixes `var` to `value` everywhere in `f`.
    pub(crate) fn cofactor(&mut self, f: NodeRef, var: u32, value: bool) -> NodeRef {
        let mut memo = HashMap::new();
        self.cofactor_rec(f, var, value, &mut memo)
    }

    fn cofactor_rec(
        &mut self,
        f: NodeRef,
        var: u32,
        value: bool,
        memo: &mut HashMap<NodeRef, NodeRef>,
    ) -> NodeRef {
        let node = self.nodes[f as usize];
        if node.var == TERMINAL_VAR || node.var > var {
            return f;
        }
        if node.var == var {
            return if value { node.hi } else { node.lo };
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let lo = self.cofactor_rec(node.lo, var, value, memo);
        let hi = self.cofactor_rec(node.hi, var, value, memo);
        let r = self.mk(node.var, lo, hi);
        memo.insert(f, r);
        r
    }

    pub(crate) fn eval(&self, mut f: NodeRef, assignment: &[bool]) -> bool {
        loop {
            match f {
                FALSE => return false,
                TRUE => return true,
                _ => {
                    let node = self.nodes[f as usize];
                    f = if assignment[node.var as usize] {
                        node.hi
                    } else {
                        node.lo
                    };
                }
            }
        }
    }

    /// Builds the function whose truth table is `table`, indexed so that
    /// variable 0 is the most significant bit of the row index.
    pub(crate) fn from_truth_table(&mut self, table: &[bool], nvars: u32) -> NodeRef {
        debug_assert_eq!(table.len(), 1usize << nvars);
        self.table_rec(table, 0)
    }

    fn table_rec(&mut self, table: &[bool], var: u32) -> NodeRef {
        if table.len() == 1 {
            return if table[0] { TRUE } else { FALSE };
        }
        let (lo_half, hi_half) = table.split_at(table.len() / 2);
        let lo = self.table_rec(lo_half, var + 1);
        let hi = self.table_rec(hi_half, var + 1);
        self.mk(var, lo, hi)
    }

    /// Irredundant sum-of-products cover of `f` (Minato-Morreale).
    ///
    /// The result is a deterministic function of the diagram, and diagrams
    /// are canonical, so equivalent functions yield identical covers.
    pub(crate) fn isop(&mut self, f: NodeRef) -> Vec<Vec<Literal>> {
        let mut memo = HashMap::new();
        let (mut cubes, _) = self.isop_rec(f, f, &mut memo);
        for cube in &mut cubes {
            cube.sort_unstable();
        }
        cubes
    }

    #[allow(clippy::type_complexity)]
    fn isop_rec(
        &mut self,
        lower: NodeRef,
        upper: NodeRef,
        memo: &mut HashMap<(NodeRef, NodeRef), (Vec<Vec<Literal>>, NodeRef)>,
    ) -> (Vec<Vec<Literal>>, NodeRef) {
        if lower == FALSE {
            return (Vec::new(), FALSE);
        }
        if upper == TRUE {
            return (vec![Vec::new()], TRUE);
        }
        if let Some(hit) = memo.get(&(lower, upper)) {
            return hit.clone();
        }
        let var = self.var_of(lower).min(self.var_of(upper));
        let (l0, l1) = self.cofactors(lower, var);
        let (u0, u1) = self.cofactors(upper, var);

        let nu1 = self.not(u1);
        let l0_only = self.and(l0, nu1);
        let (c0, f0) = self.isop_rec(l0_only, u0, memo);

        let nu0 = self.not(u0);
        let l1_only = self.and(l1, nu0);
        let (c1, f1) = self.isop_rec(l1_only, u1, memo);

        let nf0 = self.not(f0);
        let nf1 = self.not(f1);
        let rest0 = self.and(l0, nf0);
        let rest1 = self.and(l1, nf1);
        let rest = self.or(rest0, rest1);
        let shared_upper = self.and(u0, u1);
        let (cs, fs) = self.isop_rec(rest, shared_upper, memo);

        let mut cubes = Vec::with_capacity(c0.len() + c1.len() + cs.len());
        cubes.extend(c0.into_iter().map(|mut c| {
            c.push((var, false));
            c
        }));
        cubes.extend(c1.into_iter().map(|mut c| {
            c.push((var, true));
            c
        }));
        cubes.extend(cs);

        let neg = self.literal(var, false);
        let pos = self.literal(var, true);
        let part0 = self.and(neg, f0);
        let part1 = self.and(pos, f1);
        let branches = self.or(part0, part1);
        let cover = self.or(branches, fs);

        memo.insert((lower, upper), (cubes.clone(), cover));
        (cubes, cover)
    }

    /// Number of satisfying assignments over `nvars` variables.
    pub(crate) fn sat_count(&self, f: NodeRef, nvars: u32) -> u128 {
        let mut memo = HashMap::new();
        self.count_rec(f, 0, nvars, &mut memo)
    }

    fn count_rec(
        &self,
        f: NodeRef,
        level: u32,
        nvars: u32,
        memo: &mut HashMap<(NodeRef, u32), u128>,
    ) -> u128 {
        match f {
            FALSE => return 0,
            TRUE => return 1u128 << (nvars - level),
            _ => {}
        }
        if let Some(&c) = memo.get(&(f, level)) {
            return c;
        }
        let node = self.nodes[f as usize];
        let skipped = node.var - level;
        let below = self.count_rec(node.lo, node.var + 1, nvars, memo)
            + self.count_rec(node.hi, node.var + 1, nvars, memo);
        let c = below << skipped;
        memo.insert((f, level), c);
        c
    }

    /// One satisfying assignment, unset variables false.
    pub(crate) fn pick(&self, mut f: NodeRef, nvars: u32) -> Option<Vec<bool>> {
        if f == FALSE {
            return None;
        }
        let mut out = vec![false; nvars as usize];
        while f != TRUE {
            let node = self.nodes[f as usize];
            if node.lo != FALSE {
                f = node.lo;
            } else {
                out[node.var as usize] = true;
                f = node.hi;
            }
        }
        Some(out)
    }
}
