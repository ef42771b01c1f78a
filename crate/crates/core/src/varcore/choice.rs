use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use super::{CondError, Condition, Configuration, OptionSet, Value};

/// A partition of (part of) the configuration space into conditions, each
/// mapped to one concrete value.
///
/// Kept simplified at all times: entry conditions are satisfiable and
/// pairwise disjoint, no two entries carry equal values, and entries are
/// sorted by value.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Choice<V> {
    options: Arc<OptionSet>,
    entries: Vec<(Condition, V)>,
}

pub type ChoiceValue = Choice<Value>;

/// Result of lifting a fallible operation over choices: the successful
/// partitions plus, per distinct failure, the condition under which it
/// occurs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lifted<V, E> {
    pub value: Choice<V>,
    pub errors: Vec<(Condition, E)>,
}

impl<V: Clone + Ord> Choice<V> {
    /// The choice over an empty domain.
    pub fn empty(options: &Arc<OptionSet>) -> Self {
        Choice {
            options: Arc::clone(options),
            entries: Vec::new(),
        }
    }

    /// `value` everywhere in `ctx`.
    pub fn single(ctx: &Condition, value: V) -> Self {
        Self::from_pairs(ctx.options(), [(ctx.clone(), value)])
    }

    /// Builds a simplified choice from `(condition, value)` pairs. Pairs with
    /// equal values are merged and unsatisfiable ones dropped; the caller is
    /// responsible for the conditions being pairwise disjoint.
    pub fn from_pairs<I>(options: &Arc<OptionSet>, pairs: I) -> Self
    where
        I: IntoIterator<Item = (Condition, V)>,
    {
        let mut by_value: BTreeMap<V, Condition> = BTreeMap::new();
        for (cond, value) in pairs {
            if cond.is_unsat() {
                continue;
            }
            by_value
                .entry(value)
                .and_modify(|c| *c = c.or(&cond))
                .or_insert(cond);
        }
        Choice {
            options: Arc::clone(options),
            entries: by_value.into_iter().map(|(v, c)| (c, v)).collect(),
        }
    }

    /// `then_v` where `cond` holds, `else_v` elsewhere.
    pub fn choice(cond: &Condition, then_v: &Choice<V>, else_v: &Choice<V>) -> Self {
        let not_cond = cond.negate();
        let pairs = then_v
            .entries
            .iter()
            .map(|(c, v)| (c.and(cond), v.clone()))
            .chain(
                else_v
                    .entries
                    .iter()
                    .map(|(c, v)| (c.and(&not_cond), v.clone())),
            );
        Self::from_pairs(cond.options(), pairs)
    }

    /// Overwrites the partitions inside `cond` with `value`.
    pub fn assign(&self, cond: &Condition, value: &Choice<V>) -> Self {
        Self::choice(cond, value, self)
    }

    /// Narrows the choice to `cond`, which must be satisfiable.
    pub fn restrict(&self, cond: &Condition) -> Result<Self, CondError> {
        if cond.is_unsat() {
            return Err(CondError::Unsatisfiable);
        }
        Ok(self.narrow(cond))
    }

    /// Like [`Choice::restrict`] but accepts an unsatisfiable condition,
    /// yielding the empty choice.
    pub fn narrow(&self, cond: &Condition) -> Self {
        Self::from_pairs(
            &self.options,
            self.entries.iter().map(|(c, v)| (c.and(cond), v.clone())),
        )
    }

    /// Substitutes a constant for one option in every entry condition.
    pub fn fix_option(&self, index: usize, value: bool) -> Self {
        Self::from_pairs(
            &self.options,
            self.entries
                .iter()
                .map(|(c, v)| (c.fix_option(index, value), v.clone())),
        )
    }

    /// Number of distinct values taken across configurations in `under`.
    pub fn distinct_values(&self, under: &Condition) -> Result<usize, CondError> {
        if under.is_unsat() {
            return Err(CondError::Unsatisfiable);
        }
        Ok(self.entries.iter().filter(|(c, _)| c.overlaps(under)).count())
    }

    pub fn map<W: Clone + Ord>(&self, mut f: impl FnMut(&V) -> W) -> Choice<W> {
        Choice::from_pairs(
            &self.options,
            self.entries.iter().map(|(c, v)| (c.clone(), f(v))),
        )
    }

    /// Union of the conditions whose value satisfies `pred`.
    pub fn condition_where(&self, mut pred: impl FnMut(&V) -> bool) -> Condition {
        self.entries
            .iter()
            .filter(|(_, v)| pred(v))
            .fold(Condition::ff(&self.options), |acc, (c, _)| acc.or(c))
    }

    /// Applies a fallible unary operation partition-wise.
    pub fn lift1<W, E>(&self, mut op: impl FnMut(&V) -> Result<W, E>) -> Lifted<W, E>
    where
        W: Clone + Ord,
        E: Clone + Ord,
    {
        let mut ok = Vec::new();
        let mut errors: BTreeMap<E, Condition> = BTreeMap::new();
        for (c, v) in &self.entries {
            match op(v) {
                Ok(w) => ok.push((c.clone(), w)),
                Err(e) => merge_error(&mut errors, e, c),
            }
        }
        Lifted {
            value: Choice::from_pairs(&self.options, ok),
            errors: errors.into_iter().map(|(e, c)| (c, e)).collect(),
        }
    }

    /// Applies a fallible binary operation to every satisfiable pairing of
    /// partitions.
    pub fn lift2<B, W, E>(
        a: &Choice<V>,
        b: &Choice<B>,
        mut op: impl FnMut(&V, &B) -> Result<W, E>,
    ) -> Lifted<W, E>
    where
        B: Clone + Ord,
        W: Clone + Ord,
        E: Clone + Ord,
    {
        let mut ok = Vec::new();
        let mut errors: BTreeMap<E, Condition> = BTreeMap::new();
        for (ca, va) in &a.entries {
            for (cb, vb) in &b.entries {
                let both = ca.and(cb);
                if both.is_unsat() {
                    continue;
                }
                match op(va, vb) {
                    Ok(w) => ok.push((both, w)),
                    Err(e) => merge_error(&mut errors, e, &both),
                }
            }
        }
        Lifted {
            value: Choice::from_pairs(&a.options, ok),
            errors: errors.into_iter().map(|(e, c)| (c, e)).collect(),
        }
    }
}

fn merge_error<E: Ord>(errors: &mut BTreeMap<E, Condition>, e: E, c: &Condition) {
    errors
        .entry(e)
        .and_modify(|acc| *acc = acc.or(c))
        .or_insert_with(|| c.clone());
}

impl<V> Choice<V> {
    pub fn options(&self) -> &Arc<OptionSet> {
        &self.options
    }

    pub fn entries(&self) -> &[(Condition, V)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The part of the configuration space the choice covers.
    pub fn domain(&self) -> Condition {
        self.entries
            .iter()
            .fold(Condition::ff(&self.options), |acc, (c, _)| acc.or(c))
    }

    pub fn value_for(&self, cfg: &Configuration) -> Option<&V> {
        self.entries
            .iter()
            .find(|(c, _)| c.eval(cfg))
            .map(|(_, v)| v)
    }

    /// The value when the choice has exactly one partition.
    pub fn as_single(&self) -> Option<&V> {
        match self.entries.as_slice() {
            [(_, v)] => Some(v),
            _ => None,
        }
    }

    /// Checks that entry conditions are satisfiable and pairwise disjoint.
    pub fn is_well_formed(&self) -> bool {
        self.entries.iter().all(|(c, _)| c.is_sat())
            && self.entries.iter().enumerate().all(|(i, (ci, _))| {
                self.entries[i + 1..]
                    .iter()
                    .all(|(cj, _)| !ci.overlaps(cj))
            })
    }
}

impl<V: fmt::Display> fmt::Display for Choice<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (c, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}: {v}")?;
        }
        f.write_str("}")
    }
}

impl<V: fmt::Debug> fmt::Debug for Choice<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (c, v)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}: {v:?}")?;
        }
        f.write_str("}")
    }
}
