use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{BitAnd, BitOr, Not};
use std::sync::Arc;

use super::bdd::{self, NodeRef};
use super::{CondError, Configuration, OptionSet};

/// A propositional formula over the options of an [`OptionSet`].
///
/// Backed by a reduced ordered BDD, so equality is semantic: two conditions
/// compare equal iff they have the same truth table.
#[derive(Clone)]
pub struct Condition {
    options: Arc<OptionSet>,
    node: NodeRef,
}

impl Condition {
    pub fn tt(options: &Arc<OptionSet>) -> Self {
        Condition {
            options: Arc::clone(options),
            node: bdd::TRUE,
        }
    }

    pub fn ff(options: &Arc<OptionSet>) -> Self {
        Condition {
            options: Arc::clone(options),
            node: bdd::FALSE,
        }
    }

    pub fn constant(options: &Arc<OptionSet>, value: bool) -> Self {
        if value {
            Self::tt(options)
        } else {
            Self::ff(options)
        }
    }

    pub fn option(options: &Arc<OptionSet>, name: &str) -> Result<Self, CondError> {
        let index = options
            .index_of(name)
            .ok_or_else(|| CondError::UnknownOption(name.to_string()))?;
        Ok(Self::literal(options, index, true))
    }

    pub(crate) fn literal(options: &Arc<OptionSet>, index: usize, positive: bool) -> Self {
        let node = bdd::manager().literal(index as u32, positive);
        Condition {
            options: Arc::clone(options),
            node,
        }
    }

    /// The single-configuration condition (a full minterm).
    pub fn of_configuration(cfg: &Configuration) -> Self {
        let mut m = bdd::manager();
        let mut node = bdd::TRUE;
        for (i, &v) in cfg.values().iter().enumerate().rev() {
            let lit = m.literal(i as u32, v);
            node = m.and(node, lit);
        }
        Condition {
            options: Arc::clone(cfg.options()),
            node,
        }
    }

    /// The condition satisfied by exactly the configurations whose index
    /// (binary counting order) is marked in `members`.
    pub fn from_members(options: &Arc<OptionSet>, members: &[bool]) -> Self {
        assert_eq!(
            members.len() as u64,
            options.configuration_count().unwrap_or(0),
            "membership table must cover every configuration"
        );
        let node = bdd::manager().from_truth_table(members, options.len() as u32);
        Condition {
            options: Arc::clone(options),
            node,
        }
    }

    pub fn options(&self) -> &Arc<OptionSet> {
        &self.options
    }

    fn same_space(&self, other: &Condition) -> bool {
        Arc::ptr_eq(&self.options, &other.options) || self.options == other.options
    }

    fn check(&self, other: &Condition) -> Result<(), CondError> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(CondError::OptionSetMismatch)
        }
    }

    fn with_node(&self, node: NodeRef) -> Condition {
        Condition {
            options: Arc::clone(&self.options),
            node,
        }
    }

    pub fn try_and(&self, other: &Condition) -> Result<Condition, CondError> {
        self.check(other)?;
        let node = bdd::manager().and(self.node, other.node);
        Ok(self.with_node(node))
    }

    pub fn try_or(&self, other: &Condition) -> Result<Condition, CondError> {
        self.check(other)?;
        let node = bdd::manager().or(self.node, other.node);
        Ok(self.with_node(node))
    }

    /// Conjunction. Panics if the operands live over different option sets;
    /// use [`Condition::try_and`] for a checked variant.
    pub fn and(&self, other: &Condition) -> Condition {
        self.try_and(other).expect("conditions over different option sets")
    }

    pub fn or(&self, other: &Condition) -> Condition {
        self.try_or(other).expect("conditions over different option sets")
    }

    pub fn negate(&self) -> Condition {
        let node = bdd::manager().not(self.node);
        self.with_node(node)
    }

    /// `self ∧ ¬other`.
    pub fn minus(&self, other: &Condition) -> Condition {
        self.and(&other.negate())
    }

    pub fn is_sat(&self) -> bool {
        self.node != bdd::FALSE
    }

    pub fn is_unsat(&self) -> bool {
        self.node == bdd::FALSE
    }

    pub fn is_tautology(&self) -> bool {
        self.node == bdd::TRUE
    }

    pub fn equiv(&self, other: &Condition) -> bool {
        self == other
    }

    /// `self → other` is valid.
    pub fn implies(&self, other: &Condition) -> bool {
        self.minus(other).is_unsat()
    }

    /// `self ∧ other` is satisfiable.
    pub fn overlaps(&self, other: &Condition) -> bool {
        self.and(other).is_sat()
    }

    pub fn eval(&self, cfg: &Configuration) -> bool {
        debug_assert_eq!(cfg.values().len(), self.options.len());
        bdd::manager().eval(self.node, cfg.values())
    }

    /// Substitutes a constant for one option.
    pub fn fix_option(&self, index: usize, value: bool) -> Condition {
        let node = bdd::manager().cofactor(self.node, index as u32, value);
        self.with_node(node)
    }

    /// Number of satisfying configurations.
    pub fn count(&self) -> u128 {
        bdd::manager().sat_count(self.node, self.options.len() as u32)
    }

    /// Some satisfying configuration, preferring options disabled.
    pub fn witness(&self) -> Option<Configuration> {
        let values = bdd::manager().pick(self.node, self.options.len() as u32)?;
        Some(Configuration::new(&self.options, values).expect("witness covers all options"))
    }

    /// Canonical disjunctive normal form.
    ///
    /// Product terms come from an irredundant cover of the diagram; literals
    /// inside a term follow option order and terms are sorted by their
    /// literal sequences (positive before negative). Glyphs are `&`, `|`,
    /// `!`; the constants render as `true` and `false`.
    pub fn to_canonical_string(&self) -> String {
        match self.node {
            bdd::TRUE => return "true".to_string(),
            bdd::FALSE => return "false".to_string(),
            _ => {}
        }
        let mut cubes = bdd::manager().isop(self.node);
        cubes.sort_by(|a, b| {
            let key = |c: &Vec<(u32, bool)>| c.iter().map(|&(v, p)| (v, !p)).collect::<Vec<_>>();
            key(a).cmp(&key(b))
        });
        let names = self.options.names();
        cubes
            .iter()
            .map(|cube| {
                cube.iter()
                    .map(|&(v, positive)| {
                        let name = &names[v as usize];
                        if positive {
                            name.clone()
                        } else {
                            format!("!{name}")
                        }
                    })
                    .collect::<Vec<_>>()
                    .join(" & ")
            })
            .collect::<Vec<_>>()
            .join(" | ")
    }

    /// Parses the textual form produced by [`Condition::to_canonical_string`]
    /// (and any formula using `!`, `&`, `|`, parentheses, `true`, `false`).
    pub fn parse(options: &Arc<OptionSet>, text: &str) -> Result<Condition, CondError> {
        let mut p = CondParser {
            options,
            src: text.as_bytes(),
            pos: 0,
        };
        let c = p.disjunction()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("trailing input"));
        }
        Ok(c)
    }
}

impl PartialEq for Condition {
    fn eq(&self, other: &Self) -> bool {
        self.node == other.node && self.same_space(other)
    }
}

impl Eq for Condition {}

impl Hash for Condition {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.node.hash(state);
    }
}

impl fmt::Debug for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Condition({})", self.to_canonical_string())
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

impl BitAnd for &Condition {
    type Output = Condition;
    fn bitand(self, rhs: &Condition) -> Condition {
        self.and(rhs)
    }
}

impl BitOr for &Condition {
    type Output = Condition;
    fn bitor(self, rhs: &Condition) -> Condition {
        self.or(rhs)
    }
}

impl Not for &Condition {
    type Output = Condition;
    fn not(self) -> Condition {
        self.negate()
    }
}

struct CondParser<'a> {
    options: &'a Arc<OptionSet>,
    src: &'a [u8],
    pos: usize,
}

impl CondParser<'_> {
    fn error(&self, msg: &str) -> CondError {
        CondError::Syntax {
            offset: self.pos,
            message: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn disjunction(&mut self) -> Result<Condition, CondError> {
        let mut acc = self.conjunction()?;
        while self.eat(b'|') {
            let rhs = self.conjunction()?;
            acc = acc.or(&rhs);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Condition, CondError> {
        let mut acc = self.unary()?;
        while self.eat(b'&') {
            let rhs = self.unary()?;
            acc = acc.and(&rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Condition, CondError> {
        if self.eat(b'!') {
            return Ok(self.unary()?.negate());
        }
        if self.eat(b'(') {
            let inner = self.disjunction()?;
            if !self.eat(b')') {
                return Err(self.error("expected ')'"));
            }
            return Ok(inner);
        }
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected option name"));
        }
        let word = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match word {
            "true" => Ok(Condition::tt(self.options)),
            "false" => Ok(Condition::ff(self.options)),
            name => Condition::option(self.options, name),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Arc<OptionSet> {
        OptionSet::new(["A", "B"]).unwrap()
    }

    #[test]
    fn and_examples() {
        let o = ab();
        let a = Condition::option(&o, "A").unwrap();
        assert!(a.and(&a.negate()).is_unsat());
        assert_eq!(a.and(&Condition::tt(&o)), a);
    }

    #[test]
    fn running_example_context() {
        let o = OptionSet::new(["flag", "ipv4"]).unwrap();
        let flag = Condition::option(&o, "flag").unwrap();
        let ipv4 = Condition::option(&o, "ipv4").unwrap();
        let ctx = flag.negate().and(&ipv4);
        assert_eq!(ctx.to_canonical_string(), "!flag & ipv4");
    }

    #[test]
    fn sat_examples() {
        let o = ab();
        let a = Condition::option(&o, "A").unwrap();
        let b = Condition::option(&o, "B").unwrap();
        assert!(!a.and(&a.negate()).is_sat());
        assert!(a.and(&b.negate()).is_sat());
        assert!(!a.or(&b).and(&a.negate()).and(&b.negate()).is_sat());
    }

    #[test]
    fn equiv_examples() {
        let o = ab();
        let a = Condition::option(&o, "A").unwrap();
        let b = Condition::option(&o, "B").unwrap();
        let de_morgan = a.negate().and(&b.negate()).negate();
        assert!(a.or(&b).equiv(&de_morgan));
        assert!(a.equiv(&a.and(&Condition::tt(&o))));
        assert!(!a.equiv(&b));
    }

    #[test]
    fn mismatched_option_sets_are_rejected() {
        let a = Condition::option(&ab(), "A").unwrap();
        let other = OptionSet::new(["A", "C"]).unwrap();
        let c = Condition::option(&other, "A").unwrap();
        assert!(matches!(a.try_and(&c), Err(CondError::OptionSetMismatch)));
        // structurally equal sets built separately are the same space
        let a2 = Condition::option(&ab(), "A").unwrap();
        assert!(a.try_and(&a2).is_ok());
    }

    #[test]
    fn rendering_is_dnf() {
        let o = OptionSet::new(["A", "B", "C"]).unwrap();
        let a = Condition::option(&o, "A").unwrap();
        let b = Condition::option(&o, "B").unwrap();
        let c = Condition::option(&o, "C").unwrap();
        assert_eq!(a.or(&b).to_string(), "A | B");
        assert_eq!(Condition::tt(&o).to_string(), "true");
        assert_eq!(Condition::ff(&o).to_string(), "false");
        let f = a.and(&b.negate()).or(&c);
        assert_eq!(f.to_string(), "A & !B | C");
        let parsed = Condition::parse(&o, &f.to_string()).unwrap();
        assert_eq!(parsed, f);
    }

    #[test]
    fn parse_rejects_garbage() {
        let o = ab();
        assert!(Condition::parse(&o, "A &").is_err());
        assert!(Condition::parse(&o, "Z").is_err());
        assert!(Condition::parse(&o, "(A | B").is_err());
        assert_eq!(
            Condition::parse(&o, "!(A | B)").unwrap().to_string(),
            "!A & !B"
        );
    }

    #[test]
    fn members_table_round_trips() {
        let o = ab();
        let table = [false, true, true, true];
        let c = Condition::from_members(&o, &table);
        assert_eq!(c.to_string(), "A | B");
        for cfg in o.configurations() {
            assert_eq!(c.eval(&cfg), table[cfg.index() as usize]);
        }
        assert_eq!(c.count(), 3);
    }
}
