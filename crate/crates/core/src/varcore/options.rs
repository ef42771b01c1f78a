use std::fmt;
use std::sync::Arc;

use super::CondError;

/// The universe of boolean options, kept in lexicographic order.
///
/// Every [`Condition`](super::Condition) refers to options by their position
/// in this order, so canonical renderings depend only on the names.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct OptionSet {
    names: Vec<String>,
}

impl OptionSet {
    pub fn new<I, S>(names: I) -> Result<Arc<Self>, CondError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        if let Some(bad) = names.iter().find(|n| !is_identifier(n)) {
            return Err(CondError::InvalidOptionName(bad.clone()));
        }
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CondError::DuplicateOption(w[0].clone()));
        }
        Ok(Arc::new(OptionSet { names }))
    }

    pub fn empty() -> Arc<Self> {
        Arc::new(OptionSet { names: Vec::new() })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// Number of configurations, if it fits in a `u64`.
    pub fn configuration_count(&self) -> Option<u64> {
        1u64.checked_shl(self.names.len() as u32)
    }

    /// All configurations in binary counting order: the first option is the
    /// most significant bit, so index 0 disables everything.
    pub fn configurations(self: &Arc<Self>) -> impl Iterator<Item = Configuration> + '_ {
        let count = 1u64 << self.names.len();
        (0..count).map(move |i| Configuration::from_index(self, i))
    }
}

impl fmt::Debug for OptionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.names).finish()
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A total assignment of booleans to the options of an [`OptionSet`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    options: Arc<OptionSet>,
    values: Vec<bool>,
}

impl Configuration {
    pub fn new(options: &Arc<OptionSet>, values: Vec<bool>) -> Result<Self, CondError> {
        if values.len() != options.len() {
            return Err(CondError::IncompleteConfiguration {
                expected: options.len(),
                got: values.len(),
            });
        }
        Ok(Configuration {
            options: Arc::clone(options),
            values,
        })
    }

    /// Builds a configuration from the names of the enabled options.
    pub fn with_enabled<'a, I>(options: &Arc<OptionSet>, enabled: I) -> Result<Self, CondError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut values = vec![false; options.len()];
        for name in enabled {
            let i = options
                .index_of(name)
                .ok_or_else(|| CondError::UnknownOption(name.to_string()))?;
            values[i] = true;
        }
        Ok(Configuration {
            options: Arc::clone(options),
            values,
        })
    }

    pub fn from_index(options: &Arc<OptionSet>, index: u64) -> Self {
        let n = options.len();
        let values = (0..n).map(|j| (index >> (n - 1 - j)) & 1 == 1).collect();
        Configuration {
            options: Arc::clone(options),
            values,
        }
    }

    pub fn index(&self) -> u64 {
        self.values
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b))
    }

    pub fn options(&self) -> &Arc<OptionSet> {
        &self.options
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.options.index_of(name).map(|i| self.values[i])
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (name, v)) in self.options.names().iter().zip(&self.values).enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name}:{}", u8::from(*v))?;
        }
        write!(f, "}}")
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}
