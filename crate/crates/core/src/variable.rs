//! Discrete variables, their levelsets, and observed evidence.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A discrete variable with an ordered levelset.
///
/// Cloning is cheap: name and levels are shared.
#[derive(Clone)]
pub struct Variable {
    name: Arc<str>,
    levels: Arc<[String]>,
}

impl Variable {
    pub fn new<S, L>(name: S, levels: impl IntoIterator<Item = L>) -> Result<Self>
    where
        S: Into<String>,
        L: Into<String>,
    {
        let name: String = name.into();
        let levels: Vec<String> = levels.into_iter().map(Into::into).collect();
        if name.is_empty() {
            return Err(Error::InvalidVariable("empty variable name".into()));
        }
        if levels.is_empty() {
            return Err(Error::InvalidVariable(format!("`{name}` has no levels")));
        }
        for (i, l) in levels.iter().enumerate() {
            if levels[..i].contains(l) {
                return Err(Error::InvalidVariable(format!("`{name}` repeats level `{l}`")));
            }
        }
        Ok(Variable { name: name.into(), levels: levels.into() })
    }

    /// Variable with levels `0..card` rendered as strings.
    pub fn with_cardinality(name: impl Into<String>, card: usize) -> Result<Self> {
        Self::new(name, (0..card).map(|i| i.to_string()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn cardinality(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }

    pub fn same_levels(&self, other: &Variable) -> bool {
        Arc::ptr_eq(&self.levels, &other.levels) || self.levels == other.levels
    }
}

impl PartialEq for Variable {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.same_levels(other)
    }
}

impl Eq for Variable {}

impl fmt::Debug for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.name, self.levels)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Helpers on ordered variable lists used as domains.
pub mod domain {
    use super::Variable;
    use crate::error::{Error, Result};

    pub fn position(domain: &[Variable], name: &str) -> Option<usize> {
        domain.iter().position(|v| v.name() == name)
    }

    pub fn contains(domain: &[Variable], name: &str) -> bool {
        position(domain, name).is_some()
    }

    pub fn names(domain: &[Variable]) -> Vec<String> {
        domain.iter().map(|v| v.name().to_string()).collect()
    }

    pub fn state_space(domain: &[Variable]) -> usize {
        domain.iter().map(Variable::cardinality).product()
    }

    /// `a` followed by the members of `b` not in `a`; shared names must agree
    /// on their levelsets.
    pub fn union(a: &[Variable], b: &[Variable]) -> Result<Vec<Variable>> {
        let mut out = a.to_vec();
        for v in b {
            match a.iter().find(|u| u.name() == v.name()) {
                Some(u) if !u.same_levels(v) => {
                    return Err(Error::DomainMismatch(v.name().to_string()))
                }
                Some(_) => {}
                None => out.push(v.clone()),
            }
        }
        Ok(out)
    }

    /// Members of `a` (in `a`'s order) also named in `b`.
    pub fn intersection(a: &[Variable], b: &[Variable]) -> Vec<Variable> {
        a.iter().filter(|v| contains(b, v.name())).cloned().collect()
    }

    /// Members of `a` not named in `b`.
    pub fn difference(a: &[Variable], b: &[Variable]) -> Vec<Variable> {
        a.iter().filter(|v| !contains(b, v.name())).cloned().collect()
    }

    pub fn is_subset(a: &[Variable], b: &[Variable]) -> bool {
        a.iter().all(|v| contains(b, v.name()))
    }

    pub fn same_set(a: &[Variable], b: &[Variable]) -> bool {
        a.len() == b.len() && is_subset(a, b)
    }

    pub fn check_subset(a: &[Variable], b: &[Variable]) -> Result<()> {
        if is_subset(a, b) {
            Ok(())
        } else {
            Err(Error::NotInDomain { vars: names(a), domain: names(b) })
        }
    }
}

/// Observed levels for a set of variables.
///
/// Construction validates every level against the variable's levelset, so an
/// `Evidence` value can never name a level outside the model.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evidence {
    observed: BTreeMap<String, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record `var = label`. Observing the same variable twice is an error.
    pub fn observe(&mut self, var: &Variable, label: &str) -> Result<()> {
        let idx = var.level_index(label).ok_or_else(|| Error::UnknownLevel {
            var: var.name().to_string(),
            level: label.to_string(),
        })?;
        self.observe_index(var, idx)
    }

    pub fn observe_index(&mut self, var: &Variable, level: usize) -> Result<()> {
        if level >= var.cardinality() {
            return Err(Error::UnknownLevel {
                var: var.name().to_string(),
                level: level.to_string(),
            });
        }
        if self.observed.insert(var.name().to_string(), level).is_some() {
            return Err(Error::Config(format!("variable `{}` observed twice", var.name())));
        }
        Ok(())
    }

    pub fn with(mut self, var: &Variable, label: &str) -> Result<Self> {
        self.observe(var, label)?;
        Ok(self)
    }

    /// Parse `var=level,var=level` against a list of known variables.
    pub fn parse(text: &str, variables: &[Variable]) -> Result<Self> {
        let mut ev = Evidence::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, level) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("evidence entry `{part}` is not var=level")))?;
            let var = variables
                .iter()
                .find(|v| v.name() == name.trim())
                .ok_or_else(|| Error::UnknownVariable(name.trim().to_string()))?;
            ev.observe(var, level.trim())?;
        }
        Ok(ev)
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.observed.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.observed.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.observed.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Copy of this evidence without `name`.
    pub fn without(&self, name: &str) -> Self {
        let mut observed = self.observed.clone();
        observed.remove(name);
        Evidence { observed }
    }
}
