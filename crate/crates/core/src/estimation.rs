//! Parameter estimation (maximum likelihood, Laplace) and just-in-time unity
//! smoothing of CPTs that evidence reduces to a null potential.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::data::DiscreteDataset;
use crate::potential::Potential;
use crate::scalar::Scalar;
use crate::unity::UnityPotential;
use crate::variable::{Evidence, Variable};

/// Contingency counts `n(i, j)` for a child level `i` and parent cell `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CptCounts {
    child: Variable,
    parents: Vec<Variable>,
    /// Keyed by `[child level, parent levels...]`; only observed pairs.
    counts: BTreeMap<Vec<usize>, u64>,
}

impl CptCounts {
    /// Counts built directly from `(family cell, count)` pairs.
    pub fn from_counts(
        child: Variable,
        parents: Vec<Variable>,
        counts: impl IntoIterator<Item = (Vec<usize>, u64)>,
    ) -> Result<Self> {
        let fam: Vec<Variable> = std::iter::once(child.clone()).chain(parents.iter().cloned()).collect();
        let mut map = BTreeMap::new();
        for (cell, n) in counts {
            if cell.len() != fam.len() || cell.iter().zip(&fam).any(|(&l, v)| l >= v.cardinality()) {
                return Err(Error::Data(format!("count cell {cell:?} outside the family levelset")));
            }
            if n > 0 {
                *map.entry(cell).or_insert(0) += n;
            }
        }
        Ok(CptCounts { child, parents, counts: map })
    }

    pub fn child(&self) -> &Variable {
        &self.child
    }

    pub fn parents(&self) -> &[Variable] {
        &self.parents
    }

    pub fn get(&self, family_cell: &[usize]) -> u64 {
        self.counts.get(family_cell).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Nonzero `(family cell, count)` pairs in lexicographic order.
    pub fn nonzero(&self) -> impl Iterator<Item = (&[usize], u64)> {
        self.counts.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    fn family(&self) -> Vec<Variable> {
        std::iter::once(self.child.clone()).chain(self.parents.iter().cloned()).collect()
    }

    fn column_totals(&self) -> BTreeMap<Vec<usize>, u64> {
        let mut totals = BTreeMap::new();
        for (k, &n) in &self.counts {
            *totals.entry(k[1..].to_vec()).or_insert(0) += n;
        }
        totals
    }
}

/// Exact contingency counts of `child` given `parents` in `data`.
pub fn count(data: &DiscreteDataset, child: &str, parents: &[&str]) -> Result<CptCounts> {
    let ci = data.column_index(child)?;
    let pi = parents.iter().map(|p| data.column_index(p)).collect::<Result<Vec<_>>>()?;
    let mut counts = BTreeMap::new();
    for row in data.rows() {
        let key: Vec<usize> = std::iter::once(row[ci]).chain(pi.iter().map(|&p| row[p])).collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    Ok(CptCounts {
        child: data.columns()[ci].clone(),
        parents: pi.iter().map(|&p| data.columns()[p].clone()).collect(),
        counts,
    })
}

/// A conditional probability table `p(child | parents)`, stored as a
/// potential over `[child, parents...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt<T = f64> {
    table: Potential<T>,
}

impl<T: Scalar> Cpt<T> {
    /// Wraps a table whose first domain variable is the child. Every parent
    /// column must sum to one (within `tol`) or be all zero.
    pub fn new(table: Potential<T>, tol: f64) -> Result<Self> {
        if table.domain().is_empty() {
            return Err(Error::Data("a CPT needs a child variable".into()));
        }
        let cpt = Cpt { table };
        cpt.check_columns(tol)?;
        Ok(cpt)
    }

    pub fn child(&self) -> &Variable {
        &self.table.domain()[0]
    }

    pub fn parents(&self) -> &[Variable] {
        &self.table.domain()[1..]
    }

    /// `{child} ∪ parents`.
    pub fn family(&self) -> &[Variable] {
        self.table.domain()
    }

    pub fn table(&self) -> &Potential<T> {
        &self.table
    }

    /// `Σ_i θ(i, j)` for every parent cell `j`.
    pub fn column_sums(&self) -> Potential<T> {
        self.table.project(self.parents()).expect("parents are in the family")
    }

    pub fn check_columns(&self, tol: f64) -> Result<()> {
        let sums = self.column_sums();
        for v in sums.dense_values() {
            let v = v.as_f64();
            if v != 0.0 && (v - 1.0).abs() > tol {
                return Err(Error::Data(format!(
                    "CPT of `{}` has a column summing to {v}",
                    self.child().name()
                )));
            }
        }
        Ok(())
    }

    /// `θ(·|j)` for one parent cell, in child level order.
    pub fn column(&self, parent_cell: &[usize]) -> Vec<T> {
        (0..self.child().cardinality())
            .map(|i| {
                let mut cell = vec![i];
                cell.extend_from_slice(parent_cell);
                self.table.get(&cell)
            })
            .collect()
    }

    pub fn to_dense(&self) -> Self {
        Cpt { table: self.table.to_dense() }
    }

    pub fn to_sparse(&self) -> Self {
        Cpt { table: self.table.to_sparse() }
    }

    pub fn map_scalar<U: Scalar>(&self, f: impl Fn(T) -> U) -> Cpt<U> {
        Cpt { table: self.table.map_scalar(f) }
    }
}

/// Maximum likelihood CPT, stored sparse. Unseen parent columns are all zero.
pub fn mle<T: Scalar>(counts: &CptCounts) -> Cpt<T> {
    let totals = counts.column_totals();
    let entries = counts.counts.iter().map(|(k, &n)| {
        let total = totals[&k[1..]];
        (k.clone(), T::from_u64(n).expect("count fits") / T::from_u64(total).expect("count fits"))
    });
    Cpt { table: Potential::sparse(counts.family(), entries).expect("counts lie in the family levelset") }
}

/// Laplace-smoothed CPT `(n + α) / (N_j + α|I_X|)`, stored dense.
pub fn laplace<T: Scalar>(counts: &CptCounts, alpha: T) -> Result<Cpt<T>> {
    if !(alpha > T::zero()) {
        return Err(Error::Config(format!("pseudo-count must be positive, got {alpha}")));
    }
    let totals = counts.column_totals();
    let k = T::from_count(counts.child.cardinality());
    let table = Potential::from_fn(counts.family(), |cell| {
        let n = T::from_u64(counts.get(cell)).expect("count fits");
        let total = T::from_u64(totals.get(&cell[1..]).copied().unwrap_or(0)).expect("count fits");
        (n + alpha) / (total + alpha * k)
    })?;
    Ok(Cpt { table })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingKind {
    /// Sparse MLE tables, unity smoothing when evidence is inconsistent.
    MleUnity,
    /// Dense tables with a pseudo-count added to every cell.
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingPolicy {
    pub kind: SmoothingKind,
    pub alpha: f64,
    pub epsilon: f64,
}

impl Default for SmoothingPolicy {
    fn default() -> Self {
        SmoothingPolicy { kind: SmoothingKind::MleUnity, alpha: 1.0, epsilon: 1.0 }
    }
}

impl SmoothingPolicy {
    pub fn mle_unity(epsilon: f64) -> Self {
        SmoothingPolicy { kind: SmoothingKind::MleUnity, epsilon, ..Default::default() }
    }

    pub fn laplace(alpha: f64) -> Self {
        SmoothingPolicy { kind: SmoothingKind::Laplace, alpha, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Estimates a CPT from counts according to the policy.
    pub fn estimate<T: Scalar>(&self, counts: &CptCounts) -> Result<Cpt<T>> {
        self.validate()?;
        match self.kind {
            SmoothingKind::MleUnity => Ok(mle(counts)),
            SmoothingKind::Laplace => laplace(counts, scalar_from_f64(self.alpha)?),
        }
    }
}

pub(crate) fn scalar_from_f64<T: Scalar>(x: f64) -> Result<T> {
    T::from_f64(x).ok_or_else(|| Error::Config(format!("{x} is not representable")))
}

/// Which rule produced a unity-smoothed CPT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmoothingCase {
    /// Every parent cell consistent with the evidence is unseen: the child
    /// becomes uniform.
    UnseenParentCell,
    /// The observed child level has probability zero: the reduced CPT
    /// becomes `(1, R, ε)` over the unobserved parents `R`.
    ZeroChildCell,
}

/// Unity smoothing of a CPT whose evidence reduction is null.
///
/// Returns the smoothed, evidence-reduced CPT as a triple whose partial is
/// always empty. Fails if the evidence is consistent with the CPT.
pub fn unity_smooth<T: Scalar>(cpt: &Cpt<T>, ev: &Evidence, epsilon: T) -> Result<(UnityPotential<T>, SmoothingCase)> {
    if !(epsilon > T::zero()) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if !cpt.table.evidence_reduce(ev).is_null() {
        return Err(Error::Config(format!(
            "evidence is consistent with the CPT of `{}`; nothing to smooth",
            cpt.child().name()
        )));
    }
    let child = cpt.child();
    let unobserved: Vec<Variable> = cpt.parents().iter().filter(|p| !ev.contains(p.name())).cloned().collect();
    let seen = cpt.column_sums().evidence_reduce(ev);
    if seen.is_null() {
        let weight = T::one() / T::from_count(child.cardinality());
        let mut unity = Vec::new();
        if !ev.contains(child.name()) {
            unity.push(child.clone());
        }
        unity.extend(unobserved);
        return Ok((UnityPotential::pure_unity(unity, weight)?, SmoothingCase::UnseenParentCell));
    }
    debug_assert!(ev.contains(child.name()), "null reduction with seen columns requires an observed child");
    Ok((UnityPotential::pure_unity(unobserved, epsilon)?, SmoothingCase::ZeroChildCell))
}

/// Result of entering evidence into one CPT.
#[derive(Debug, Clone)]
pub struct ReducedCpt<T> {
    pub potential: UnityPotential<T>,
    pub smoothed: Option<SmoothingCase>,
}

/// Evidence-reduces a CPT, smoothing it with `epsilon` when the reduction is
/// null and smoothing is enabled. Consistent CPTs are returned unchanged
/// apart from the reduction.
pub fn enter_evidence<T: Scalar>(cpt: &Cpt<T>, ev: &Evidence, epsilon: Option<T>) -> Result<ReducedCpt<T>> {
    let reduced = cpt.table.evidence_reduce(ev);
    match epsilon {
        Some(eps) if reduced.is_null() => {
            let (potential, case) = unity_smooth(cpt, ev, eps)?;
            Ok(ReducedCpt { potential, smoothed: Some(case) })
        }
        _ => Ok(ReducedCpt { potential: UnityPotential::from_potential(reduced), smoothed: None }),
    }
}

/// The smoothed column `p_ε(·|j*)` for a fully observed parent cell:
/// zero cells become `ε`, positive cells are scaled by `1 − ε|A₀|`, and an
/// unseen column becomes uniform.
pub fn smoothed_column<T: Scalar>(cpt: &Cpt<T>, parent_cell: &[usize], epsilon: T) -> Result<Vec<T>> {
    if parent_cell.len() != cpt.parents().len() {
        return Err(Error::Query("parent cell must assign every parent".into()));
    }
    if !(epsilon > T::zero()) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let col = cpt.column(parent_cell);
    let k = col.len();
    if col.iter().all(|v| v.is_zero()) {
        return Ok(vec![T::one() / T::from_count(k); k]);
    }
    let zeros = col.iter().filter(|v| v.is_zero()).count();
    if zeros == 0 {
        return Ok(col);
    }
    let scale = T::one() - epsilon * T::from_count(zeros);
    Ok(col.into_iter().map(|v| if v.is_zero() { epsilon } else { v * scale }).collect())
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Scalar>(values: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
