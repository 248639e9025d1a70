//! The triple `(φ_A, B, γ)` standing for `φ_A ⊗ γ·1_B`.
//!
//! Unity variables and the scalar weight are tracked symbolically, so the
//! all-ones factor over `B` is never stored and products or projections that
//! only touch it reduce to bookkeeping. Every operation reports to an
//! [`OpCounter`] whether a cell-level operation on a partial potential was
//! performed or avoided.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{checked_div, Potential};
use crate::scalar::Scalar;
use crate::variable::{domain, Evidence, Variable};

/// Cell-level work performed on partial potentials, and work skipped.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub partial_multiplications: u64,
    pub partial_divisions: u64,
    pub projections: u64,
    pub avoided_multiplications: u64,
    pub avoided_divisions: u64,
}

impl OpCounter {
    /// Multiplications, divisions and projections actually carried out.
    pub fn performed(&self) -> u64 {
        self.partial_multiplications + self.partial_divisions + self.projections
    }

    pub fn add(&mut self, other: &OpCounter) {
        self.partial_multiplications += other.partial_multiplications;
        self.partial_divisions += other.partial_divisions;
        self.projections += other.projections;
        self.avoided_multiplications += other.avoided_multiplications;
        self.avoided_divisions += other.avoided_divisions;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnityPotential<T = f64> {
    partial: Potential<T>,
    unity: Vec<Variable>,
    weight: T,
}

impl<T: Scalar> UnityPotential<T> {
    /// Builds `(partial, unity, weight)`. An empty-domain partial is folded
    /// into the weight so that pure-unity triples always carry the scalar 1.
    pub fn new(partial: Potential<T>, unity: Vec<Variable>, weight: T) -> Result<Self> {
        if let Some(v) = unity.iter().find(|v| domain::contains(partial.domain(), v.name())) {
            return Err(Error::InvalidVariable(format!(
                "`{}` is both a partial and a unity variable",
                v.name()
            )));
        }
        domain::union(partial.domain(), &unity)?;
        if !(weight >= T::zero()) {
            return Err(Error::Data(format!("weight must be non-negative, got {weight}")));
        }
        Ok(Self::folded(partial, unity, weight))
    }

    fn folded(partial: Potential<T>, unity: Vec<Variable>, weight: T) -> Self {
        if partial.domain().is_empty() {
            let s = partial.get(&[]);
            UnityPotential { partial: Potential::scalar(T::one()), unity, weight: weight * s }
        } else {
            UnityPotential { partial, unity, weight }
        }
    }

    /// `(1, B, γ)`.
    pub fn pure_unity(unity: Vec<Variable>, weight: T) -> Result<Self> {
        Self::new(Potential::scalar(T::one()), unity, weight)
    }

    /// `(φ, ∅, 1)`.
    pub fn from_potential(partial: Potential<T>) -> Self {
        Self::folded(partial, Vec::new(), T::one())
    }

    pub fn partial(&self) -> &Potential<T> {
        &self.partial
    }

    pub fn unity_vars(&self) -> &[Variable] {
        &self.unity
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    /// Full domain `A ∪ B`, partial variables first.
    pub fn domain(&self) -> Vec<Variable> {
        let mut d = self.partial.domain().to_vec();
        d.extend(self.unity.iter().cloned());
        d
    }

    pub fn partial_domain(&self) -> &[Variable] {
        self.partial.domain()
    }

    pub fn is_pure_unity(&self) -> bool {
        self.partial.domain().is_empty()
    }

    pub fn is_null(&self) -> bool {
        self.weight.is_zero() || self.partial.is_null()
    }

    pub fn with_weight(&self, weight: T) -> Self {
        UnityPotential { partial: self.partial.clone(), unity: self.unity.clone(), weight }
    }

    /// Mass of the full potential, `γ·|φ_A|·|I_B|`.
    pub fn total_mass(&self) -> T {
        self.weight * self.partial.total_mass() * T::from_count(domain::state_space(&self.unity))
    }

    /// `(φ1⊗φ2, (B1∪B2)∖(A1∪A2), γ1γ2)`. The partial product is skipped when
    /// either partial has an empty domain.
    pub fn up_multiply(&self, other: &Self, ops: &mut OpCounter) -> Result<Self> {
        domain::union(&self.domain(), &other.domain())?;
        let partial = match (self.is_pure_unity(), other.is_pure_unity()) {
            (false, false) => {
                ops.partial_multiplications += 1;
                self.partial.multiply(&other.partial)?
            }
            (true, false) => {
                ops.avoided_multiplications += 1;
                other.partial.clone()
            }
            (false, true) | (true, true) => {
                ops.avoided_multiplications += 1;
                self.partial.clone()
            }
        };
        let all_unity = domain::union(&self.unity, &other.unity)?;
        let unity = domain::difference(&all_unity, partial.domain());
        Ok(UnityPotential { partial, unity, weight: self.weight * other.weight })
    }

    /// Projection onto `onto ⊆ A ∪ B`. When the partial does not meet `onto`
    /// the result is pure unity carrying the partial's mass in its weight.
    pub fn up_project(&self, onto: &[Variable], ops: &mut OpCounter) -> Result<Self> {
        domain::check_subset(onto, &self.domain())?;
        let a = self.partial.domain();
        let a_cap_c = domain::intersection(a, onto);
        let b_minus_c = domain::difference(&self.unity, onto);
        let copies = T::from_count(domain::state_space(&b_minus_c));
        if a_cap_c.is_empty() {
            let mass = if a.is_empty() {
                T::one()
            } else {
                ops.projections += 1;
                self.partial.total_mass()
            };
            let unity = domain::intersection(&self.unity, onto);
            return Ok(UnityPotential {
                partial: Potential::scalar(T::one()),
                unity,
                weight: self.weight * mass * copies,
            });
        }
        let partial = if a_cap_c.len() == a.len() {
            self.partial.clone()
        } else {
            ops.projections += 1;
            self.partial.project(&a_cap_c)?
        };
        Ok(UnityPotential {
            partial,
            unity: domain::intersection(&self.unity, onto),
            weight: self.weight * copies,
        })
    }

    /// Sender update `p / p↓S` where `message = p.up_project(S)`. No cell
    /// division happens when the partial lies inside the separator (the
    /// quotient is unity over the support) or misses it entirely (the message
    /// is a scalar).
    pub fn up_divide_update(&self, message: &Self, ops: &mut OpCounter) -> Result<Self> {
        let sep = message.domain();
        let a1 = self.partial.domain();
        debug_assert!(
            domain::same_set(message.partial_domain(), &domain::intersection(a1, &sep)),
            "message is not a projection of the sender"
        );
        if self.is_null() {
            ops.avoided_divisions += 1;
            return Ok(self.with_weight(T::zero()));
        }
        let weight = checked_div(self.weight, message.weight)?;
        if domain::is_subset(a1, &sep) {
            ops.avoided_divisions += 1;
            return Ok(UnityPotential { partial: Potential::scalar(T::one()), unity: self.domain(), weight });
        }
        let partial = if message.is_pure_unity() {
            ops.avoided_divisions += 1;
            self.partial.clone()
        } else {
            ops.partial_divisions += 1;
            self.partial.divide(&message.partial)?
        };
        Ok(UnityPotential { partial, unity: self.unity.clone(), weight })
    }

    /// Evidence reduction of the partial; observed unity variables simply
    /// disappear.
    pub fn up_evidence_reduce(&self, ev: &Evidence) -> Self {
        let partial = self.partial.evidence_reduce(ev);
        let unity = self.unity.iter().filter(|v| !ev.contains(v.name())).cloned().collect();
        Self::folded(partial, unity, self.weight)
    }

    /// The explicit potential `φ_A ⊗ γ·1_B`.
    pub fn materialize(&self) -> Potential<T> {
        let ones = Potential::unity(self.unity.clone()).expect("valid unity domain");
        let ones = if self.partial.domain().is_empty() { ones } else { ones.in_representation_of(&self.partial) };
        self.partial.multiply(&ones).expect("disjoint domains").scale(self.weight)
    }

    /// Converts the triple to a materialized one: `(φ_A ⊗ γ·1_B, ∅, 1)`.
    pub fn into_materialized(self) -> Self {
        let m = self.materialize();
        UnityPotential { partial: m, unity: Vec::new(), weight: T::one() }
    }
}
