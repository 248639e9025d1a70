//! Exact inference for discrete Bayesian networks with sparse potentials,
//! unity smoothing of inconsistent evidence and unity propagation over
//! junction trees.
//!
//! The numeric core is generic over [`Scalar`]; the aliases below fix the
//! common choices.

pub mod error;
pub mod estimation;
pub mod graph;
pub mod harness;
pub mod io;
pub mod network;
pub mod potential;
pub mod propagation;
pub mod scalar;
pub mod unity;
pub mod variable;

pub use error::{Error, Result};
pub use estimation::{Cpt, SmoothingKind, SmoothingPolicy};
pub use graph::{AssignRule, CompileOptions, Dag, JunctionTree};
pub use network::BayesianNetwork;
pub use potential::Potential;
pub use propagation::{PropagationOptions, PropagationState};
pub use scalar::Scalar;
pub use unity::{OpCounter, UnityPotential};
pub use variable::{Evidence, Variable};

/// Exact rational arithmetic.
pub type Rational = num_rational::Rational64;

pub type Potential64 = Potential<f64>;
pub type Potential32 = Potential<f32>;
pub type RationalPotential = Potential<Rational>;
pub type Network64 = BayesianNetwork<f64>;
pub type RationalNetwork = BayesianNetwork<Rational>;
pub type UnityPotential64 = UnityPotential<f64>;
pub type RationalUnityPotential = UnityPotential<Rational>;
