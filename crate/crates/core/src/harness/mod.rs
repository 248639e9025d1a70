//! Experiment harnesses: synthetic models, cross-validated prediction error
//! and the propagation benchmarks.

pub mod bench;
pub mod crossval;
pub mod synth;
