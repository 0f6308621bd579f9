//! General control functions for causal effect estimation from
//! instrumental-variable data.
//!
//! The crate has two halves. The estimation half builds a discrete control
//! function by variational decoupling — an autoencoder whose code must
//! reconstruct the treatment together with the instrument while staying
//! independent of the instrument — and then regresses the outcome on the
//! treatment and the code to produce dose-response curves. The verification
//! half is a finite-support structural-causal-model oracle that checks, by
//! exact enumeration, the premises under which such a control function
//! identifies causal effects, together with classical two-stage least
//! squares and residual control-function baselines, seeded simulation
//! generators, and scoring diagnostics.

pub mod baselines;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod nn;
pub mod oracle;
pub mod outcome;
pub mod rng;
pub mod simgen;
pub mod vde;

pub use error::{Error, Result};
