//! Entanglement-based decoherence measure for open quantum systems.
//!
//! The measure is the normalized purity deficit of the reduced state,
//! `n/(n−1) · (1 − tr ρ²)` for an `n`-level system and `1 − tr ρ²` for
//! continuous variables. Each model module pairs a closed form with an
//! independent numerical route (brute-force evolution, quadrature, ODE or
//! PDE integration).

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod quadrature;
pub mod density;
pub mod kernel;

pub use error::{Error, Result};
pub use density::{
    concurrence_pure, decoherence_finite, partial_trace, purity, validate_density, BipartitePureState, DensityMatrix,
    PureState, Side, Tolerances, ValidationReport, Violation,
};
pub use kernel::{decoherence_continuous, ContinuousKernel, GridSamples, Separable};
pub mod spin_bath;
pub mod spin_boson;
pub mod continuous;
pub mod series;
pub mod stern_gerlach;
pub mod mach_zehnder;
pub mod scenario;
