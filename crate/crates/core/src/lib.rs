//! Finite-sample distribution of the LASSO estimator.
//!
//! The crate is organised around the measurement model `b = A x + v` and the
//! estimator `x̂ = argmin τ‖x‖₁ + ½‖b − A x‖²`:
//!
//! * [`linmodel`] builds measurement models, samples measurements and computes
//!   restricted isometry constants by exhaustive enumeration.
//! * [`solver`] solves the LASSO problem by cyclic coordinate descent and
//!   certifies the result through its KKT subgradient.
//! * [`cfalgebra`] evaluates both sides of the characteristic-function identity
//!   linking `W x̂ + τ S(x̂)` to the Gaussian law of `Aᵀb`, the one-dimensional
//!   slice approximation and the Gaussian evaluation of the sign-weighted
//!   slice term.
//! * [`distributions`] holds closed-form marginal laws of the estimator.
//! * [`harness`] runs the Monte-Carlo protocol and produces reports.

pub mod cfalgebra;
pub mod distributions;
mod error;
pub mod harness;
pub mod linmodel;
pub mod normal;
pub mod quadrature;
pub mod solver;

pub use cfalgebra::{CfQuery, CfValue, GaussianSurrogate, SignPolicy};
pub use distributions::{LawKind, MarginalLaw};
pub use error::{Error, Result};
pub use harness::{ExperimentConfig, ExperimentReport};
pub use linmodel::{MeasurementModel, ModelKind};
pub use solver::{LassoSolution, SolverOptions};
