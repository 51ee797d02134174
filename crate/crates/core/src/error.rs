use nalgebra::DVector;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration of {count} supports exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: u128 },

    #[error("expansion over 2^{n} index subsets exceeds the cap of 2^{cap}")]
    ExpansionTooLarge { n: usize, cap: usize },

    #[error("coordinate descent did not converge after {iterations} sweeps (KKT residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64, last_iterate: DVector<f64> },

    #[error("at least one sample is required")]
    EmptySamples,

    #[error(
        "sign policy FromGamma needs one subgradient vector per sample ({samples} samples, {gammas} subgradients)"
    )]
    MissingGamma { samples: usize, gammas: usize },

    #[error("degenerate hyperplane: normal vector has no usable pivot entry (largest |h| = {0:e})")]
    DegenerateHyperplane(f64),

    #[error("invalid marginal law: {0}")]
    InvalidLaw(String),

    #[error("{excluded} of {replicates} replicates failed to converge, above the budget of {budget}")]
    ExclusionBudget { excluded: usize, replicates: usize, budget: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
