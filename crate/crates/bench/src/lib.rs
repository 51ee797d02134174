//! Fixtures shared by the benchmarks in `benches/`.

use lassodist::linmodel::{build_bernoulli_model, build_hadamard_model, sample_measurement};
use lassodist::solver::{solve_lasso, SolverOptions};
use lassodist::MeasurementModel;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn orthogonal_model() -> MeasurementModel {
    build_hadamard_model(4, DVector::from_row_slice(&[0.0, 0.0, 4.0, 0.0]), 1.0, 1.0).expect("valid model")
}

pub fn singular_model() -> MeasurementModel {
    let mut x = DVector::zeros(8);
    x[4] = 8.0;
    build_bernoulli_model(4, 8, x, 1.0, 2.0, 7).expect("valid model")
}

/// `l` measurement draws from `model`.
pub fn measurements(model: &MeasurementModel, l: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..l).map(|_| sample_measurement(model, &mut rng)).collect()
}

/// Solved estimates and subgradients for `l` draws.
pub fn solved(model: &MeasurementModel, l: usize, seed: u64) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let opts = SolverOptions::default();
    measurements(model, l, seed)
        .iter()
        .map(|b| {
            let s = solve_lasso(model, b, &opts).expect("solver converges");
            (s.x_hat, s.gamma)
        })
        .unzip()
}
