//! Linear measurement models `b = A x + v` with `v ~ N(0, σ² I)`.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on column norms and Gram symmetry.
pub const UNIT_NORM_TOL: f64 = 1e-12;
/// Singular values below this fraction of the largest one count as zero.
pub const RANK_REL_TOL: f64 = 1e-10;
/// Default cap on the number of supports `rip_constant` will enumerate.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Orthogonal,
    FullRank,
    Singular,
}

/// A measurement model with unit-norm columns and its Gram matrix `W = AᵀA`.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    a: DMatrix<f64>,
    x: DVector<f64>,
    sigma: f64,
    tau: f64,
    gram: DMatrix<f64>,
}

impl MeasurementModel {
    /// Validates `a` (unit-norm columns) and derives the Gram matrix.
    pub fn new(a: DMatrix<f64>, x: DVector<f64>, sigma: f64, tau: f64) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::InvalidDimension("model matrix must be non-empty".into()));
        }
        if x.len() != a.ncols() {
            return Err(Error::InvalidDimension(format!(
                "parameter has length {} but the model matrix has {} columns",
                x.len(),
                a.ncols()
            )));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be finite and >= 0, got {tau}")));
        }
        for (j, col) in a.column_iter().enumerate() {
            let norm = col.norm();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidParameter(format!("column {j} has norm {norm}, expected 1")));
            }
        }
        let gram = a.transpose() * &a;
        // exact symmetry; the product is symmetric up to rounding
        let gram = (&gram + gram.transpose()) * 0.5;
        Ok(Self { a, x, sigma, tau, gram })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn x(&self) -> &DVector<f64> {
        &self.x
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// Number of measurements `M`.
    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Number of unknowns `N`.
    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Sparsity `K` of the true parameter.
    pub fn sparsity(&self) -> usize {
        self.x.iter().filter(|v| **v != 0.0).count()
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.x.clone(), self.sigma, tau)
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.a.clone(), self.x.clone(), sigma, self.tau)
    }

    pub fn with_x(&self, x: DVector<f64>) -> Result<Self> {
        Self::new(self.a.clone(), x, self.sigma, self.tau)
    }

    /// Noise-free measurement `A x`.
    pub fn mean_measurement(&self) -> DVector<f64> {
        &self.a * &self.x
    }

    pub fn rank(&self) -> usize {
        numerical_rank(&self.gram)
    }

    pub fn kind(&self) -> ModelKind {
        let n = self.n();
        let off = (&self.gram - DMatrix::identity(n, n)).amax();
        if off < 1e-10 {
            ModelKind::Orthogonal
        } else if self.rank() == n {
            ModelKind::FullRank
        } else {
            ModelKind::Singular
        }
    }
}

/// Rank by singular values relative to the largest one.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_REL_TOL * largest).count()
}

/// Sylvester Hadamard matrix of order `m`, unscaled (entries ±1).
pub fn sylvester_hadamard(m: usize) -> Result<DMatrix<f64>> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::InvalidDimension(format!("Hadamard order must be a power of two, got {m}")));
    }
    let mut h = DMatrix::from_element(1, 1, 1.0);
    while h.nrows() < m {
        let k = h.nrows();
        let mut next = DMatrix::zeros(2 * k, 2 * k);
        next.view_mut((0, 0), (k, k)).copy_from(&h);
        next.view_mut((0, k), (k, k)).copy_from(&h);
        next.view_mut((k, 0), (k, k)).copy_from(&h);
        next.view_mut((k, k), (k, k)).copy_from(&(-&h));
        h = next;
    }
    Ok(h)
}

/// Orthogonal model: Sylvester Hadamard matrix scaled by `1/√M`.
pub fn build_hadamard_model(m: usize, x: DVector<f64>, sigma: f64, tau: f64) -> Result<MeasurementModel> {
    let h = sylvester_hadamard(m)?;
    if x.len() != m {
        return Err(Error::InvalidDimension(format!("parameter length {} differs from M = {m}", x.len())));
    }
    let a = h / (m as f64).sqrt();
    MeasurementModel::new(a, x, sigma, tau)
}

/// Random ±1 (Rademacher) matrix with unit-norm columns.
pub fn bernoulli_matrix(m: usize, n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimension(format!("bernoulli matrix needs M, N >= 1 (got {m}x{n})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // column-major fill so column j only depends on the first (j+1)·M draws
    let mut a = DMatrix::from_fn(m, n, |_, _| 0.0);
    for j in 0..n {
        for i in 0..m {
            a[(i, j)] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
    }
    for mut col in a.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    Ok(a)
}

pub fn build_bernoulli_model(
    m: usize,
    n: usize,
    x: DVector<f64>,
    sigma: f64,
    tau: f64,
    seed: u64,
) -> Result<MeasurementModel> {
    if x.len() != n {
        return Err(Error::InvalidDimension(format!("parameter length {} differs from N = {n}", x.len())));
    }
    MeasurementModel::new(bernoulli_matrix(m, n, seed)?, x, sigma, tau)
}

/// Draws `b = A x + v` with `v ~ N(0, σ² I)` from `rng`.
pub fn sample_measurement<R: Rng + ?Sized>(model: &MeasurementModel, rng: &mut R) -> DVector<f64> {
    let mut b = model.mean_measurement();
    for bi in b.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *bi += model.sigma * z;
    }
    b
}

/// Restricted isometry constant `δ_K`, by enumerating every support of size `k`.
pub fn rip_constant(a: &DMatrix<f64>, k: usize) -> Result<f64> {
    rip_constant_capped(a, k, DEFAULT_ENUMERATION_CAP)
}

pub fn rip_constant_capped(a: &DMatrix<f64>, k: usize, cap: u128) -> Result<f64> {
    let n = a.ncols();
    if k == 0 || k > n {
        return Err(Error::InvalidDimension(format!("support size must be in 1..={n}, got {k}")));
    }
    let count = binomial(n as u128, k as u128);
    if count > cap {
        return Err(Error::TooLarge { count, cap });
    }
    let gram = a.transpose() * a;
    let mut delta = 0.0_f64;
    for support in (0..n).combinations(k) {
        let (lo, hi) = extreme_eigenvalues(&gram, &support);
        delta = delta.max(hi - 1.0).max(1.0 - lo);
    }
    Ok(delta)
}

/// Smallest and largest eigenvalue of the principal submatrix on `idx`.
fn extreme_eigenvalues(gram: &DMatrix<f64>, idx: &[usize]) -> (f64, f64) {
    match idx {
        [i] => {
            let v = gram[(*i, *i)];
            (v, v)
        }
        [i, j] => {
            let (a, d) = (gram[(*i, *i)], gram[(*j, *j)]);
            let b = 0.5 * (gram[(*i, *j)] + gram[(*j, *i)]);
            let mid = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            (mid - rad, mid + rad)
        }
        _ => {
            let sub = gram.select_rows(idx).select_columns(idx);
            let eig = SymmetricEigen::new(sub).eigenvalues;
            (eig.min(), eig.max())
        }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize, idx: usize, val: f64) -> DVector<f64> {
        let mut x = DVector::zeros(n);
        x[idx] = val;
        x
    }

    #[test]
    fn hadamard_orthogonal_experiment_model() {
        let model = build_hadamard_model(4, unit(4, 2, 4.0), 1.0, 1.0).unwrap();
        assert_eq!(model.sparsity(), 1);
        assert!((model.gram() - DMatrix::identity(4, 4)).amax() < 1e-12);
        assert_eq!(model.kind(), ModelKind::Orthogonal);
        assert!((model.a()[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hadamard_order_one() {
        let model = build_hadamard_model(1, DVector::zeros(1), 1.0, 1.0).unwrap();
        assert_eq!(model.a()[(0, 0)], 1.0);
        assert_eq!(model.gram()[(0, 0)], 1.0);
    }

    #[test]
    fn hadamard_rejects_non_power_of_two() {
        assert!(matches!(build_hadamard_model(3, DVector::zeros(3), 1.0, 1.0), Err(Error::InvalidDimension(_))));
        assert!(build_hadamard_model(0, DVector::zeros(0), 1.0, 1.0).is_err());
    }

    #[test]
    fn bernoulli_is_deterministic() {
        let a1 = bernoulli_matrix(4, 8, 7).unwrap();
        let a2 = bernoulli_matrix(4, 8, 7).unwrap();
        assert_eq!(a1, a2);
        assert!(a1.iter().all(|v| v.abs() == 0.5));
        assert_ne!(a1, bernoulli_matrix(4, 8, 8).unwrap());
    }

    #[test]
    fn bernoulli_wide_model_is_singular() {
        let model = build_bernoulli_model(4, 8, unit(8, 4, 8.0), 1.0, 2.0, 7).unwrap();
        assert!(model.rank() <= 4);
        assert_eq!(model.kind(), ModelKind::Singular);
    }

    #[test]
    fn rank_matches_pivoted_elimination() {
        // independent route: Gaussian elimination with full pivoting
        fn pivoted_rank(m: &DMatrix<f64>) -> usize {
            let mut a = m.clone();
            let (r, c) = a.shape();
            let scale = a.amax();
            let mut rank = 0;
            for step in 0..r.min(c) {
                let mut best = (step, step, 0.0);
                for i in step..r {
                    for j in step..c {
                        if a[(i, j)].abs() > best.2 {
                            best = (i, j, a[(i, j)].abs());
                        }
                    }
                }
                if best.2 <= 1e-10 * scale {
                    break;
                }
                a.swap_rows(step, best.0);
                a.swap_columns(step, best.1);
                for i in step + 1..r {
                    let f = a[(i, step)] / a[(step, step)];
                    for j in step..c {
                        let v = a[(step, j)];
                        a[(i, j)] -= f * v;
                    }
                }
                rank += 1;
            }
            rank
        }
        for seed in 0..20 {
            let a = bernoulli_matrix(4, 4, seed).unwrap();
            let w = a.transpose() * &a;
            assert_eq!(numerical_rank(&w), pivoted_rank(&w), "seed {seed}");
        }
    }

    #[test]
    fn zero_noise_measurement_is_exact() {
        let model = build_hadamard_model(4, unit(4, 2, 4.0), 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_measurement(&model, &mut rng), model.mean_measurement());
    }

    #[test]
    fn measurement_noise_moments() {
        let sigma = 1.5;
        let model = build_bernoulli_model(3, 5, unit(5, 1, 2.0), sigma, 1.0, 3).unwrap();
        let mean = model.mean_measurement();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = 100_000;
        let mut sum = DVector::<f64>::zeros(3);
        let mut outer = DMatrix::<f64>::zeros(3, 3);
        for _ in 0..l {
            let v = sample_measurement(&model, &mut rng) - &mean;
            sum += &v;
            outer += &v * v.transpose();
        }
        let lf = l as f64;
        for i in 0..3 {
            assert!((sum[i] / lf).abs() < 4.0 * sigma / lf.sqrt());
            for j in 0..3 {
                let target = if i == j { sigma * sigma } else { 0.0 };
                assert!((outer[(i, j)] / lf - target).abs() < 0.05 * sigma * sigma);
            }
        }
    }

    #[test]
    fn measurement_is_reproducible() {
        let model = build_bernoulli_model(4, 4, unit(4, 2, 4.0), 1.0, 1.0, 5).unwrap();
        let b1 = sample_measurement(&model, &mut ChaCha8Rng::seed_from_u64(9));
        let b2 = sample_measurement(&model, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(b1, b2);
    }

    #[test]
    fn rip_hadamard_is_zero() {
        let a = sylvester_hadamard(8).unwrap() / 8f64.sqrt();
        for k in 1..=4 {
            assert!(rip_constant(&a, k).unwrap() < 1e-10);
        }
    }

    #[test]
    fn rip_k2_equals_coherence() {
        let a = bernoulli_matrix(4, 8, 7).unwrap();
        let mut coherence = 0.0_f64;
        for i in 0..8 {
            for j in i + 1..8 {
                coherence = coherence.max(a.column(i).dot(&a.column(j)).abs());
            }
        }
        assert_eq!(rip_constant(&a, 2).unwrap(), coherence);
        assert!(rip_constant(&a, 1).unwrap() < 1e-10);
    }

    #[test]
    fn rip_cap_is_enforced() {
        let a = bernoulli_matrix(4, 30, 1).unwrap();
        assert!(matches!(rip_constant_capped(&a, 15, 1_000), Err(Error::TooLarge { .. })));
        assert!(rip_constant(&a, 0).is_err());
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(8, 2), 28);
        assert_eq!(binomial(30, 15), 155_117_520);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn constructed_models_are_well_formed(m in 1usize..6, n in 1usize..8, seed in any::<u64>()) {
            let model = build_bernoulli_model(m, n, DVector::zeros(n), 1.0, 1.0, seed).unwrap();
            for col in model.a().column_iter() {
                prop_assert!((col.norm() - 1.0).abs() <= 1e-12);
            }
            let w = model.gram();
            prop_assert!((w - w.transpose()).amax() <= 1e-12);
            let eig = SymmetricEigen::new(w.clone()).eigenvalues;
            prop_assert!(eig.min() >= -1e-10);
        }

        #[test]
        fn rip_is_monotone_in_k(n in 2usize..8, seed in any::<u64>()) {
            let a = bernoulli_matrix(4, n, seed).unwrap();
            let mut prev = 0.0;
            for k in 1..=n.min(4) {
                let d = rip_constant(&a, k).unwrap();
                prop_assert!(d >= prev - 1e-12);
                prev = d;
            }
        }
    }
}
