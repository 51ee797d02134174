//! Characteristic-function algebra of the LASSO estimator.
//!
//! The KKT equation `W x̂ + τγ = Aᵀb` ties the law of `W x̂ + τ S(x̂)` to the
//! Gaussian law of `Aᵀb`. Expanding `exp(iτu_j S(x̂_j)) = cos(τu_j) + i S(x̂_j)
//! sin(τu_j)` coordinate by coordinate gives a sum over all index subsets `I`
//! of `∏_{k∈I} sin(τu_k) ∏_{j∉I} cos(τu_j)` times a sign-weighted transform of
//! `x̂` at frequency `c = W u`. Those sign-weighted transforms (the Hilbert
//! terms) are evaluated here in the sample domain as
//! `E[∏_{k∈I} i S(x̂_k) · exp(i cᵀx̂)]`, never through principal-value
//! convolutions.

mod slice;

pub use slice::{slice_term_gaussian, GaussianSurrogate, DEFAULT_HERMITE_NODES};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::linmodel::MeasurementModel;
use crate::{Error, Result};

/// Value of a characteristic function (or of a related transform).
pub type CfValue = Complex64;

/// Largest `N` for which the subset expansion is evaluated.
pub const MAX_EXPANSION_DIM: usize = 20;

/// How `S(0)` is resolved for coordinates of `x̂` that are exactly zero.
#[derive(Debug, Clone, Copy)]
pub enum SignPolicy<'a> {
    /// `S(0) = 0`: coordinates at zero contribute `cos(τu_j)` and nothing to
    /// the sign-weighted terms. This is the density-based expansion, which
    /// ignores the atom of `x̂` at zero.
    Zero,
    /// Resolve the sign through the KKT subgradient of each sample.
    ///
    /// Coordinate `j` of a sample then carries the phase `exp(iτu_jγ_j)`,
    /// written as `cos(τu_j) + ψ_j sin(τu_j)`. On the support
    /// `γ_j = sign(x̂_j)` and `ψ_j = i·sign(x̂_j)`; off the support `ψ_j` is the
    /// unique weight reproducing the phase. With this policy the expansion
    /// equals the empirical characteristic function of `W x̂ + τγ = Aᵀb`.
    FromGamma(&'a [DVector<f64>]),
}

/// Frequency `u`, derived frequency `c = W u`, and the subset `I` of
/// sign-weighted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CfQuery {
    pub u: DVector<f64>,
    pub c: DVector<f64>,
    pub tau: f64,
    pub subset: Vec<usize>,
}

impl CfQuery {
    pub fn new(model: &MeasurementModel, u: DVector<f64>) -> Result<Self> {
        if u.len() != model.n() {
            return Err(Error::InvalidDimension(format!("frequency has length {}, expected {}", u.len(), model.n())));
        }
        let c = model.gram() * &u;
        Ok(Self { u, c, tau: model.tau(), subset: Vec::new() })
    }

    pub fn with_subset(mut self, subset: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut subset: Vec<usize> = subset.into_iter().collect();
        subset.sort_unstable();
        subset.dedup();
        if let Some(&bad) = subset.iter().find(|&&k| k >= self.u.len()) {
            return Err(Error::InvalidDimension(format!("subset index {bad} out of range for N = {}", self.u.len())));
        }
        self.subset = subset;
        Ok(self)
    }
}

/// `exp(i uᵀW x − (σ²/2) uᵀW u)`, the characteristic function of `Aᵀb`.
pub fn gaussian_rhs_cf(u: &DVector<f64>, model: &MeasurementModel) -> CfValue {
    let wu = model.gram() * u;
    let mean = wu.dot(model.x());
    let quad = wu.dot(u);
    let s2 = model.sigma() * model.sigma();
    Complex64::from_polar((-0.5 * s2 * quad).exp(), mean)
}

/// Sample mean of `exp(i uᵀy)`.
pub fn empirical_cf(samples: &[DVector<f64>], u: &DVector<f64>) -> Result<CfValue> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let sum: Complex64 = samples.iter().map(|y| Complex64::cis(u.dot(y))).sum();
    Ok(sum / samples.len() as f64)
}

/// Sample mean of `exp(i u y)` for scalar samples.
pub fn empirical_cf_scalar(samples: &[f64], u: f64) -> Result<CfValue> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let sum: Complex64 = samples.iter().map(|y| Complex64::cis(u * y)).sum();
    Ok(sum / samples.len() as f64)
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Per-coordinate weights `ψ_j` of one sample, such that the coordinate's
/// factor in the product form is `cos(τu_j) + ψ_j sin(τu_j)`.
fn sign_weights(x: &DVector<f64>, gamma: Option<&DVector<f64>>, u: &DVector<f64>, tau: f64) -> Vec<Complex64> {
    match gamma {
        None => x.iter().map(|&v| Complex64::new(0.0, sign(v))).collect(),
        Some(g) => g
            .iter()
            .zip(u.iter())
            .map(|(&gj, &uj)| {
                let theta = tau * uj;
                let s = theta.sin();
                if s == 0.0 {
                    Complex64::new(0.0, gj)
                } else {
                    (Complex64::cis(theta * gj) - theta.cos()) / s
                }
            })
            .collect(),
    }
}

fn gammas_for<'a>(policy: &SignPolicy<'a>, samples: usize) -> Result<Option<&'a [DVector<f64>]>> {
    match policy {
        SignPolicy::Zero => Ok(None),
        SignPolicy::FromGamma(g) if g.len() == samples => Ok(Some(g)),
        SignPolicy::FromGamma(g) => Err(Error::MissingGamma { samples, gammas: g.len() }),
    }
}

/// Monte-Carlo estimate of the sign-weighted transform
/// `E[∏_{k∈I} i S(x̂_k) · exp(i cᵀx̂)]`.
pub fn signed_cf_term(samples: &[DVector<f64>], query: &CfQuery, policy: &SignPolicy) -> Result<CfValue> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let gammas = gammas_for(policy, samples.len())?;
    let mut sum = Complex64::new(0.0, 0.0);
    for (i, x) in samples.iter().enumerate() {
        let psi = sign_weights(x, gammas.map(|g| &g[i]), &query.u, query.tau);
        let weight: Complex64 = query.subset.iter().map(|&k| psi[k]).product();
        sum += weight * Complex64::cis(query.c.dot(x));
    }
    Ok(sum / samples.len() as f64)
}

/// Which trigonometric factor a coordinate carries in one expansion term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// One term of the subset expansion: the subset `I`, its sin/cos pattern and
/// the product weight `∏_{k∈I} sin(τu_k) ∏_{j∉I} cos(τu_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionTerm {
    pub subset: Vec<usize>,
    pub pattern: Vec<Trig>,
    pub weight: f64,
}

/// Enumerates all `2^N` terms, ordered by subset size then lexicographically.
pub fn expansion_terms(u: &DVector<f64>, tau: f64) -> Result<Vec<ExpansionTerm>> {
    let n = u.len();
    if n > MAX_EXPANSION_DIM {
        return Err(Error::ExpansionTooLarge { n, cap: MAX_EXPANSION_DIM });
    }
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| {
        let bits: Vec<usize> = (0..n).filter(|k| m >> k & 1 == 1).collect();
        (bits.len(), bits)
    });
    Ok(masks
        .into_iter()
        .map(|mask| {
            let pattern: Vec<Trig> = (0..n).map(|k| if mask >> k & 1 == 1 { Trig::Sin } else { Trig::Cos }).collect();
            let weight = pattern
                .iter()
                .zip(u.iter())
                .map(|(t, uk)| match t {
                    Trig::Sin => (tau * uk).sin(),
                    Trig::Cos => (tau * uk).cos(),
                })
                .product();
            let subset = (0..n).filter(|k| mask >> k & 1 == 1).collect();
            ExpansionTerm { subset, pattern, weight }
        })
        .collect())
}

/// Left side of the characteristic-function identity, product form:
/// `E[∏_j (cos(τu_j) + ψ_j sin(τu_j)) · exp(i cᵀx̂)]`.
pub fn lasso_cf_lhs(
    samples: &[DVector<f64>],
    u: &DVector<f64>,
    model: &MeasurementModel,
    policy: &SignPolicy,
) -> Result<CfValue> {
    let n = model.n();
    if n > MAX_EXPANSION_DIM {
        return Err(Error::ExpansionTooLarge { n, cap: MAX_EXPANSION_DIM });
    }
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let query = CfQuery::new(model, u.clone())?;
    let gammas = gammas_for(policy, samples.len())?;
    let tau = model.tau();
    let trig: Vec<(f64, f64)> = u.iter().map(|uj| ((tau * uj).cos(), (tau * uj).sin())).collect();
    let mut sum = Complex64::new(0.0, 0.0);
    for (i, x) in samples.iter().enumerate() {
        let psi = sign_weights(x, gammas.map(|g| &g[i]), u, tau);
        let factor: Complex64 = trig.iter().zip(&psi).map(|(&(c, s), p)| c + p * s).product();
        sum += factor * Complex64::cis(query.c.dot(x));
    }
    Ok(sum / samples.len() as f64)
}

/// Left side of the identity as the explicit `2^N`-term sum over subsets.
pub fn lasso_cf_lhs_expanded(
    samples: &[DVector<f64>],
    u: &DVector<f64>,
    model: &MeasurementModel,
    policy: &SignPolicy,
) -> Result<CfValue> {
    let terms = expansion_terms(u, model.tau())?;
    let base = CfQuery::new(model, u.clone())?;
    let mut total = Complex64::new(0.0, 0.0);
    for term in terms {
        let query = base.clone().with_subset(term.subset)?;
        total += signed_cf_term(samples, &query, policy)? * term.weight;
    }
    Ok(total)
}

/// `E[exp(iu(ẑ_k + τ S(ẑ_k)))]` with `S(0) = 0`: the one-dimensional slice of
/// the identity under the approximation `S(h_kᵀẑ) ≈ S(ẑ_k)`, which equals
/// `cos(τu) F(u) + sin(τu) F(ū)`.
pub fn slice_lhs(samples_zk: &[f64], u: f64, tau: f64) -> Result<CfValue> {
    if samples_zk.is_empty() {
        return Err(Error::EmptySamples);
    }
    let sum: Complex64 = samples_zk.iter().map(|&z| Complex64::cis(u * (z + tau * sign(z)))).sum();
    Ok(sum / samples_zk.len() as f64)
}

/// Right side of the one-dimensional slice: `exp(−u²σ²w_kk/2 + iu w_kᵀx)`.
pub fn slice_rhs_cf(model: &MeasurementModel, k: usize, u: f64) -> CfValue {
    let w = model.gram();
    let wkk = w[(k, k)];
    let loc = w.column(k).dot(model.x());
    let s2 = model.sigma() * model.sigma();
    Complex64::from_polar((-0.5 * u * u * s2 * wkk).exp(), u * loc)
}
