//! Gaussian evaluation of the sign-weighted slice term
//! `i ∫ f(ẑ) S(h_kᵀẑ) e^{iuẑ_k} dẑ` for `ẑ ~ N(m, R)`.
//!
//! The hyperplane `h_kᵀẑ = 0` is solved for a pivot coordinate, which turns
//! `E[S(h_kᵀẑ) | rest]` into `±(1 − 2Φ(·))` of a linear form. The remaining
//! coordinates other than `k` are then integrated out one at a time. Each
//! step conditions the last remaining coordinate on the others, folds its
//! conditional mean into the linear form and inflates the variance of the
//! form by the conditional variance. What is left is the one-dimensional
//! transform of `f(ẑ_k)[1 − 2Φ(β ẑ_k + α)]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::CfValue;
use crate::linmodel::MeasurementModel;
use crate::normal::std_cdf;
use crate::quadrature::{composite, gauss_hermite, gauss_legendre, MAX_HERMITE_NODES};
use crate::{Error, Result};

pub const DEFAULT_HERMITE_NODES: usize = 128;
/// Pivot entries of `h` below this magnitude are unusable.
pub const PIVOT_TOL: f64 = 1e-12;
/// Above this slope (in standard deviations of `ẑ_k`) the `Φ` factor is
/// treated as a sharp transition and integrated on a refined composite rule.
const STEEP_SLOPE: f64 = 2.0;

/// Multivariate Gaussian stand-in for the law of `ẑ = W x̂`, with the
/// hyperplane normal `h` (a column of `W⁻¹` or `W†`).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSurrogate {
    pub m: DVector<f64>,
    pub r: DMatrix<f64>,
    pub h: DVector<f64>,
}

impl GaussianSurrogate {
    pub fn new(m: DVector<f64>, r: DMatrix<f64>, h: DVector<f64>) -> Result<Self> {
        let n = m.len();
        if n == 0 || r.shape() != (n, n) || h.len() != n {
            return Err(Error::InvalidDimension(format!(
                "surrogate needs m: {n}, R: {n}x{n}, h: {n}; got R {:?}, h {}",
                r.shape(),
                h.len()
            )));
        }
        if (&r - r.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidParameter("covariance is not symmetric".into()));
        }
        let r = (&r + r.transpose()) * 0.5;
        let low = r.clone().symmetric_eigenvalues().min();
        if low < -1e-10 {
            return Err(Error::InvalidParameter(format!("covariance has eigenvalue {low:e} < 0")));
        }
        Ok(Self { m, r, h })
    }

    /// Surrogate for component `k` of `ẑ = W x̂`: mean `W x`, covariance
    /// `σ² W`, and `h` the k-th column of `W†` (which is `W⁻¹` at full rank).
    pub fn from_model(model: &MeasurementModel, k: usize) -> Result<Self> {
        if k >= model.n() {
            return Err(Error::InvalidDimension(format!("component {k} out of range")));
        }
        let w = model.gram();
        let h = pinv(w).column(k).into_owned();
        let s2 = model.sigma() * model.sigma();
        Self::new(w * model.x(), w * s2, h)
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }
}

fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.is_empty() {
        return m.clone();
    }
    let svd = m.clone().svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
    svd.pseudo_inverse(eps).expect("SVD computed with both factors")
}

/// Linear form `(g·ẑ_k + offset)/√var` inside `Φ`, after reduction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ReducedForm {
    pub slope: f64,
    pub offset: f64,
    pub var: f64,
    /// `sign(h_pivot)`; the sign of the hyperplane test flips with it.
    pub orientation: f64,
}

impl ReducedForm {
    fn weight(&self, z: f64) -> f64 {
        let lin = self.slope * z + self.offset;
        let phi = if self.var > 0.0 {
            std_cdf(lin / self.var.sqrt())
        } else if lin > 0.0 {
            1.0
        } else if lin < 0.0 {
            0.0
        } else {
            0.5
        };
        1.0 - 2.0 * phi
    }
}

/// Eliminates every coordinate except `k`.
pub(crate) fn reduce(s: &GaussianSurrogate, k: usize) -> Result<ReducedForm> {
    let n = s.dim();
    let hk = s.h[k];
    let pivot = (0..n).filter(|&j| j != k).max_by(|&a, &b| s.h[a].abs().total_cmp(&s.h[b].abs()));

    let pivot = match pivot {
        Some(p) if s.h[p].abs() >= PIVOT_TOL => p,
        _ => {
            // h is (numerically) aligned with axis k: S(h_kᵀẑ) = S(h_k)·S(ẑ_k)
            if hk.abs() < PIVOT_TOL {
                let largest = s.h.amax();
                return Err(Error::DegenerateHyperplane(largest));
            }
            return Ok(ReducedForm { slope: -1.0, offset: 0.0, var: 0.0, orientation: hk.signum() });
        }
    };

    let hp = s.h[pivot];
    // remaining coordinates, target first
    let mut dims: Vec<usize> = std::iter::once(k).chain((0..n).filter(|&j| j != k && j != pivot)).collect();

    // condition the pivot on the rest
    let r_rest = s.r.select_rows(&dims).select_columns(&dims);
    let r_cross = DVector::from_iterator(dims.len(), dims.iter().map(|&j| s.r[(j, pivot)]));
    let m_rest = DVector::from_iterator(dims.len(), dims.iter().map(|&j| s.m[j]));
    let rp = pinv(&r_rest) * &r_cross;
    let svec = DVector::from_iterator(dims.len(), dims.iter().map(|&j| -s.h[j] / hp));
    let mut g = svec - &rp;
    let mut offset = -(s.m[pivot] - rp.dot(&m_rest));
    let mut var = (s.r[(pivot, pivot)] - rp.dot(&r_cross)).max(0.0);

    while dims.len() > 1 {
        let last = dims.len() - 1;
        let d = dims[last];
        let gd = g[last];
        dims.truncate(last);
        g = g.rows(0, last).into_owned();
        let r_rest = s.r.select_rows(&dims).select_columns(&dims);
        let r_cross = DVector::from_iterator(dims.len(), dims.iter().map(|&j| s.r[(j, d)]));
        let m_rest = DVector::from_iterator(dims.len(), dims.iter().map(|&j| s.m[j]));
        let rp = pinv(&r_rest) * &r_cross;
        let q = (s.r[(d, d)] - rp.dot(&r_cross)).max(0.0);
        g.axpy(gd, &rp, 1.0);
        offset += gd * (s.m[d] - rp.dot(&m_rest));
        var += gd * gd * q;
    }

    Ok(ReducedForm { slope: g[0], offset, var, orientation: hp.signum() })
}

/// `i ∫ f(ẑ) S(h_kᵀẑ) e^{iuẑ_k} dẑ` under `ẑ ~ N(m, R)`.
///
/// The final one-dimensional integral uses `quadrature_nodes`-point
/// Gauss–Hermite while the `Φ` factor is smooth on the scale of `ẑ_k`, and a
/// composite Gauss–Legendre rule refined around the transition otherwise.
pub fn slice_term_gaussian(
    surrogate: &GaussianSurrogate,
    k: usize,
    u: f64,
    quadrature_nodes: usize,
) -> Result<CfValue> {
    if k >= surrogate.dim() {
        return Err(Error::InvalidDimension(format!("component {k} out of range for N = {}", surrogate.dim())));
    }
    if !(32..=MAX_HERMITE_NODES).contains(&quadrature_nodes) {
        return Err(Error::InvalidParameter(format!(
            "quadrature nodes must be in 32..={MAX_HERMITE_NODES}, got {quadrature_nodes}"
        )));
    }
    let form = reduce(surrogate, k)?;
    let mean = surrogate.m[k];
    let var = surrogate.r[(k, k)];
    let integral = weighted_fourier(&form, mean, var, u, quadrature_nodes);
    Ok(Complex64::i() * integral * form.orientation)
}

/// `∫ φ(z; mean, var) [1 − 2Φ(form)] e^{iuz} dz`.
pub(crate) fn weighted_fourier(form: &ReducedForm, mean: f64, var: f64, u: f64, nodes: usize) -> Complex64 {
    let f = |z: f64| Complex64::cis(u * z) * form.weight(z);
    if var <= 0.0 {
        return f(mean);
    }
    let sd = var.sqrt();
    let steep = form.var == 0.0 || form.slope.abs() * sd > STEEP_SLOPE * form.var.sqrt();
    if !steep {
        let rule = gauss_hermite(nodes);
        let scale = (2.0 * var).sqrt();
        let sum: Complex64 = rule.nodes.iter().zip(&rule.weights).map(|(t, w)| f(mean + scale * t) * *w).sum();
        return sum / std::f64::consts::PI.sqrt();
    }

    let lo = mean - 12.0 * sd;
    let hi = mean + 12.0 * sd;
    let mut breaks: Vec<f64> = (0..=48).map(|i| lo + (hi - lo) * i as f64 / 48.0).collect();
    if form.slope != 0.0 {
        let center = -form.offset / form.slope;
        let width = form.var.sqrt() / form.slope.abs();
        breaks.push(center);
        if width > 0.0 {
            let mut step = width / 4.0;
            while step < hi - lo {
                breaks.push(center - step);
                breaks.push(center + step);
                step *= 2.0;
            }
        }
    }
    breaks.retain(|b| (lo..=hi).contains(b));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let rule = gauss_legendre(20);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    composite(&rule, &breaks, Complex64::new(0.0, 0.0), |z| {
        let d = z - mean;
        f(z) * ((-0.5 * d * d / var).exp() * norm)
    })
}
