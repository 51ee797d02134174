//! LASSO by cyclic coordinate descent, certified through the KKT conditions
//! `W x̂ + τγ = Aᵀb` with `γ_k = sign(x̂_k)` on the support and `|γ_k| ≤ 1` off it.

use nalgebra::{DMatrix, DVector};

use crate::linmodel::MeasurementModel;
use crate::{Error, Result};

/// `|γ_k|` within this distance of one puts `k` in the active set.
pub const ACTIVE_SET_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// Maximum number of full sweeps; `None` means `100·N`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None }
    }
}

impl SolverOptions {
    fn sweeps(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(100 * n.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub x_hat: DVector<f64>,
    /// KKT subgradient `(Aᵀb − W x̂)/τ`; all zeros when `τ = 0`.
    pub gamma: DVector<f64>,
    pub active_set: Vec<usize>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Value of `τ‖x‖₁ + ½‖b − A x‖²`.
pub fn objective(model: &MeasurementModel, b: &DVector<f64>, x: &DVector<f64>) -> f64 {
    let r = b - model.a() * x;
    model.tau() * x.lp_norm(1) + 0.5 * r.norm_squared()
}

/// Subgradient and KKT residual of a candidate solution.
///
/// The residual is `max(0, max_k |γ_k| − 1, max_{x̂_k ≠ 0} |γ_k − sign(x̂_k)|)`.
/// With `τ = 0` the subgradient is reported as zero and the residual is the
/// max-norm of the least-squares gradient.
pub fn kkt_check(model: &MeasurementModel, b: &DVector<f64>, x_hat: &DVector<f64>) -> (DVector<f64>, f64) {
    let grad = model.a().tr_mul(b) - model.gram() * x_hat;
    kkt_from_gradient(&grad, x_hat, model.tau())
}

fn kkt_from_gradient(grad: &DVector<f64>, x_hat: &DVector<f64>, tau: f64) -> (DVector<f64>, f64) {
    if tau == 0.0 {
        return (DVector::zeros(grad.len()), grad.amax());
    }
    let gamma = grad / tau;
    let mut residual = 0.0_f64;
    for (g, x) in gamma.iter().zip(x_hat.iter()) {
        residual = residual.max(g.abs() - 1.0);
        if *x != 0.0 {
            residual = residual.max((g - x.signum()).abs());
        }
    }
    (gamma, residual)
}

pub fn solve_lasso(model: &MeasurementModel, b: &DVector<f64>, opts: &SolverOptions) -> Result<LassoSolution> {
    Solver::new(model, b, opts)?.run(DVector::zeros(model.n()), None)
}

/// Same as [`solve_lasso`] from a caller-supplied starting point.
pub fn solve_lasso_from(
    model: &MeasurementModel,
    b: &DVector<f64>,
    start: DVector<f64>,
    opts: &SolverOptions,
) -> Result<LassoSolution> {
    if start.len() != model.n() {
        return Err(Error::InvalidDimension(format!("start has length {}, expected {}", start.len(), model.n())));
    }
    Solver::new(model, b, opts)?.run(start, None)
}

/// Runs the solver and records the objective after every sweep.
pub fn solve_lasso_traced(
    model: &MeasurementModel,
    b: &DVector<f64>,
    opts: &SolverOptions,
) -> Result<(LassoSolution, Vec<f64>)> {
    let mut trace = Vec::new();
    let sol = Solver::new(model, b, opts)?.run(DVector::zeros(model.n()), Some(&mut trace))?;
    Ok((sol, trace))
}

struct Solver<'a> {
    model: &'a MeasurementModel,
    b: &'a DVector<f64>,
    atb: DVector<f64>,
    tol: f64,
    sweeps: usize,
}

impl<'a> Solver<'a> {
    fn new(model: &'a MeasurementModel, b: &'a DVector<f64>, opts: &SolverOptions) -> Result<Self> {
        if b.len() != model.m() {
            return Err(Error::InvalidDimension(format!("measurement has length {}, expected {}", b.len(), model.m())));
        }
        if opts.tol.is_nan() || opts.tol <= 0.0 {
            return Err(Error::InvalidParameter(format!("solver tolerance must be positive, got {}", opts.tol)));
        }
        Ok(Self { model, b, atb: model.a().tr_mul(b), tol: opts.tol, sweeps: opts.sweeps(model.n()) })
    }

    fn run(&self, mut x: DVector<f64>, mut trace: Option<&mut Vec<f64>>) -> Result<LassoSolution> {
        let w = self.model.gram();
        let tau = self.model.tau();
        let n = self.model.n();
        let mut grad = &self.atb - w * &x;
        let mut residual = f64::INFINITY;
        let mut prev_pattern: Option<Vec<i8>> = None;

        for sweep in 1..=self.sweeps {
            let mut max_change = 0.0_f64;
            for k in 0..n {
                let wkk = w[(k, k)];
                if wkk <= 0.0 {
                    continue;
                }
                let old = x[k];
                let new = soft_threshold(grad[k] + wkk * old, tau) / wkk;
                let delta = new - old;
                if delta != 0.0 {
                    x[k] = new;
                    grad.axpy(-delta, &w.column(k), 1.0);
                    max_change = max_change.max(delta.abs());
                }
            }
            // refresh to keep rounding drift out of the certificate
            grad = &self.atb - w * &x;

            let pattern: Vec<i8> = x.iter().map(|v| sign_of(*v)).collect();
            if prev_pattern.as_ref() == Some(&pattern) {
                if let Some(polished) = self.polish(&x, &pattern) {
                    x = polished;
                    grad = &self.atb - w * &x;
                }
            }
            prev_pattern = Some(pattern);

            if let Some(t) = trace.as_deref_mut() {
                t.push(objective(self.model, self.b, &x));
            }

            let (gamma, res) = kkt_from_gradient(&grad, &x, tau);
            residual = res;
            let scale = 1.0 + x.amax();
            if max_change < self.tol * scale && residual <= 10.0 * self.tol {
                let active_set = if tau == 0.0 {
                    (0..n).filter(|&k| x[k] != 0.0).collect()
                } else {
                    (0..n).filter(|&k| (gamma[k].abs() - 1.0).abs() <= ACTIVE_SET_TOL).collect()
                };
                return Ok(LassoSolution { x_hat: x, gamma, active_set, kkt_residual: residual, iterations: sweep });
            }
        }
        Err(Error::NonConvergence { iterations: self.sweeps, residual, last_iterate: x })
    }

    /// Exact solve of the stationarity equations on a stable sign pattern.
    ///
    /// Accepted only when the result keeps the sign pattern, satisfies the
    /// off-support bound and does not raise the objective.
    fn polish(&self, x: &DVector<f64>, pattern: &[i8]) -> Option<DVector<f64>> {
        let support: Vec<usize> = (0..pattern.len()).filter(|&k| pattern[k] != 0).collect();
        if support.is_empty() {
            return None;
        }
        let w = self.model.gram();
        let tau = self.model.tau();
        let w_s: DMatrix<f64> = w.select_rows(&support).select_columns(&support);
        let rhs =
            DVector::from_iterator(support.len(), support.iter().map(|&k| self.atb[k] - tau * f64::from(pattern[k])));
        let chol = w_s.cholesky()?;
        let sol = chol.solve(&rhs);
        let mut candidate = DVector::zeros(x.len());
        for (i, &k) in support.iter().enumerate() {
            if sign_of(sol[i]) != pattern[k] {
                return None;
            }
            candidate[k] = sol[i];
        }
        let grad = &self.atb - w * &candidate;
        let (_, res) = kkt_from_gradient(&grad, &candidate, tau);
        if res > self.tol {
            return None;
        }
        let before = objective(self.model, self.b, x);
        let after = objective(self.model, self.b, &candidate);
        (after <= before + 1e-14 * before.abs().max(1.0)).then_some(candidate)
    }
}

fn sign_of(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}
