//! Monte-Carlo experiment runner: replicate generation, per-replicate LASSO
//! solves, empirical laws, characteristic-function grids and scoring.

mod empirical;
mod report;

pub use empirical::{ks_distance, ks_statistic, EmpiricalDistribution, Histogram, KsOutcome, MIN_KS_SAMPLES};
pub use report::{
    write_outputs, CfGridRow, Checks, ComponentReport, Cplx, ExperimentReport, GridPoint, ModelSummary, Quantiles,
    ReplicateSummary, SliceRow, SolverStats, Variable,
};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cfalgebra::{
    empirical_cf, gaussian_rhs_cf, lasso_cf_lhs, slice_lhs, slice_rhs_cf, SignPolicy, MAX_EXPANSION_DIM,
};
use crate::distributions::MarginalLaw;
use crate::linmodel::{build_bernoulli_model, build_hadamard_model, sample_measurement, MeasurementModel, ModelKind};
use crate::solver::{solve_lasso, SolverOptions};
use crate::{Error, Result};

pub const DEFAULT_BINS: usize = 60;
pub const MIN_BINS: usize = 10;
/// Fraction of replicates that may be dropped for solver non-convergence.
pub const EXCLUSION_FRACTION: f64 = 0.001;
pub const KKT_BUDGET: f64 = 1e-8;
pub const EXACT_IDENTITY_TOL: f64 = 1e-12;
/// Default grid: this many random frequencies in the ball `‖u‖ ≤ DEFAULT_U_RADIUS`.
pub const DEFAULT_U_POINTS: usize = 20;
pub const DEFAULT_U_RADIUS: f64 = 2.0;
/// Stream reserved for the default frequency grid.
const U_GRID_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub max_iter: Option<usize>,
}

fn default_tol() -> f64 {
    SolverOptions::default().tol
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: default_tol(), max_iter: None }
    }
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

/// Experiment description. Component indices (in `x_spec`,
/// `component_indices` and `ks_thresholds`) are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model_kind: ModelKind,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// Seed of the ±1 Bernoulli matrix; ignored for orthogonal models.
    #[serde(default)]
    pub matrix_seed: u64,
    /// Nonzero entries of the true signal as `(index, value)` pairs.
    pub x_spec: Vec<(usize, f64)>,
    pub sigma: f64,
    pub tau: f64,
    #[serde(rename = "L")]
    pub replicates: usize,
    pub seed: u64,
    /// Frequencies for the N-dimensional grid. Absent means the default grid.
    #[serde(default)]
    pub u_grid: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Absent means every component.
    #[serde(default)]
    pub component_indices: Option<Vec<usize>>,
    /// Scalar frequencies for the per-component slice comparison.
    #[serde(default)]
    pub slice_u: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Optional KS ceilings by component, enforced only in strict runs.
    #[serde(default)]
    pub ks_thresholds: BTreeMap<usize, f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.m == 0 || self.n == 0 {
            return bad(format!("M and N must be positive, got M = {}, N = {}", self.m, self.n));
        }
        if self.replicates == 0 {
            return bad("L must be at least 1".into());
        }
        if self.bins < MIN_BINS {
            return bad(format!("bins must be at least {MIN_BINS}, got {}", self.bins));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive and finite, got {}", self.sigma));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return bad(format!("tau must be finite and >= 0, got {}", self.tau));
        }
        if self.n > MAX_EXPANSION_DIM {
            return bad(format!("N = {} exceeds the expansion cap {MAX_EXPANSION_DIM}", self.n));
        }
        let in_range = |k: usize| (1..=self.n).contains(&k);
        let mut seen = Vec::new();
        for &(k, v) in &self.x_spec {
            if !in_range(k) {
                return bad(format!("x_spec index {k} outside 1..={}", self.n));
            }
            if seen.contains(&k) {
                return bad(format!("x_spec index {k} given twice"));
            }
            if !v.is_finite() {
                return bad(format!("x_spec value at {k} is not finite"));
            }
            seen.push(k);
        }
        if let Some(ks) = &self.component_indices {
            if ks.is_empty() {
                return bad("component_indices is empty".into());
            }
            if let Some(k) = ks.iter().find(|&&k| !in_range(k)) {
                return bad(format!("component index {k} outside 1..={}", self.n));
            }
        }
        if let Some(k) = self.ks_thresholds.keys().find(|&&k| !in_range(k)) {
            return bad(format!("ks_thresholds index {k} outside 1..={}", self.n));
        }
        if let Some(grid) = &self.u_grid {
            if let Some(u) = grid.iter().find(|u| u.len() != self.n) {
                return bad(format!("u_grid entry has length {}, expected {}", u.len(), self.n));
            }
            if grid.iter().flatten().any(|v| !v.is_finite()) {
                return bad("u_grid contains a non-finite value".into());
            }
        }
        if let Some(us) = &self.slice_u {
            if us.iter().any(|v| !v.is_finite()) {
                return bad("slice_u contains a non-finite value".into());
            }
        }
        if self.solver.tol.is_nan() || self.solver.tol <= 0.0 {
            return bad(format!("solver tol must be positive, got {}", self.solver.tol));
        }
        Ok(())
    }

    pub fn signal(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.n);
        for &(k, v) in &self.x_spec {
            x[k - 1] = v;
        }
        x
    }

    /// Builds the model and checks that its realized kind is the declared one.
    pub fn build_model(&self) -> Result<MeasurementModel> {
        let x = self.signal();
        let model = match self.model_kind {
            ModelKind::Orthogonal => {
                if self.m != self.n {
                    return Err(Error::Config(format!("orthogonal model needs M = N, got {}x{}", self.m, self.n)));
                }
                build_hadamard_model(self.m, x, self.sigma, self.tau)
            }
            ModelKind::FullRank | ModelKind::Singular => {
                build_bernoulli_model(self.m, self.n, x, self.sigma, self.tau, self.matrix_seed)
            }
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        let realized = model.kind();
        if realized != self.model_kind {
            return Err(Error::Config(format!(
                "declared model_kind {:?} but the matrix is {:?} (rank {})",
                self.model_kind,
                realized,
                model.rank()
            )));
        }
        Ok(model)
    }

    /// 0-based indices of the analysed components.
    pub fn components(&self) -> Vec<usize> {
        match &self.component_indices {
            Some(ks) => ks.iter().map(|k| k - 1).collect(),
            None => (0..self.n).collect(),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { tol: self.solver.tol, max_iter: self.solver.max_iter }
    }

    /// Largest number of excluded replicates tolerated.
    pub fn exclusion_budget(&self) -> usize {
        (EXCLUSION_FRACTION * self.replicates as f64).floor() as usize
    }

    pub fn slice_frequencies(&self) -> Vec<f64> {
        match &self.slice_u {
            Some(us) => us.clone(),
            None => (0..=16).map(|i| -2.0 + 0.25 * i as f64).collect(),
        }
    }
}

/// Outcome of one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Replicate {
    pub atb: DVector<f64>,
    pub x_hat: DVector<f64>,
    pub gamma: DVector<f64>,
    /// `W x̂`.
    pub z_hat: DVector<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Random stream of replicate `r`: the experiment seed selects the key and
/// `r` the stream, so a replicate does not depend on how work is scheduled.
pub fn replicate_rng(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

pub fn run_replicate(model: &MeasurementModel, opts: &SolverOptions, seed: u64, r: u64) -> Result<Replicate> {
    let mut rng = replicate_rng(seed, r);
    let b = sample_measurement(model, &mut rng);
    let sol = solve_lasso(model, &b, opts)?;
    let atb = model.a().tr_mul(&b);
    let z_hat = model.gram() * &sol.x_hat;
    Ok(Replicate {
        atb,
        x_hat: sol.x_hat,
        gamma: sol.gamma,
        z_hat,
        kkt_residual: sol.kkt_residual,
        iterations: sol.iterations,
    })
}

/// Runs all replicates in parallel on the current rayon pool. Returns the
/// included replicates in index order and the number excluded.
pub fn simulate_replicates(model: &MeasurementModel, config: &ExperimentConfig) -> Result<(Vec<Replicate>, usize)> {
    let opts = config.solver_options();
    let outcomes: Vec<Result<Replicate>> =
        (0..config.replicates as u64).into_par_iter().map(|r| run_replicate(model, &opts, config.seed, r)).collect();
    let mut kept = Vec::with_capacity(outcomes.len());
    let mut excluded = 0;
    for outcome in outcomes {
        match outcome {
            Ok(rep) => kept.push(rep),
            Err(Error::NonConvergence { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    let budget = config.exclusion_budget();
    if excluded > budget {
        return Err(Error::ExclusionBudget { excluded, replicates: config.replicates, budget });
    }
    if kept.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok((kept, excluded))
}

/// Default frequency grid: random points uniform in the ball, then `u = 0`,
/// then the unit axis vectors.
pub fn default_u_grid(n: usize, seed: u64) -> Vec<(GridPoint, DVector<f64>)> {
    let mut rng = replicate_rng(seed, U_GRID_STREAM);
    let mut grid = Vec::with_capacity(DEFAULT_U_POINTS + n + 1);
    for _ in 0..DEFAULT_U_POINTS {
        let dir = loop {
            let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let norm = g.norm();
            if norm > 0.0 {
                break g / norm;
            }
        };
        let radius = DEFAULT_U_RADIUS * rng.random::<f64>().powf(1.0 / n as f64);
        grid.push((GridPoint::Random, dir * radius));
    }
    grid.push((GridPoint::Zero, DVector::zeros(n)));
    for k in 0..n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        grid.push((GridPoint::Axis, e));
    }
    grid
}

fn grid_for(config: &ExperimentConfig) -> Vec<(GridPoint, DVector<f64>)> {
    match &config.u_grid {
        Some(grid) => grid.iter().map(|u| (GridPoint::User, DVector::from_column_slice(u))).collect(),
        None => default_u_grid(config.n, config.seed),
    }
}

/// Per-frequency comparison of the identity's two sides on solved replicates.
pub fn cf_grid_compare(
    replicates: &[Replicate],
    model: &MeasurementModel,
    grid: &[(GridPoint, DVector<f64>)],
) -> Result<Vec<CfGridRow>> {
    let x_hat: Vec<DVector<f64>> = replicates.iter().map(|r| r.x_hat.clone()).collect();
    let gamma: Vec<DVector<f64>> = replicates.iter().map(|r| r.gamma.clone()).collect();
    let atb: Vec<DVector<f64>> = replicates.iter().map(|r| r.atb.clone()).collect();
    grid.iter()
        .map(|(point, u)| {
            let lhs_zero = lasso_cf_lhs(&x_hat, u, model, &SignPolicy::Zero)?;
            let lhs_gamma = lasso_cf_lhs(&x_hat, u, model, &SignPolicy::FromGamma(&gamma))?;
            let ecf_atb = empirical_cf(&atb, u)?;
            let rhs = gaussian_rhs_cf(u, model);
            Ok(CfGridRow {
                point: *point,
                u: u.iter().copied().collect(),
                lhs_zero: lhs_zero.into(),
                lhs_gamma: lhs_gamma.into(),
                ecf_atb: ecf_atb.into(),
                rhs: rhs.into(),
                gap_exact: (lhs_gamma - ecf_atb).norm(),
                gap_zero: (lhs_zero - rhs).norm(),
                gap_mc: (ecf_atb - rhs).norm(),
            })
        })
        .collect()
}

/// Nearest-rank quantiles.
fn quantiles(mut v: Vec<usize>) -> Quantiles {
    v.sort_unstable();
    let at = |q: f64| v[((q * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
    Quantiles { min: v[0], p50: at(0.5), p90: at(0.9), max: v[v.len() - 1] }
}

fn lex_cmp(a: &DVector<f64>, b: &DVector<f64>) -> Ordering {
    a.iter().zip(b.iter()).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Scores a set of replicates. The replicates are put into a canonical order
/// first, so the result does not depend on the order they are passed in.
pub fn aggregate(
    config: &ExperimentConfig,
    model: &MeasurementModel,
    mut replicates: Vec<Replicate>,
    excluded: usize,
) -> Result<ExperimentReport> {
    if replicates.is_empty() {
        return Err(Error::EmptySamples);
    }
    replicates.sort_by(|a, b| lex_cmp(&a.atb, &b.atb).then_with(|| lex_cmp(&a.x_hat, &b.x_hat)));
    let l = replicates.len();
    let orthogonal = model.kind() == ModelKind::Orthogonal;
    let w = model.gram();
    let x = model.x();

    let mut components = Vec::new();
    for k in config.components() {
        let (variable, law) = if orthogonal {
            (Variable::XHat, MarginalLaw::orthogonal(x[k], model.sigma(), model.tau())?)
        } else {
            let loc = w.column(k).dot(x);
            (Variable::ZHat, MarginalLaw::transformed(loc, model.sigma(), w[(k, k)], model.tau())?)
        };
        let values: Vec<f64> = replicates
            .iter()
            .map(|r| match variable {
                Variable::XHat => r.x_hat[k],
                Variable::ZHat => r.z_hat[k],
            })
            .collect();
        let dist = EmpiricalDistribution::new(k + 1, values, config.bins);
        let ks = ks_distance(&dist, |v| law.conditional_cdf(v));
        let point_mass = law.point_mass_zero();
        let se = (point_mass * (1.0 - point_mass) / l as f64).sqrt();
        let zero_fraction = dist.zero_fraction();
        let zero_fraction_z = (se > 0.0).then(|| (zero_fraction - point_mass).abs() / se);
        let z_samples: Vec<f64> = replicates.iter().map(|r| r.z_hat[k]).collect();
        let slice = config
            .slice_frequencies()
            .into_iter()
            .map(|u| {
                let lhs = slice_lhs(&z_samples, u, model.tau())?;
                let rhs = slice_rhs_cf(model, k, u);
                Ok(SliceRow { u, lhs: lhs.into(), rhs: rhs.into(), gap: (lhs - rhs).norm() })
            })
            .collect::<Result<Vec<_>>>()?;
        let slice_max_gap = slice.iter().map(|r| r.gap).fold(0.0, f64::max);
        components.push(ComponentReport {
            component: k + 1,
            variable,
            law,
            samples: dist.len(),
            nonzero: dist.nonzero.len(),
            zero_count: dist.zero_count,
            zero_fraction,
            point_mass,
            zero_fraction_se: se,
            zero_fraction_z,
            ks,
            ks_threshold: config.ks_thresholds.get(&(k + 1)).copied(),
            slice,
            slice_max_gap,
            distribution: dist,
        });
    }

    let cf_grid = cf_grid_compare(&replicates, model, &grid_for(config))?;

    let max_kkt_residual = replicates.iter().map(|r| r.kkt_residual).fold(0.0, f64::max);
    let solver = SolverStats {
        max_kkt_residual,
        kkt_budget: KKT_BUDGET,
        iterations: quantiles(replicates.iter().map(|r| r.iterations).collect()),
    };
    let replicate_summary = ReplicateSummary {
        requested: config.replicates,
        included: l,
        excluded,
        exclusion_budget: config.exclusion_budget(),
    };
    let checks = Checks::evaluate(&solver, &components, &cf_grid, l);
    Ok(ExperimentReport {
        config: config.clone(),
        overrides: BTreeMap::new(),
        model: ModelSummary::of(model),
        replicates: replicate_summary,
        solver,
        components,
        cf_grid,
        checks,
        wall_clock_seconds: 0.0,
        threads: rayon::current_num_threads(),
    })
}

/// Validates the config, simulates and scores on the current rayon pool.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = Instant::now();
    config.validate()?;
    let model = config.build_model()?;
    let (replicates, excluded) = simulate_replicates(&model, config)?;
    let mut report = aggregate(config, &model, replicates, excluded)?;
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// [`run_experiment`] on a dedicated pool of `threads` workers
/// (`None`: one per hardware thread).
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<ExperimentReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| run_experiment(config))
}
