//! Report types and the file writers for a finished experiment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use super::empirical::{EmpiricalDistribution, KsOutcome};
use super::{ExperimentConfig, EXACT_IDENTITY_TOL};
use crate::distributions::MarginalLaw;
use crate::linmodel::{MeasurementModel, ModelKind};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Cplx {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<Cplx> for Complex64 {
    fn from(z: Cplx) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPoint {
    Random,
    Zero,
    Axis,
    User,
}

/// Which estimate a component report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    XHat,
    ZHat,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CfGridRow {
    pub point: GridPoint,
    pub u: Vec<f64>,
    /// Product form with `S(0) = 0`.
    pub lhs_zero: Cplx,
    /// Product form with the subgradient-resolved sign.
    pub lhs_gamma: Cplx,
    pub ecf_atb: Cplx,
    pub rhs: Cplx,
    /// `|lhs_gamma − ecf_atb|`.
    pub gap_exact: f64,
    /// `|lhs_zero − rhs|`.
    pub gap_zero: f64,
    /// `|ecf_atb − rhs|`.
    pub gap_mc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceRow {
    pub u: f64,
    pub lhs: Cplx,
    pub rhs: Cplx,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentReport {
    /// 1-based.
    pub component: usize,
    pub variable: Variable,
    pub law: MarginalLaw,
    pub samples: usize,
    pub nonzero: usize,
    pub zero_count: usize,
    pub zero_fraction: f64,
    pub point_mass: f64,
    /// Binomial standard error of the zero fraction under `point_mass`.
    pub zero_fraction_se: f64,
    /// `|zero_fraction − point_mass| / se`; absent when `se = 0`.
    pub zero_fraction_z: Option<f64>,
    pub ks: KsOutcome,
    pub ks_threshold: Option<f64>,
    pub slice: Vec<SliceRow>,
    pub slice_max_gap: f64,
    #[serde(skip)]
    pub distribution: EmpiricalDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: usize,
    pub p50: usize,
    pub p90: usize,
    pub max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverStats {
    pub max_kkt_residual: f64,
    pub kkt_budget: f64,
    pub iterations: Quantiles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReplicateSummary {
    pub requested: usize,
    pub included: usize,
    pub excluded: usize,
    pub exclusion_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSummary {
    pub kind: ModelKind,
    pub rank: usize,
    /// Row-major.
    pub a: Vec<Vec<f64>>,
    pub gram: Vec<Vec<f64>>,
}

impl ModelSummary {
    pub fn of(model: &MeasurementModel) -> Self {
        let rows = |m: &nalgebra::DMatrix<f64>| m.row_iter().map(|r| r.iter().copied().collect()).collect();
        Self { kind: model.kind(), rank: model.rank(), a: rows(model.a()), gram: rows(model.gram()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checks {
    /// Every included replicate meets the KKT budget.
    pub kkt_ok: bool,
    pub max_gap_exact: f64,
    pub exact_identity_ok: bool,
    pub max_gap_zero: f64,
    /// `4/√L`.
    pub mc_bound: f64,
    /// Random or user grid points whose Monte-Carlo gap is within `mc_bound`.
    pub mc_within: usize,
    pub mc_points: usize,
    /// Components whose KS distance is above (or cannot be compared to)
    /// their configured threshold.
    pub ks_violations: Vec<usize>,
    /// What a plain run must satisfy.
    pub hard_ok: bool,
    /// What a strict run must satisfy.
    pub strict_ok: bool,
}

impl Checks {
    pub fn evaluate(solver: &SolverStats, components: &[ComponentReport], grid: &[CfGridRow], l: usize) -> Self {
        let kkt_ok = solver.max_kkt_residual <= solver.kkt_budget;
        let max_gap_exact = grid.iter().map(|r| r.gap_exact).fold(0.0, f64::max);
        let max_gap_zero = grid.iter().map(|r| r.gap_zero).fold(0.0, f64::max);
        let exact_identity_ok = max_gap_exact <= EXACT_IDENTITY_TOL;
        let mc_bound = 4.0 / (l as f64).sqrt();
        let scored: Vec<&CfGridRow> =
            grid.iter().filter(|r| matches!(r.point, GridPoint::Random | GridPoint::User)).collect();
        let mc_points = scored.len();
        let mc_within = scored.iter().filter(|r| r.gap_mc <= mc_bound).count();
        let ks_violations: Vec<usize> = components
            .iter()
            .filter(|c| match (c.ks_threshold, c.ks.distance()) {
                (Some(t), Some(d)) => d > t,
                (Some(_), None) => true,
                (None, _) => false,
            })
            .map(|c| c.component)
            .collect();
        // at most one point in twenty may miss the Monte-Carlo bound
        let mc_ok = mc_within * 20 >= mc_points * 19;
        let hard_ok = kkt_ok;
        let strict_ok = hard_ok && exact_identity_ok && mc_ok && ks_violations.is_empty();
        Self {
            kkt_ok,
            max_gap_exact,
            exact_identity_ok,
            max_gap_zero,
            mc_bound,
            mc_within,
            mc_points,
            ks_violations,
            hard_ok,
            strict_ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    /// Fully resolved configuration, after any overrides.
    pub config: ExperimentConfig,
    /// Overridden fields and their new values.
    pub overrides: BTreeMap<String, serde_json::Value>,
    pub model: ModelSummary,
    pub replicates: ReplicateSummary,
    pub solver: SolverStats,
    pub components: Vec<ComponentReport>,
    pub cf_grid: Vec<CfGridRow>,
    pub checks: Checks,
    /// Kept out of the JSON so that reports are byte-identical across runs.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub threads: usize,
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn component(&self, k: usize) -> Option<&ComponentReport> {
        self.components.iter().find(|c| c.component == k)
    }
}

/// Round-trip formatting: 17 significant digits.
pub(crate) fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn hist_csv(d: &EmpiricalDistribution) -> String {
    let mut s = String::from("bin_left,bin_right,density\n");
    for (e, dens) in d.histogram.edges.windows(2).zip(&d.histogram.density) {
        let _ = writeln!(s, "{},{},{}", num(e[0]), num(e[1]), num(*dens));
    }
    s
}

fn cf_grid_csv(n: usize, rows: &[CfGridRow]) -> String {
    let mut s = String::new();
    for k in 1..=n {
        let _ = write!(s, "u_{k},");
    }
    s.push_str(
        "lhs_re,lhs_im,rhs_re,rhs_im,lhs_gamma_re,lhs_gamma_im,ecf_atb_re,ecf_atb_im,gap_exact,gap_zero,gap_mc\n",
    );
    for r in rows {
        let cols: Vec<String> =
            r.u.iter()
                .copied()
                .chain([
                    r.lhs_zero.re,
                    r.lhs_zero.im,
                    r.rhs.re,
                    r.rhs.im,
                    r.lhs_gamma.re,
                    r.lhs_gamma.im,
                    r.ecf_atb.re,
                    r.ecf_atb.im,
                    r.gap_exact,
                    r.gap_zero,
                    r.gap_mc,
                ])
                .map(num)
                .collect();
        s.push_str(&cols.join(","));
        s.push('\n');
    }
    s
}

fn slice_csv(rows: &[SliceRow]) -> String {
    let mut s = String::from("u,lhs_re,lhs_im,rhs_re,rhs_im,gap\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            num(r.u),
            num(r.lhs.re),
            num(r.lhs.im),
            num(r.rhs.re),
            num(r.rhs.im),
            num(r.gap)
        );
    }
    s
}

fn samples_csv(d: &EmpiricalDistribution) -> String {
    let mut s = String::from("value\n");
    for v in &d.samples {
        s.push_str(&num(*v));
        s.push('\n');
    }
    s
}

/// Writes `report.json`, `cf_grid.csv`, `hist_<k>.csv`, `slice_<k>.csv`,
/// `timing.json` and, if asked, `samples_<k>.csv` into `dir`.
pub fn write_outputs(report: &ExperimentReport, dir: &Path, emit_samples: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put("report.json".into(), report.to_json()?)?;
    put("cf_grid.csv".into(), cf_grid_csv(report.config.n, &report.cf_grid))?;
    for c in &report.components {
        put(format!("hist_{}.csv", c.component), hist_csv(&c.distribution))?;
        put(format!("slice_{}.csv", c.component), slice_csv(&c.slice))?;
        if emit_samples {
            put(format!("samples_{}.csv", c.component), samples_csv(&c.distribution))?;
        }
    }
    let timing = serde_json::json!({
        "wall_clock_seconds": report.wall_clock_seconds,
        "threads": report.threads,
    });
    put("timing.json".into(), format!("{}\n", serde_json::to_string_pretty(&timing)?))?;
    Ok(written)
}
