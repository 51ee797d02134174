//! Independent reference computations for the integration tests. Nothing here
//! calls into the library's numerics; only model construction and the
//! experiment runner are shared.
#![allow(dead_code)]

use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use lassodist::harness::{aggregate, simulate_replicates, Replicate};
use lassodist::{ExperimentConfig, ExperimentReport, MeasurementModel};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Standard normal CDF by composite Simpson integration of the density.
pub fn phi_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let t = x.clamp(-12.0, 12.0);
    let n = 4000;
    let h = t / n as f64;
    let dens = |z: f64| (-0.5 * z * z).exp() / SQRT_2PI;
    let mut s = dens(0.0) + dens(t);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * dens(i as f64 * h);
    }
    (0.5 + s * h / 3.0).clamp(0.0, 1.0)
}

/// Mass at zero of the soft-thresholded Gaussian `S_τ(N(μ, s²))`.
pub fn atom(mu: f64, s2: f64, tau: f64) -> f64 {
    let s = s2.sqrt();
    phi_cdf((tau - mu) / s) - phi_cdf((-tau - mu) / s)
}

/// CDF of `S_τ(g)`, `g ~ N(μ, s²)`, conditioned on being nonzero.
pub fn conditional_cdf(v: f64, mu: f64, s2: f64, tau: f64) -> f64 {
    let s = s2.sqrt();
    let p = atom(mu, s2, tau);
    if v < 0.0 {
        phi_cdf((v - tau - mu) / s) / (1.0 - p)
    } else {
        (phi_cdf((v + tau - mu) / s) - p) / (1.0 - p)
    }
}

/// Kolmogorov–Smirnov distance of `samples` against a continuous CDF.
pub fn ks_oracle(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Symmetric tridiagonal eigen-solve for a Gauss rule: nodes and first
/// eigenvector components.
fn golub_welsch(offdiag: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = offdiag.len() + 1;
    let mut j = DMatrix::zeros(n, n);
    for (i, b) in offdiag.iter().enumerate() {
        j[(i, i + 1)] = *b;
        j[(i + 1, i)] = *b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// Nodes and weights for `E[f(Y)]`, `Y ~ N(0, 1)`.
pub fn normal_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    golub_welsch(&off)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let off: Vec<f64> = (1..n).map(|k| k as f64 / ((4 * k * k - 1) as f64).sqrt()).collect();
    let (x, w) = golub_welsch(&off);
    (x, w.into_iter().map(|v| 2.0 * v).collect())
}

/// `∫_a^b f` by `panels` Gauss–Legendre panels.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    a: f64,
    b: f64,
    panels: usize,
    rule: &(Vec<f64>, Vec<f64>),
    mut f: F,
) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    if b <= a {
        return total;
    }
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            total += f(mid + 0.5 * h * x) * (0.5 * h * w);
        }
    }
    total
}

/// `∫ φ(t) S(a + g t) e^{iωt} dt` for a standard normal `t`, split at the
/// sign change.
fn inner_signed(a: f64, g: f64, omega: f64, rule: &(Vec<f64>, Vec<f64>)) -> Complex64 {
    const T: f64 = 12.0;
    let f = |t: f64| Complex64::cis(omega * t) * ((-0.5 * t * t).exp() / SQRT_2PI);
    if g == 0.0 {
        let s = a.signum();
        return integrate(-T, T, 48, rule, f) * s;
    }
    let cut = (-a / g).clamp(-T, T);
    let left = integrate(-T, cut, 24, rule, f);
    let right = integrate(cut, T, 24, rule, f);
    // S(a + g t) is sign(g) right of the cut
    (right - left) * g.signum()
}

/// `i·E[S(hᵀz) e^{iu z_k}]` for `z ~ N(m, R)`, `R` positive definite.
///
/// Writes `z = m + L y` with `R = L Lᵀ` and integrates over a tensor grid in
/// rotated coordinates: `t = y_N` by split panels at the hyperplane, `w₁`
/// along the remaining part of `Lᵀh` by panels refined around the sign
/// change, and any further direction (where the integrand is a plain
/// oscillation) by a Gauss rule for the normal weight. The `t` integral only
/// depends on `w₁`, so it is evaluated once per `w₁` node.
pub fn slice_oracle(m: &DVector<f64>, r: &DMatrix<f64>, h: &DVector<f64>, k: usize, u: f64) -> Complex64 {
    let n = m.len();
    assert!((2..=3).contains(&n), "oracle covers N = 2 and N = 3");
    let l = r.clone().cholesky().expect("positive definite").l();
    let g = l.transpose() * h;
    let base = h.dot(m);
    let last = n - 1;
    let g_last = g[last];
    let go: Vec<f64> = (0..last).map(|j| g[j]).collect();
    let lk: Vec<f64> = (0..last).map(|j| l[(k, j)]).collect();
    let go_norm = go.iter().map(|v| v * v).sum::<f64>().sqrt();
    // orthonormal outer basis, first vector along go
    let e1: Vec<f64> = if go_norm > 0.0 {
        go.iter().map(|v| v / go_norm).collect()
    } else {
        let mut e = vec![0.0; last];
        e[0] = 1.0;
        e
    };
    let c1: f64 = lk.iter().zip(&e1).map(|(a, b)| a * b).sum();
    let perp_factor = if last == 2 {
        let e2 = [-e1[1], e1[0]];
        let c2 = lk[0] * e2[0] + lk[1] * e2[1];
        let (nodes, weights) = normal_rule(60);
        nodes.iter().zip(&weights).map(|(w, wt)| Complex64::cis(u * c2 * w) * *wt).sum()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let leg = legendre_rule(20);
    let omega = u * l[(k, last)];
    const W: f64 = 12.0;
    let mut breaks: Vec<f64> = (0..=96).map(|i| -W + 2.0 * W * i as f64 / 96.0).collect();
    if go_norm > 0.0 {
        let centre = -base / go_norm;
        let width = (g_last.abs() / go_norm).max(1e-12);
        breaks.push(centre);
        for j in -6..10 {
            let d = width * 2f64.powi(j);
            breaks.push(centre - d);
            breaks.push(centre + d);
        }
    }
    breaks.retain(|b| b.abs() <= W);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let mut outer = Complex64::new(0.0, 0.0);
    for pair in breaks.windows(2) {
        outer += integrate(pair[0], pair[1], 1, &leg, |w1| {
            let weight = (-0.5 * w1 * w1).exp() / SQRT_2PI;
            Complex64::cis(u * c1 * w1) * inner_signed(base + go_norm * w1, g_last, omega, &leg) * weight
        });
    }
    Complex64::i() * Complex64::cis(u * m[k]) * outer * perp_factor
}

/// `i·∫ φ(z; μ, s²) S(z) e^{iuz} dz`.
pub fn signed_gaussian_ft(mu: f64, s2: f64, u: f64) -> Complex64 {
    let s = s2.sqrt();
    let leg = legendre_rule(20);
    // z = μ + s t, S(z) = S(μ/s + t)
    Complex64::i() * Complex64::cis(u * mu) * inner_signed(mu / s, 1.0, u * s, &leg)
}

/// Largest `|⟨a_i, a_j⟩|` over column pairs, by explicit loops.
pub fn coherence_scan(a: &DMatrix<f64>) -> f64 {
    let mut best = 0.0_f64;
    for i in 0..a.ncols() {
        for j in i + 1..a.ncols() {
            let mut dot = 0.0;
            for r in 0..a.nrows() {
                dot += a[(r, i)] * a[(r, j)];
            }
            best = best.max(dot.abs());
        }
    }
    best
}

/// KKT violation of a replicate, from `Aᵀb` and `x̂` alone.
pub fn kkt_violation(model: &MeasurementModel, rep: &Replicate) -> f64 {
    let tau = model.tau();
    let grad = &rep.atb - model.gram() * &rep.x_hat;
    let mut worst = 0.0_f64;
    for k in 0..model.n() {
        let x = rep.x_hat[k];
        let v = if x != 0.0 { (grad[k] - tau * x.signum()).abs() } else { (grad[k].abs() - tau).max(0.0) };
        worst = worst.max(v);
    }
    worst
}

pub struct Run {
    pub config: ExperimentConfig,
    pub model: MeasurementModel,
    pub replicates: Vec<Replicate>,
    pub excluded: usize,
    pub report: ExperimentReport,
}

pub fn load_config(name: &str) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"));
    ExperimentConfig::from_json(&std::fs::read_to_string(&path).expect("config readable")).expect("config valid")
}

fn execute(name: &str) -> Run {
    let config = load_config(name);
    let model = config.build_model().expect("model");
    let (replicates, excluded) = simulate_replicates(&model, &config).expect("replicates");
    let report = aggregate(&config, &model, replicates.clone(), excluded).expect("report");
    Run { config, model, replicates, excluded, report }
}

macro_rules! cached_run {
    ($fn_name:ident, $file:literal) => {
        pub fn $fn_name() -> &'static Run {
            static CELL: OnceLock<Run> = OnceLock::new();
            CELL.get_or_init(|| execute($file))
        }
    };
}

cached_run!(orthogonal, "orthogonal");
cached_run!(orthogonal_dense, "orthogonal_dense");
cached_run!(orthogonal_mixed, "orthogonal_mixed");
cached_run!(full_rank, "full_rank");
cached_run!(singular, "singular");

/// Prints a verdict line that shows up even when test output is captured.
pub fn verdict(criterion: usize, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "[{tag}] criterion {criterion:>2}: {detail}");
    let _ = out.flush();
}
