//! `lassodist` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime or I/O failure, 2 invalid configuration or
//! parameters, 3 too many replicates excluded, 4 a hard invariant failed,
//! 5 a strict acceptance check failed.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lassodist::harness::{run_experiment_with_threads, write_outputs, GridPoint};
use lassodist::linmodel::{bernoulli_matrix, rip_constant, sylvester_hadamard};
use lassodist::{Error, ExperimentConfig, ExperimentReport, MarginalLaw};
use nalgebra::DMatrix;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_EXCLUSION: u8 = 3;
const EXIT_INVARIANT: u8 = 4;
const EXIT_STRICT: u8 = 5;

/// Output directory used when `--out` is not given.
const OUT_ENV: &str = "LASSODIST_OUT";

#[derive(Parser)]
#[command(name = "lassodist", version, about = "Finite-sample LASSO distribution experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo experiment and write the report and CSV files.
    Simulate(SimulateArgs),
    /// Run an experiment and print the characteristic-function gap table.
    CfCheck(RunArgs),
    /// Print restricted isometry constants δ_1..δ_K.
    Rip(RipArgs),
    /// Tabulate a marginal law as CSV.
    Pdf(PdfArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Number of replicates.
    #[arg(long = "L")]
    l: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Worker threads (default: hardware parallelism).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Output directory (default: $LASSODIST_OUT, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write samples_<k>.csv.
    #[arg(long)]
    emit_samples: bool,
    /// Fail unless every acceptance check passes.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct RipArgs {
    /// Scaled Sylvester Hadamard matrix of order M.
    #[arg(long, value_name = "M", conflicts_with = "bernoulli", required_unless_present = "bernoulli")]
    hadamard: Option<usize>,
    /// Random ±1 matrix with M rows and N columns.
    #[arg(long, num_args = 2, value_names = ["M", "N"])]
    bernoulli: Option<Vec<usize>>,
    /// Seed of the Bernoulli matrix.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest support size.
    #[arg(long = "K")]
    k: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum LawArg {
    Orthogonal,
    Transformed,
    Ml,
}

#[derive(Args)]
struct PdfArgs {
    #[arg(long, value_enum)]
    law: LawArg,
    /// x_k, or w_kᵀx for the transformed law.
    #[arg(long, allow_hyphen_values = true)]
    location: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    wkk: f64,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true, default_values_t = [-10.0, 10.0])]
    range: Vec<f64>,
    #[arg(long, default_value_t = 2001)]
    points: usize,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidParameter(_) | Error::InvalidDimension(_) | Error::InvalidLaw(_) => {
                EXIT_CONFIG
            }
            Error::ExclusionBudget { .. } => EXIT_EXCLUSION,
            _ => EXIT_RUNTIME,
        };
        Failure { code, message: e.to_string() }
    }
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::CfCheck(args) => cf_check(args),
        Command::Rip(args) => rip(args),
        Command::Pdf(args) => pdf(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

/// Loads the config, applies flag overrides and runs the experiment.
fn run(args: &RunArgs) -> Result<ExperimentReport, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| fail(EXIT_CONFIG, format!("cannot read {}: {e}", args.config.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    let mut overrides = serde_json::Map::new();
    if let Some(l) = args.l {
        config.replicates = l;
        overrides.insert("L".into(), l.into());
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
        overrides.insert("seed".into(), seed.into());
    }
    if let Some(tau) = args.tau {
        config.tau = tau;
        overrides.insert("tau".into(), tau.into());
    }
    if let Some(sigma) = args.sigma {
        config.sigma = sigma;
        overrides.insert("sigma".into(), sigma.into());
    }
    config.validate()?;
    if args.threads == Some(0) {
        return Err(fail(EXIT_CONFIG, "--threads must be at least 1"));
    }
    let mut report = run_experiment_with_threads(&config, args.threads)?;
    report.overrides = overrides.into_iter().collect();
    Ok(report)
}

fn simulate(args: SimulateArgs) -> Result<(), Failure> {
    let report = run(&args.run)?;
    let out = args.out.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    write_outputs(&report, &out, args.emit_samples)?;
    print!("{}", summary(&report));
    println!("wrote {}", out.display());
    if !report.checks.hard_ok {
        return Err(fail(
            EXIT_INVARIANT,
            format!("KKT residual {:.3e} above {:.0e}", report.solver.max_kkt_residual, report.solver.kkt_budget),
        ));
    }
    if args.strict && !report.checks.strict_ok {
        return Err(fail(EXIT_STRICT, "strict acceptance checks failed"));
    }
    Ok(())
}

fn summary(r: &ExperimentReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "replicates: {} included, {} excluded (budget {})",
        r.replicates.included, r.replicates.excluded, r.replicates.exclusion_budget
    );
    let _ = writeln!(
        s,
        "solver: max KKT residual {:.3e}, iterations p50 {} max {}",
        r.solver.max_kkt_residual, r.solver.iterations.p50, r.solver.iterations.max
    );
    let _ = writeln!(s, "component  nonzero  zero_frac  atom       ks");
    for c in &r.components {
        let ks = match c.ks.distance() {
            Some(d) => format!("{d:.4}"),
            None => "insufficient".into(),
        };
        let _ = writeln!(
            s,
            "{:>9}  {:>7}  {:>9.4}  {:>9.3e}  {}",
            c.component, c.nonzero, c.zero_fraction, c.point_mass, ks
        );
    }
    let _ = writeln!(
        s,
        "cf grid: max exact gap {:.3e}, max S(0)=0 gap {:.3e}, {}/{} within 4/sqrt(L)",
        r.checks.max_gap_exact, r.checks.max_gap_zero, r.checks.mc_within, r.checks.mc_points
    );
    s
}

fn cf_check(args: RunArgs) -> Result<(), Failure> {
    let report = run(&args)?;
    println!("point   |u|        gap_exact   gap_zero    gap_mc");
    for row in &report.cf_grid {
        let point = match row.point {
            GridPoint::Random => "random",
            GridPoint::Zero => "zero",
            GridPoint::Axis => "axis",
            GridPoint::User => "user",
        };
        let norm = row.u.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("{point:<7} {norm:<9.4}  {:.3e}   {:.3e}   {:.3e}", row.gap_exact, row.gap_zero, row.gap_mc);
    }
    println!(
        "max exact gap {:.3e}; {}/{} Monte-Carlo gaps within {:.4}",
        report.checks.max_gap_exact, report.checks.mc_within, report.checks.mc_points, report.checks.mc_bound
    );
    if !report.checks.hard_ok {
        return Err(fail(EXIT_INVARIANT, "KKT residual budget exceeded"));
    }
    if !report.checks.exact_identity_ok {
        return Err(fail(EXIT_INVARIANT, "subgradient form does not reproduce the empirical cf of A^T b"));
    }
    Ok(())
}

fn rip(args: RipArgs) -> Result<(), Failure> {
    let a: DMatrix<f64> = match (&args.hadamard, &args.bernoulli) {
        (Some(m), _) => sylvester_hadamard(*m)? / (*m as f64).sqrt(),
        (None, Some(mn)) => bernoulli_matrix(mn[0], mn[1], args.seed)?,
        (None, None) => return Err(fail(EXIT_CONFIG, "give --hadamard M or --bernoulli M N")),
    };
    if args.k == 0 || args.k > a.ncols() {
        return Err(fail(EXIT_CONFIG, format!("--K must be in 1..={}", a.ncols())));
    }
    println!("K,delta");
    for k in 1..=args.k {
        println!("{k},{:.16e}", rip_constant(&a, k)?);
    }
    Ok(())
}

fn pdf(args: PdfArgs) -> Result<(), Failure> {
    let law = match args.law {
        LawArg::Orthogonal => MarginalLaw::orthogonal(args.location, args.sigma, args.tau),
        LawArg::Transformed => MarginalLaw::transformed(args.location, args.sigma, args.wkk, args.tau),
        LawArg::Ml => MarginalLaw::ml(args.location, args.sigma * args.sigma),
    }?;
    let (lo, hi) = (args.range[0], args.range[1]);
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(fail(EXIT_CONFIG, format!("--range needs LO < HI, got {lo} {hi}")));
    }
    if args.points < 2 {
        return Err(fail(EXIT_CONFIG, "--points must be at least 2"));
    }
    let mut grid: Vec<f64> =
        (0..args.points).map(|i| lo + (hi - lo) * i as f64 / (args.points - 1) as f64).filter(|v| *v != 0.0).collect();
    // the density jumps at zero: emit both one-sided limits there
    if lo <= 0.0 && hi >= 0.0 {
        let at = grid.partition_point(|v| *v < 0.0);
        grid.splice(at..at, [-f64::MIN_POSITIVE, f64::MIN_POSITIVE]);
    }
    let mut s = String::new();
    let _ = writeln!(s, "# atom = {:.16e}", law.point_mass_zero());
    s.push_str("v,density\n");
    for v in grid {
        let d = law.pdf(v)?;
        let shown = if v.abs() == f64::MIN_POSITIVE { 0.0 } else { v };
        let _ = writeln!(s, "{shown:.16e},{d:.16e}");
    }
    match args.out {
        Some(path) => fs::write(&path, s).map_err(|e| fail(EXIT_RUNTIME, format!("{}: {e}", path.display())))?,
        None => print!("{s}"),
    }
    Ok(())
}
