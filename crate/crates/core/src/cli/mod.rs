//! Command-line batch runner.
//!
//! Exit codes: 0 success, 1 some row VIOLATED, 2 bad config or flags,
//! 3 runtime failure (overflow, too many paths, I/O).

pub mod config;
pub mod pipeline;
pub mod report;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::achieving::{
    certify_a, certify_a_exact, estimate_delta, hyers_ulam_decompose, reconstruction_error,
    uniform_weights, AchievingMode, BinningConfig, GridFunction,
};
use crate::bounds::{self, TheoremId};
use crate::error::Error;
use crate::fmt_float;
use crate::montecarlo::{as_convergence_check, ConvergenceConfig, McRunner};
use crate::paths::{dyadic_grid, DiscretePath};
use crate::simulators::ProcessSpec;
use config::{Instance, Overrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "maxineq",
    version,
    about = "Check maximal inequalities on simulated and enumerated processes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every instance of a config and write the CSV report and JSON summary.
    #[command(visible_alias = "run")]
    Verify(RunArgs),
    /// Write raw sample paths of one instance as CSV.
    Simulate(SimulateArgs),
    /// Evaluate one right-hand side from explicit inputs.
    Bound(BoundArgs),
    /// Certify an achieving constant for one instance or a CSV ensemble.
    CertifyA(CertifyArgs),
    /// Split a tabulated function into convex part plus bounded remainder.
    Decompose(DecomposeArgs),
    /// Window-by-window almost-sure convergence check for one instance.
    Converge(ConvergeArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's global seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    #[arg(long)]
    pub grid_depth: Option<u32>,
    #[arg(long, env = "MAXINEQ_JOBS", default_value_t = 1)]
    pub jobs: usize,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            paths: self.paths,
            grid_depth: self.grid_depth,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    /// Output directory; defaults to the config's `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub instance: String,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub theorem: String,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Achieving constant, for A, B and LP.
    #[arg(long)]
    pub a: Option<f64>,
    /// Restricted terminal expectation `E[X_T; sup >= alpha]` (or its
    /// exponential analogue).
    #[arg(long)]
    pub restricted: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub ell: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub clock_rate: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub z: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// `||X_N||_p` for LP.
    #[arg(long)]
    pub norm: Option<f64>,
    /// Comma-separated `pi_0..pi_N` for COR_rw.
    #[arg(long, value_delimiter = ',')]
    pub pi: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long, required_unless_present = "input")]
    pub config: Option<PathBuf>,
    #[arg(long, requires = "config")]
    pub instance: Option<String>,
    /// CSV ensemble, one path per row, used instead of a config instance.
    #[arg(long, conflicts_with = "config")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "uniform")]
    pub mode: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub paths: Option<usize>,
    /// Dyadic depth of the skeleton used for continuous families.
    #[arg(long, default_value_t = 3)]
    pub grid_depth: u32,
    #[arg(long, env = "MAXINEQ_JOBS", default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    /// Two-column CSV `x,f`.
    #[arg(long)]
    pub input: PathBuf,
    /// Directory receiving `g.csv` and `h.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of convexity weights used for the delta estimate.
    #[arg(long, default_value_t = 11)]
    pub weights: usize,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub instance: String,
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub window: f64,
    #[arg(long, default_value_t = 10)]
    pub windows: usize,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            message: message.into(),
        }
    }
}

/// Numerical trouble is a runtime failure; anything else traces back to
/// the inputs.
fn classify(e: Error) -> Failure {
    match e {
        Error::Overflow(_)
        | Error::TooManyPaths { .. }
        | Error::PopulationCap { .. }
        | Error::CapTooSmall { .. }
        | Error::NonFinite { .. }
        | Error::JumpFloor { .. }
        | Error::InsufficientData { .. } => Failure::runtime(e.to_string()),
        _ => Failure::config(e.to_string()),
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::runtime(format!("{}: {e}", path.display()))
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::Verify(args) => run(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Bound(args) => bound(&args),
        Command::CertifyA(args) => certify(&args),
        Command::Decompose(args) => decompose(&args),
        Command::Converge(args) => converge(&args),
    }
}

fn load_instances(common: &Common) -> Result<(config::ExperimentConfig, Vec<Instance>), Failure> {
    let cfg = config::load(&common.config).map_err(Failure::config)?;
    let instances = config::validate(&cfg, common.overrides()).map_err(Failure::config)?;
    Ok((cfg, instances))
}

fn find_instance(instances: Vec<Instance>, id: &str) -> Result<Instance, Failure> {
    instances
        .into_iter()
        .find(|i| i.id == id)
        .ok_or_else(|| Failure::config(format!("no instance with id {id:?}")))
}

/// Writes to `path`, or to stdout when absent.
fn with_output(
    path: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_failure(p, e))?;
            let mut w = BufWriter::new(file);
            body(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| io_failure(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock).map_err(|e| Failure::runtime(format!("stdout: {e}")))
        }
    }
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::runtime(e.to_string()))?;
    with_output(path, |w| writeln!(w, "{text}"))
}

pub fn run(args: &RunArgs) -> Result<i32, Failure> {
    let (cfg, instances) = load_instances(&args.common)?;
    let mut rows = Vec::new();
    for inst in &instances {
        let got = pipeline::evaluate(inst, args.common.jobs)
            .map_err(|e| Failure::runtime(format!("instance {:?}: {e}", inst.id)))?;
        rows.extend(got);
    }
    let code = if rows.iter().any(|r| r.is_violated()) {
        EXIT_VIOLATED
    } else {
        EXIT_OK
    };
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    let csv_path = dir.join(&cfg.output.csv);
    let file = File::create(&csv_path).map_err(|e| io_failure(&csv_path, e))?;
    report::write_csv(&rows, BufWriter::new(file)).map_err(|e| io_failure(&csv_path, e))?;
    let json_path = dir.join(&cfg.output.json);
    write_json(
        Some(&json_path),
        &report::summarize(&instances, &rows, code),
    )?;
    eprintln!(
        "{} rows, {} violated; report in {}",
        rows.len(),
        rows.iter().filter(|r| r.is_violated()).count(),
        csv_path.display()
    );
    Ok(code)
}

fn simulate(args: &SimulateArgs) -> Result<i32, Failure> {
    // the path count here is the number of paths to print, not an estimator size
    let cfg = config::load(&args.common.config).map_err(Failure::config)?;
    let ov = Overrides {
        paths: None,
        ..args.common.overrides()
    };
    let instances = config::validate(&cfg, ov).map_err(Failure::config)?;
    let inst = find_instance(instances, &args.instance)?;
    let n_paths = args.common.paths.unwrap_or(10);
    let runner = McRunner::new(n_paths, inst.seed)
        .with_jobs(args.common.jobs)
        .with_population_cap(inst.population_cap);
    let paths = runner
        .map(|seed| {
            inst.spec
                .sample_values(inst.grid, seed, inst.population_cap)
        })
        .map_err(classify)?;
    let times: Vec<f64> = match inst.spec.steps() {
        Some(n) => (0..=n).map(|k| k as f64).collect(),
        None => dyadic_grid(inst.grid.horizon, inst.grid.depth),
    };
    with_output(args.out.as_deref(), |w| {
        writeln!(w, "path,step,time,value")?;
        for (i, values) in paths.iter().enumerate() {
            for (k, (t, v)) in times.iter().zip(values).enumerate() {
                writeln!(w, "{i},{k},{},{}", fmt_float(*t), fmt_float(*v))?;
            }
        }
        Ok(())
    })?;
    Ok(EXIT_OK)
}

fn need<T: Copy>(v: Option<T>, flag: &str, theorem: TheoremId) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::config(format!("{theorem} needs --{flag}")))
}

/// The right-hand side named by `--theorem`, from explicit inputs.
pub fn bound_value(args: &BoundArgs) -> Result<f64, Failure> {
    use TheoremId::*;
    let theorem: TheoremId = args.theorem.parse().map_err(classify)?;
    let alpha = args.alpha;
    let restricted = || need(args.restricted, "restricted", theorem);
    let value = match theorem {
        A | B => bounds::improved_doob_rhs(alpha, need(args.a, "a", theorem)?, restricted()?),
        ClassicalDoob => bounds::improved_doob_rhs(alpha, 1.0, restricted()?),
        TimeSeries => bounds::time_series_rhs(
            alpha,
            need(args.ell, "ell", theorem)?,
            need(args.n, "n", theorem)?,
            restricted()?,
        ),
        Slope => bounds::slope_rhs(
            alpha,
            need(args.ell, "ell", theorem)?,
            need(args.horizon, "horizon", theorem)?,
            restricted()?,
        ),
        IndepIncrements => {
            bounds::indep_incr_rhs(alpha, need(args.a, "a", theorem)?, restricted()?)
        }
        RandomWalk => {
            if args.pi.is_empty() {
                return Err(Failure::config("COR_rw needs --pi"));
            }
            bounds::rw_corollary_rhs(alpha, &args.pi, restricted()?)
        }
        Levy | LevyMax => {
            let gamma = need(args.gamma, "gamma", theorem)?;
            let horizon = need(args.horizon, "horizon", theorem)?;
            if theorem == Levy {
                bounds::levy_rhs(alpha, gamma, horizon, restricted()?).map(|b| b.bound1)
            } else {
                bounds::levy_rhs(alpha, gamma, horizon, 0.0).map(|b| b.bound2)
            }
        }
        Branching => bounds::branching_rhs(
            alpha,
            need(args.clock_rate, "clock-rate", theorem)?,
            need(args.mu, "mu", theorem)?,
            need(args.horizon, "horizon", theorem)?,
            restricted()?,
        )
        .map(|b| b.rhs),
        Csbp => bounds::csbp_rhs(
            alpha,
            need(args.beta, "beta", theorem)?,
            need(args.horizon, "horizon", theorem)?,
            restricted()?,
        ),
        Gbm => bounds::gbm_sup_bound(need(args.z, "z", theorem)?, alpha),
        Lp => bounds::lp_bound(
            need(args.p, "p", theorem)?,
            need(args.a, "a", theorem)?,
            need(args.norm, "norm", theorem)?,
        ),
    };
    value.map_err(classify)
}

fn bound(args: &BoundArgs) -> Result<i32, Failure> {
    println!("{}", bound_value(args)?);
    Ok(EXIT_OK)
}

fn read_ensemble(path: &Path) -> Result<Vec<DiscretePath>, Failure> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| io_failure(path, e))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| io_failure(path, e))?;
        let values = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::config(format!("{} line {}: {e}", path.display(), line + 1)))?;
        out.push(DiscretePath::new(values).map_err(classify)?);
    }
    Ok(out)
}

/// `e^S` for log-scale families, the process itself otherwise.
fn observable(spec: &ProcessSpec, v: f64) -> f64 {
    match spec {
        ProcessSpec::RandomWalk(_) | ProcessSpec::TimeSeries(_) | ProcessSpec::Levy(_) => v.exp(),
        _ => v,
    }
}

fn certify(args: &CertifyArgs) -> Result<i32, Failure> {
    let mode = AchievingMode::parse(&args.mode).map_err(classify)?;
    let cert = if let Some(input) = &args.input {
        certify_a(&read_ensemble(input)?, mode, BinningConfig::default()).map_err(classify)?
    } else {
        let common = Common {
            config: args.config.clone().expect("clap enforces --config"),
            seed: args.seed,
            paths: args.paths,
            grid_depth: Some(args.grid_depth),
            jobs: args.jobs,
        };
        let id = args
            .instance
            .as_deref()
            .ok_or_else(|| Failure::config("--instance is required with --config"))?;
        let (_, instances) = load_instances(&common)?;
        let inst = find_instance(instances, id)?;
        match &inst.spec {
            ProcessSpec::RandomWalk(w) if w.path_count() <= inst.enumeration_cap as f64 => {
                certify_a_exact(w, f64::exp, mode, inst.enumeration_cap).map_err(classify)?
            }
            spec => {
                let ensemble = McRunner::new(inst.paths, inst.seed)
                    .with_jobs(args.jobs)
                    .with_population_cap(inst.population_cap)
                    .map(|seed| {
                        let values = spec.sample_values(inst.grid, seed, inst.population_cap)?;
                        DiscretePath::new(values.into_iter().map(|v| observable(spec, v)).collect())
                    })
                    .map_err(classify)?;
                certify_a(&ensemble, mode, BinningConfig::default()).map_err(classify)?
            }
        }
    };
    write_json(args.out.as_deref(), &cert)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct DecomposeSummary {
    delta_used: f64,
    delta_estimate: f64,
    quantization: f64,
    sup_abs_h: f64,
    reconstruction_error_ulps: f64,
}

fn decompose(args: &DecomposeArgs) -> Result<i32, Failure> {
    let file = File::open(&args.input).map_err(|e| io_failure(&args.input, e))?;
    let f = GridFunction::read_csv(file).map_err(classify)?;
    let d = hyers_ulam_decompose(&f);
    let est = estimate_delta(&f, &uniform_weights(args.weights)).map_err(classify)?;
    fs::create_dir_all(&args.out).map_err(|e| io_failure(&args.out, e))?;
    for (name, g) in [("g.csv", &d.g), ("h.csv", &d.h)] {
        let path = args.out.join(name);
        let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
        g.write_csv(BufWriter::new(file))
            .map_err(|e| io_failure(&path, e))?;
    }
    write_json(
        None,
        &DecomposeSummary {
            delta_used: d.delta_used,
            delta_estimate: est.delta,
            quantization: est.quantization,
            sup_abs_h: d.h.ys().iter().map(|h| h.abs()).fold(0.0, f64::max),
            reconstruction_error_ulps: reconstruction_error(&d, &f),
        },
    )?;
    Ok(EXIT_OK)
}

fn converge(args: &ConvergeArgs) -> Result<i32, Failure> {
    let (_, instances) = load_instances(&args.common)?;
    let inst = find_instance(instances, &args.instance)?;
    let mut cfg = ConvergenceConfig::new(
        args.lambda,
        args.window,
        args.windows,
        inst.paths,
        inst.seed,
    );
    cfg.epsilon = args.epsilon;
    cfg.jobs = args.common.jobs;
    cfg.population_cap = inst.population_cap;
    if let Some(depth) = args.common.grid_depth {
        cfg.depth = depth;
    }
    let report = as_convergence_check(&inst.spec, &cfg).map_err(classify)?;
    write_json(args.out.as_deref(), &report)?;
    Ok(EXIT_OK)
}
