//! Monte Carlo estimation of both sides of the inequalities, CI-aware
//! verdicts, and the almost-sure convergence checker.
//!
//! Path `i` of a batch always draws from stream `i` of the batch seed, and
//! reductions run sequentially in path order, so results do not depend on
//! the number of worker threads.

mod convergence;
mod stats;

pub use convergence::{
    as_convergence_check, Applicability, ConvergenceConfig, ConvergenceReport, WindowStat,
};
pub use stats::{verify_inequality, Estimate, McEstimate, Verdict, VerdictKind, EXACT_TOL, Z95};

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::paths::SeedSpec;
use crate::simulators::{PathSummary, ProcessSpec, TimeGrid, DEFAULT_POPULATION_CAP};

/// Batch settings shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRunner {
    pub n_paths: usize,
    pub seed: u64,
    pub jobs: usize,
    pub population_cap: u64,
}

impl McRunner {
    pub fn new(n_paths: usize, seed: u64) -> Self {
        Self {
            n_paths,
            seed,
            jobs: 1,
            population_cap: DEFAULT_POPULATION_CAP,
        }
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs.max(1);
        self
    }

    pub fn with_population_cap(mut self, cap: u64) -> Self {
        self.population_cap = cap;
        self
    }

    /// Runs `f` once per path with that path's seed; output is in path order.
    /// On failure, the error of the lowest-indexed failing path is returned.
    pub fn map<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(SeedSpec) -> Result<T> + Sync + Send,
    {
        let seed_of = |i: usize| SeedSpec::new(self.seed, i as u64);
        let results: Vec<Result<T>> = if self.jobs <= 1 {
            (0..self.n_paths).map(|i| f(seed_of(i))).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(self.jobs)
                .build()
                .map_err(|e| invalid(format!("thread pool: {e}")))?;
            pool.install(|| {
                (0..self.n_paths)
                    .into_par_iter()
                    .map(|i| f(seed_of(i)))
                    .collect()
            })
        };
        results.into_iter().collect()
    }

    pub fn summaries(&self, spec: &ProcessSpec, grid: TimeGrid) -> Result<Vec<PathSummary>> {
        self.map(|seed| spec.summarize(grid, seed, self.population_cap))
    }
}

fn check_paths(runner: &McRunner) -> Result<()> {
    if runner.n_paths < 100 {
        return Err(invalid(format!(
            "at least 100 paths are required, got {}",
            runner.n_paths
        )));
    }
    Ok(())
}

/// `P(max >= alpha)` over path summaries, with a Wilson interval.
pub fn sup_tail(summaries: &[PathSummary], alpha: f64) -> McEstimate {
    let hits = summaries.iter().filter(|s| s.max >= alpha).count();
    McEstimate::proportion(hits, summaries.len())
}

/// `E[g(terminal); max >= alpha]`.
pub fn restricted_terminal(
    summaries: &[PathSummary],
    alpha: f64,
    g: impl Fn(f64) -> f64,
) -> McEstimate {
    let samples: Vec<f64> = summaries
        .iter()
        .map(|s| if s.max >= alpha { g(s.terminal) } else { 0.0 })
        .collect();
    McEstimate::from_samples(&samples)
}

/// `E g(terminal)`.
pub fn terminal_mean(summaries: &[PathSummary], g: impl Fn(f64) -> f64) -> McEstimate {
    let samples: Vec<f64> = summaries.iter().map(|s| g(s.terminal)).collect();
    McEstimate::from_samples(&samples)
}

/// `(||g(max)||_p, ||g(terminal)||_p)` with delta-method standard errors.
pub fn lp_norms(
    summaries: &[PathSummary],
    p: f64,
    g: impl Fn(f64) -> f64,
) -> (McEstimate, McEstimate) {
    let norm = |samples: Vec<f64>| {
        let moment = McEstimate::from_samples(&samples);
        let value = moment.mean.powf(1.0 / p);
        let stderr = if moment.mean > 0.0 {
            value / (p * moment.mean) * moment.stderr
        } else {
            0.0
        };
        McEstimate {
            mean: value,
            stderr,
            n: moment.n,
            ci95: (
                moment.ci95.0.max(0.0).powf(1.0 / p),
                moment.ci95.1.max(0.0).powf(1.0 / p),
            ),
        }
    };
    let maxima = summaries.iter().map(|s| g(s.max).powf(p)).collect();
    let terminals = summaries.iter().map(|s| g(s.terminal).powf(p)).collect();
    (norm(maxima), norm(terminals))
}

/// Left side of the continuous maximal inequality: the fraction of paths
/// whose grid maximum reaches `alpha`. A finite grid can only miss
/// excursions, so this underestimates the true supremum probability.
pub fn estimate_sup_tail(
    spec: &ProcessSpec,
    grid: TimeGrid,
    alpha: f64,
    runner: &McRunner,
) -> Result<McEstimate> {
    check_paths(runner)?;
    Ok(sup_tail(&runner.summaries(spec, grid)?, alpha))
}

/// Right side: `E[Z_T; sup Z >= alpha]`. Pass `f64::NEG_INFINITY` to
/// estimate the plain terminal mean.
pub fn estimate_restricted_terminal(
    spec: &ProcessSpec,
    grid: TimeGrid,
    alpha: f64,
    runner: &McRunner,
) -> Result<McEstimate> {
    check_paths(runner)?;
    Ok(restricted_terminal(
        &runner.summaries(spec, grid)?,
        alpha,
        |x| x,
    ))
}

pub fn estimate_terminal_mean(
    spec: &ProcessSpec,
    grid: TimeGrid,
    runner: &McRunner,
) -> Result<McEstimate> {
    check_paths(runner)?;
    Ok(terminal_mean(&runner.summaries(spec, grid)?, |x| x))
}
