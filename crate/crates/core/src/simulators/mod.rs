//! Path generators for every process family, with their analytic means,
//! exponential moments and the constant `a` of the improved Doob bound.

mod continuous;
mod laws;
mod walk;

pub use continuous::{
    brownian_dyadic, simulate_gw_discrete, BranchingSpec, CsbpSpec, GbmSpec, LevyTriple,
    DEFAULT_POPULATION_CAP,
};
pub use laws::{OffspringLaw, StepLaw};
pub use walk::{IncrementGenerator, IncrementRule, RandomWalkSpec, TimeSeriesSpec};

use crate::error::{Error, Result};
use crate::paths::{DiscretePath, GridPath, SeedSpec};

pub fn simulate_random_walk(spec: &RandomWalkSpec, seed: SeedSpec) -> DiscretePath {
    spec.simulate(seed)
}

pub fn phi_pi(spec: &RandomWalkSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    spec.phi_pi()
}

pub fn simulate_levy(
    triple: &LevyTriple,
    horizon: f64,
    n_dyadic: u32,
    seed: SeedSpec,
) -> Result<GridPath> {
    triple.simulate(horizon, n_dyadic, seed)
}

/// `gamma = E e^{Z_1}` together with the characteristic-triple `gamma < 1` flag.
pub fn levy_gamma(triple: &LevyTriple) -> (f64, bool) {
    (triple.gamma(), triple.triple_criterion())
}

pub fn simulate_branching(
    spec: &BranchingSpec,
    horizon: f64,
    n_dyadic: u32,
    seed: SeedSpec,
) -> Result<GridPath> {
    spec.simulate(horizon, n_dyadic, seed)
}

pub fn simulate_gbm(
    spec: &GbmSpec,
    horizon: f64,
    n_dyadic: u32,
    seed: SeedSpec,
) -> Result<GridPath> {
    spec.simulate(horizon, n_dyadic, seed)
}

pub fn simulate_csbp(
    spec: &CsbpSpec,
    horizon: f64,
    n_euler: u32,
    seed: SeedSpec,
) -> Result<GridPath> {
    spec.simulate(horizon, n_euler, seed)
}

/// Horizon and dyadic depth for continuous-time families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub depth: u32,
}

impl TimeGrid {
    pub fn new(horizon: f64, depth: u32) -> Self {
        Self { horizon, depth }
    }
}

/// Closed description of one process instance.
#[derive(Debug, Clone)]
pub enum ProcessSpec {
    RandomWalk(RandomWalkSpec),
    TimeSeries(TimeSeriesSpec),
    GaltonWatson {
        offspring: OffspringLaw,
        generations: usize,
        initial: u64,
    },
    Levy(LevyTriple),
    Branching(BranchingSpec),
    Gbm(GbmSpec),
    Csbp(CsbpSpec),
}

/// Running maximum and terminal value of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    pub max: f64,
    pub terminal: f64,
}

impl PathSummary {
    pub fn of(values: &[f64]) -> Self {
        Self {
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            terminal: values[values.len() - 1],
        }
    }
}

impl ProcessSpec {
    pub fn family(&self) -> &'static str {
        match self {
            Self::RandomWalk(_) => "random_walk",
            Self::TimeSeries(_) => "time_series",
            Self::GaltonWatson { .. } => "galton_watson",
            Self::Levy(_) => "levy",
            Self::Branching(_) => "branching",
            Self::Gbm(_) => "gbm",
            Self::Csbp(_) => "csbp",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            Self::RandomWalk(_) | Self::TimeSeries(_) | Self::GaltonWatson { .. }
        )
    }

    /// Number of steps for discrete families.
    pub fn steps(&self) -> Option<usize> {
        match self {
            Self::RandomWalk(s) => Some(s.len()),
            Self::TimeSeries(s) => Some(s.n_steps()),
            Self::GaltonWatson { generations, .. } => Some(*generations),
            _ => None,
        }
    }

    /// Raw path values; `grid` is ignored by discrete families.
    pub fn sample_values(&self, grid: TimeGrid, seed: SeedSpec, cap: u64) -> Result<Vec<f64>> {
        match self {
            Self::RandomWalk(s) => Ok(s.simulate(seed).into_values()),
            Self::TimeSeries(s) => Ok(s.simulate(seed)?.into_values()),
            Self::GaltonWatson {
                offspring,
                generations,
                initial,
            } => Ok(
                simulate_gw_discrete(offspring, *generations, *initial, seed, cap)?.into_values(),
            ),
            Self::Levy(t) => t.simulate_values(grid.horizon, grid.depth, seed),
            Self::Branching(b) => b.simulate_from(b.initial(), grid.horizon, grid.depth, seed, cap),
            Self::Gbm(g) => Ok(g
                .simulate(grid.horizon, grid.depth, seed)?
                .values()
                .to_vec()),
            Self::Csbp(c) => Ok(c
                .simulate(grid.horizon, grid.depth, seed)?
                .values()
                .to_vec()),
        }
    }

    /// Maximum and terminal value of one path, without keeping the path.
    pub fn summarize(&self, grid: TimeGrid, seed: SeedSpec, cap: u64) -> Result<PathSummary> {
        match self {
            Self::Gbm(g) => {
                let logs = g.log_returns(grid.horizon, grid.depth, seed)?;
                let s = PathSummary::of(&logs);
                let summary = PathSummary {
                    max: g.z() * s.max.exp(),
                    terminal: g.z() * s.terminal.exp(),
                };
                if !(summary.max.is_finite() && summary.terminal > 0.0) {
                    return Err(Error::Overflow("GBM value left (0, inf)".into()));
                }
                Ok(summary)
            }
            _ => Ok(PathSummary::of(&self.sample_values(grid, seed, cap)?)),
        }
    }

    /// Closed-form `E` of the terminal value.
    pub fn mean_terminal(&self, grid: TimeGrid) -> f64 {
        match self {
            Self::RandomWalk(s) => s.mean_terminal(),
            Self::TimeSeries(_) => f64::NAN,
            Self::GaltonWatson {
                offspring,
                generations,
                initial,
            } => *initial as f64 * offspring.mean().powi(*generations as i32),
            Self::Levy(t) => t.mean(grid.horizon),
            Self::Branching(b) => b.mean(grid.horizon),
            Self::Gbm(g) => g.mean(grid.horizon),
            Self::Csbp(c) => c.mean(grid.horizon),
        }
    }
}

/// The constant `a` in `E(X_T | F_t) >= a X_t` for each family's natural
/// observable: `e^S` for walks, time series and Lévy processes, the process
/// itself for branching, GBM and CSBP.
pub fn theorem_constant_a(spec: &ProcessSpec, grid: TimeGrid) -> Result<f64> {
    let t = grid.horizon;
    let a = match spec {
        ProcessSpec::RandomWalk(s) => {
            let (_, pi) = s.phi_pi()?;
            pi.into_iter().fold(f64::INFINITY, f64::min)
        }
        ProcessSpec::TimeSeries(s) => (s.ell() * s.n_steps() as f64).exp(),
        ProcessSpec::GaltonWatson {
            offspring,
            generations,
            ..
        } => {
            // E(Z_N | F_n) = mu^{N-n} Z_n, minimized over n < N
            let mu = offspring.mean();
            match *generations {
                0 => 1.0,
                n if mu < 1.0 => mu.powi(n as i32),
                _ => mu,
            }
        }
        ProcessSpec::Levy(triple) => triple.gamma().powf(t).min(1.0),
        ProcessSpec::Branching(b) => (b.clock_rate() * b.malthusian() * t).exp(),
        ProcessSpec::Gbm(g) => {
            if g.mu() >= 0.0 {
                1.0
            } else {
                (g.mu() * t).exp()
            }
        }
        ProcessSpec::Csbp(c) => (c.beta() * t).exp(),
    };
    if a > 0.0 && !a.is_nan() {
        Ok(a)
    } else {
        Err(Error::NonPositiveA(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn constant_a_examples() {
        let gbm = ProcessSpec::Gbm(GbmSpec::new(-0.5, 1.0, 1.0).unwrap());
        let a = theorem_constant_a(&gbm, TimeGrid::new(2.0, 4)).unwrap();
        assert!((a - (-1f64).exp()).abs() < 1e-15);
        assert!((a - 0.367879).abs() < 1e-6);

        let up = ProcessSpec::Gbm(GbmSpec::new(0.3, 1.0, 1.0).unwrap());
        assert_eq!(theorem_constant_a(&up, TimeGrid::new(2.0, 4)).unwrap(), 1.0);

        let levy = ProcessSpec::Levy(LevyTriple::new(1.0, 0.0, 0.0, None).unwrap());
        assert_eq!(
            theorem_constant_a(&levy, TimeGrid::new(3.0, 4)).unwrap(),
            1.0
        );

        let br = ProcessSpec::Branching(
            BranchingSpec::new(OffspringLaw::new(vec![0.6, 0.0, 0.4]).unwrap(), 1.0, 1).unwrap(),
        );
        let a = theorem_constant_a(&br, TimeGrid::new(1.0, 4)).unwrap();
        assert!((a - (-0.2f64).exp()).abs() < 1e-15);
        assert!((a - 0.818731).abs() < 1e-6);
    }

    #[test]
    fn walk_a_is_min_pi_and_at_most_one() {
        let law = StepLaw::new(vec![1.0, -1.0], vec![0.2, 0.8]).unwrap();
        let spec = ProcessSpec::RandomWalk(RandomWalkSpec::homogeneous(law, 2, 0.0).unwrap());
        let a = theorem_constant_a(&spec, TimeGrid::new(1.0, 0)).unwrap();
        let phi = 0.2 * E + 0.8 / E;
        assert!((a - phi * phi).abs() < 1e-15);
        let up = StepLaw::new(vec![1.0, -1.0], vec![0.9, 0.1]).unwrap();
        let spec = ProcessSpec::RandomWalk(RandomWalkSpec::homogeneous(up, 3, 0.0).unwrap());
        assert_eq!(
            theorem_constant_a(&spec, TimeGrid::new(1.0, 0)).unwrap(),
            1.0
        );
    }

    #[test]
    fn underflowing_a_is_rejected() {
        let spec = ProcessSpec::Csbp(CsbpSpec::new(-1000.0, 1.0, 1.0).unwrap());
        assert!(matches!(
            theorem_constant_a(&spec, TimeGrid::new(10.0, 2)),
            Err(Error::NonPositiveA(_))
        ));
    }

    #[test]
    fn gbm_summary_matches_path() {
        let g = GbmSpec::new(0.1, 0.4, 2.0).unwrap();
        let spec = ProcessSpec::Gbm(g);
        let grid = TimeGrid::new(1.0, 6);
        let seed = SeedSpec::new(4, 4);
        let path = g.simulate(1.0, 6, seed).unwrap();
        let s = spec.summarize(grid, seed, 0).unwrap();
        assert_eq!(s.max, path.max());
        assert_eq!(s.terminal, path.last());
    }
}
