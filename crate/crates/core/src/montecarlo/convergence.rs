//! Window-by-window check of the almost-sure convergence criterion for
//! `X_t = e^{-lambda t} Y_t`, where `Y` is a Markov family with known mean
//! decay `E(Y_t | Y_s) = e^{kappa (t - s)} Y_s`.

use serde::Serialize;

use super::{McEstimate, McRunner};
use crate::achieving::{certify_a, AchievingCertificate, AchievingMode, BinningConfig};
use crate::error::{invalid, Error, Result};
use crate::paths::{DiscretePath, SeedSpec};
use crate::simulators::ProcessSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceConfig {
    /// Exponential down-scaling rate `lambda` (0 checks the process itself).
    pub lambda_rate: f64,
    /// Window length `T`.
    pub window: f64,
    pub n_windows: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub epsilon: f64,
    /// Dyadic depth inside each window.
    pub depth: u32,
    pub jobs: usize,
    pub population_cap: u64,
}

impl ConvergenceConfig {
    pub fn new(lambda_rate: f64, window: f64, n_windows: usize, n_paths: usize, seed: u64) -> Self {
        Self {
            lambda_rate,
            window,
            n_windows,
            n_paths,
            seed,
            epsilon: 0.01,
            depth: 6,
            jobs: 1,
            population_cap: crate::simulators::DEFAULT_POPULATION_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Applicability {
    #[serde(rename = "APPLICABLE")]
    Applicable,
    /// The expectations at window starts are not summable.
    #[serde(rename = "NOT_APPLICABLE")]
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowStat {
    /// Window `[kT, (k+1)T]`.
    pub k: usize,
    /// `P(sup over the window > epsilon)`.
    pub exceedance: McEstimate,
    /// `(a epsilon)^{-1} E X_{(k+1)T}`.
    pub bound_term: f64,
    /// Running sums over windows `1..=k`.
    pub empirical_partial_sum: f64,
    pub empirical_partial_sum_ci_hi: f64,
    pub bound_partial_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub family: String,
    pub applicability: Applicability,
    /// `kappa - lambda`, the exponential rate of `E X_t`.
    pub mean_rate: f64,
    /// `e^{(kappa - lambda) T}`.
    pub ratio: f64,
    /// `min{1, ratio}`, valid for condition 1 by the Markov mean identity.
    pub analytic_a: f64,
    /// `sum_{n >= 1} E X_{nT}`.
    pub series_sum: f64,
    pub certified: Option<AchievingCertificate>,
    pub windows: Vec<WindowStat>,
    /// Least-squares slope of `ln` exceedance against `k` over positive entries.
    pub decay_slope: f64,
    pub decays: bool,
    /// Every empirical partial sum's lower CI bound stays below the bound's partial sum.
    pub partial_sums_bounded: bool,
}

/// `(kappa, x0)` for families with a known mean decay.
fn mean_decay(spec: &ProcessSpec) -> Result<(f64, f64)> {
    match spec {
        ProcessSpec::Branching(b) => Ok((b.malthusian() * b.clock_rate(), b.initial() as f64)),
        ProcessSpec::Gbm(g) => Ok((g.mu(), g.z())),
        ProcessSpec::Csbp(c) => Ok((c.beta(), c.x0())),
        other => Err(Error::UnknownMeanDecay(other.family().to_string())),
    }
}

/// Unscaled values of one window started from `state`.
fn window_values(
    spec: &ProcessSpec,
    state: f64,
    horizon: f64,
    depth: u32,
    seed: SeedSpec,
    cap: u64,
) -> Result<Vec<f64>> {
    let n = (1usize << depth) + 1;
    if state <= 0.0 {
        return Ok(vec![0.0; n]);
    }
    match spec {
        ProcessSpec::Branching(b) => b.simulate_from(state as u64, horizon, depth, seed, cap),
        ProcessSpec::Gbm(g) => Ok(g
            .with_start(state)?
            .simulate(horizon, depth, seed)?
            .values()
            .to_vec()),
        ProcessSpec::Csbp(c) => Ok(c
            .with_start(state)?
            .simulate(horizon, depth, seed)?
            .values()
            .to_vec()),
        other => Err(Error::UnknownMeanDecay(other.family().to_string())),
    }
}

fn slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Per path: the window maxima of `X` for windows `1..=W`, and the scaled
/// window values on a coarse sub-grid (for certifying `a`).
type PathWindows = (Vec<f64>, Vec<Vec<f64>>);

pub fn as_convergence_check(
    spec: &ProcessSpec,
    cfg: &ConvergenceConfig,
) -> Result<ConvergenceReport> {
    let (kappa, x0) = mean_decay(spec)?;
    if !(cfg.window > 0.0 && cfg.window.is_finite()) {
        return Err(invalid(format!(
            "window length must be positive, got {}",
            cfg.window
        )));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(invalid("epsilon must be positive"));
    }
    if cfg.n_windows == 0 {
        return Err(invalid("need at least one window"));
    }
    let t = cfg.window;
    let mean_rate = kappa - cfg.lambda_rate;
    let ratio = (mean_rate * t).exp();
    let analytic_a = ratio.min(1.0);
    let family = spec.family().to_string();
    if ratio >= 1.0 {
        return Ok(ConvergenceReport {
            family,
            applicability: Applicability::NotApplicable,
            mean_rate,
            ratio,
            analytic_a,
            series_sum: f64::INFINITY,
            certified: None,
            windows: Vec::new(),
            decay_slope: f64::NAN,
            decays: false,
            partial_sums_bounded: false,
        });
    }
    let series_sum = x0 * ratio / (1.0 - ratio);

    let w = cfg.n_windows;
    let sub = cfg.depth.min(3);
    let stride = 1usize << (cfg.depth - sub);
    let runner = McRunner::new(cfg.n_paths, cfg.seed).with_jobs(cfg.jobs);
    let per_path: Vec<PathWindows> = runner.map(|seed| {
        let i = seed.stream_index;
        let mut state = x0;
        let mut maxima = Vec::with_capacity(w);
        let mut coarse = Vec::with_capacity(w);
        for k in 0..=w {
            let stream = SeedSpec::new(cfg.seed, i * (w as u64 + 1) + k as u64);
            let values = window_values(spec, state, t, cfg.depth, stream, cfg.population_cap)?;
            state = values[values.len() - 1];
            if k == 0 {
                continue;
            }
            let scaled: Vec<f64> = values
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    v * (-cfg.lambda_rate
                        * (k as f64 * t + j as f64 * t / (values.len() - 1) as f64))
                        .exp()
                })
                .collect();
            maxima.push(scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            coarse.push(scaled.iter().step_by(stride).copied().collect());
        }
        Ok((maxima, coarse))
    })?;

    let bound_scale = 1.0 / (analytic_a * cfg.epsilon);
    let mut windows = Vec::with_capacity(w);
    let mut emp_sum = 0.0;
    let mut emp_var = 0.0;
    let mut bound_sum = 0.0;
    for k in 1..=w {
        let hits = per_path
            .iter()
            .filter(|(m, _)| m[k - 1] > cfg.epsilon)
            .count();
        let exceedance = McEstimate::proportion(hits, per_path.len());
        let bound_term = bound_scale * x0 * (mean_rate * (k + 1) as f64 * t).exp();
        emp_sum += exceedance.mean;
        emp_var += exceedance.stderr * exceedance.stderr;
        bound_sum += bound_term;
        windows.push(WindowStat {
            k,
            exceedance,
            bound_term,
            empirical_partial_sum: emp_sum,
            empirical_partial_sum_ci_hi: emp_sum + super::Z95 * emp_var.sqrt(),
            bound_partial_sum: bound_sum,
        });
    }
    let partial_sums_bounded = windows.iter().all(|s| {
        2.0 * s.empirical_partial_sum - s.empirical_partial_sum_ci_hi <= s.bound_partial_sum
    });
    let log_points: Vec<(f64, f64)> = windows
        .iter()
        .filter(|s| s.exceedance.mean > 0.0)
        .map(|s| (s.k as f64, s.exceedance.mean.ln()))
        .collect();
    let decay_slope = slope(&log_points);
    let first = windows[0].exceedance.mean;
    let last = windows[w - 1].exceedance.mean;
    // a NaN slope (fewer than two positive windows) does not count against decay
    let decays = if first == 0.0 {
        last == 0.0
    } else {
        last < first && !(decay_slope >= 0.0)
    };

    let ensemble: Vec<DiscretePath> = per_path
        .iter()
        .flat_map(|(_, coarse)| coarse.iter())
        .map(|v| DiscretePath::new(v.clone()))
        .collect::<Result<_>>()?;
    let certified = match certify_a(&ensemble, AchievingMode::Uniform, BinningConfig::default()) {
        Ok(c) => Some(c),
        Err(Error::InsufficientData { .. }) | Err(Error::NonPositiveA(_)) => None,
        Err(e) => return Err(e),
    };

    Ok(ConvergenceReport {
        family,
        applicability: Applicability::Applicable,
        mean_rate,
        ratio,
        analytic_a,
        series_sum,
        certified,
        windows,
        decay_slope,
        decays,
        partial_sums_bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulators::{BranchingSpec, GbmSpec, OffspringLaw};

    #[test]
    fn supercritical_is_not_applicable() {
        let spec = ProcessSpec::Branching(
            BranchingSpec::new(OffspringLaw::binary(1.5).unwrap(), 1.0, 1).unwrap(),
        );
        let r = as_convergence_check(&spec, &ConvergenceConfig::new(0.0, 1.0, 5, 100, 1)).unwrap();
        assert_eq!(r.applicability, Applicability::NotApplicable);
        assert!(r.windows.is_empty());
    }

    #[test]
    fn over_scaling_restores_applicability() {
        let spec = ProcessSpec::Branching(
            BranchingSpec::new(OffspringLaw::binary(1.5).unwrap(), 1.0, 1).unwrap(),
        );
        let mut cfg = ConvergenceConfig::new(1.0, 1.0, 4, 200, 1);
        cfg.depth = 4;
        let r = as_convergence_check(&spec, &cfg).unwrap();
        assert_eq!(r.applicability, Applicability::Applicable);
        assert!((r.mean_rate + 0.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_family() {
        let spec =
            ProcessSpec::Levy(crate::simulators::LevyTriple::new(1.0, -1.0, 0.0, None).unwrap());
        assert!(matches!(
            as_convergence_check(&spec, &ConvergenceConfig::new(0.0, 1.0, 3, 100, 1)),
            Err(Error::UnknownMeanDecay(_))
        ));
    }

    #[test]
    fn gbm_decays() {
        let spec = ProcessSpec::Gbm(GbmSpec::new(-0.5, 1.0, 1.0).unwrap());
        let mut cfg = ConvergenceConfig::new(0.0, 1.0, 10, 2000, 3);
        cfg.depth = 5;
        let r = as_convergence_check(&spec, &cfg).unwrap();
        assert!((r.series_sum - (-0.5f64).exp() / (1.0 - (-0.5f64).exp())).abs() < 1e-12);
        assert!(r.decays, "{r:?}");
        assert!(r.partial_sums_bounded);
        assert!(r.certified.is_some());
    }

    #[test]
    fn worker_count_does_not_change_report() {
        let spec = ProcessSpec::Branching(
            BranchingSpec::new(OffspringLaw::binary(0.8).unwrap(), 1.0, 3).unwrap(),
        );
        let mut cfg = ConvergenceConfig::new(0.0, 1.0, 4, 300, 8);
        cfg.depth = 4;
        let a = as_convergence_check(&spec, &cfg).unwrap();
        cfg.jobs = 3;
        assert_eq!(a, as_convergence_check(&spec, &cfg).unwrap());
    }
}
