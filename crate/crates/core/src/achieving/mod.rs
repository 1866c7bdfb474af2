//! `a`-achieving processes: back-transformation to submartingales,
//! approximate convexity, and the transforms that produce uniformly
//! achieving processes from submartingales.

mod convexity;
mod grid;

pub use convexity::{
    approximate_jensen_margin, convex_envelope, estimate_delta, hyers_ulam_decompose,
    lower_hull_indices, reconstruction_error, uniform_weights, Decomposition, DeltaEstimate,
    JensenMargin,
};
pub use grid::GridFunction;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::montecarlo::Z95;
use crate::paths::{DiscretePath, GridPath};

/// Which form of the achieving condition a certificate speaks about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AchievingMode {
    /// `E(X_{n+1} | F_n) >= a X_n`.
    Stepwise,
    /// `E(X_n | F_m) >= a X_m` for all `m <= n`.
    Uniform,
    /// `E(X_n | F_m) >= a^{n-m} X_m`.
    ExponentialRate,
}

impl AchievingMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "stepwise" => Ok(Self::Stepwise),
            "uniform" => Ok(Self::Uniform),
            "exponential" | "exponential_rate" => Ok(Self::ExponentialRate),
            _ => Err(crate::error::invalid(format!(
                "unknown achieving mode {s:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Confidence {
    /// Derived from a theorem or from exact enumeration.
    Exact,
    /// Binned conditional means; `lower_bound` is a 95% lower confidence
    /// bound for `a`.
    BinnedMc { lower_bound: f64, bins_used: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AchievingCertificate {
    pub mode: AchievingMode,
    pub a_hat: f64,
    pub confidence: Confidence,
}

impl AchievingCertificate {
    pub fn exact(mode: AchievingMode, a_hat: f64) -> Result<Self> {
        if !(a_hat > 0.0) || !a_hat.is_finite() {
            return Err(Error::NonPositiveA(a_hat));
        }
        Ok(Self {
            mode,
            a_hat,
            confidence: Confidence::Exact,
        })
    }
}

fn scale_values(
    values: &[f64],
    times: impl Iterator<Item = f64>,
    a: f64,
    sign: f64,
) -> Result<Vec<f64>> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::NonPositiveA(a));
    }
    let ln_a = a.ln();
    values
        .iter()
        .zip(times)
        .map(|(&x, t)| {
            let y = if x == 0.0 || a == 1.0 {
                x
            } else {
                x * (sign * ln_a * t).exp()
            };
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Overflow(format!("a^(-t) X_t at t = {t}")))
            }
        })
        .collect()
}

/// `Y_n = a^{-n} X_n`.
pub fn to_submartingale(path: &DiscretePath, a: f64) -> Result<DiscretePath> {
    DiscretePath::new(scale_values(
        path.values(),
        (0..).map(|n| n as f64),
        a,
        -1.0,
    )?)
}

/// `X_n = a^n Y_n`.
pub fn from_submartingale(path: &DiscretePath, a: f64) -> Result<DiscretePath> {
    DiscretePath::new(scale_values(
        path.values(),
        (0..).map(|n| n as f64),
        a,
        1.0,
    )?)
}

/// `Y_t = a^{-t} X_t`.
pub fn to_submartingale_continuous(path: &GridPath, a: f64) -> Result<GridPath> {
    let values = scale_values(path.values(), path.grid().iter().copied(), a, -1.0)?;
    GridPath::new(path.horizon(), path.grid().to_vec(), values)
}

/// `X_t = a^t Y_t`.
pub fn from_submartingale_continuous(path: &GridPath, a: f64) -> Result<GridPath> {
    let values = scale_values(path.values(), path.grid().iter().copied(), a, 1.0)?;
    GridPath::new(path.horizon(), path.grid().to_vec(), values)
}

fn exp_of(f: &GridFunction, values: &[f64]) -> Result<Vec<f64>> {
    values
        .iter()
        .map(|&x| {
            let y = f.eval(x)?.exp();
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Overflow(format!("exp(f({x}))")))
            }
        })
        .collect()
}

fn check_delta(delta: f64) -> Result<()> {
    if delta >= 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(crate::error::invalid(format!(
            "delta must be finite and nonnegative, got {delta}"
        )))
    }
}

fn uniform_certificate(delta: f64) -> AchievingCertificate {
    AchievingCertificate {
        mode: AchievingMode::Uniform,
        a_hat: (-delta).exp(),
        confidence: Confidence::Exact,
    }
}

/// `Y = e^{f(X)}` for a submartingale `X` and a non-decreasing
/// `delta`-convex `f`; `Y` is uniformly `e^{-delta}`-achieving.
pub fn smg_to_achieving(
    path: &DiscretePath,
    f: &GridFunction,
    delta: f64,
) -> Result<(DiscretePath, AchievingCertificate)> {
    f.check_monotone()?;
    check_delta(delta)?;
    Ok((
        DiscretePath::new(exp_of(f, path.values())?)?,
        uniform_certificate(delta),
    ))
}

pub fn smg_to_achieving_continuous(
    path: &GridPath,
    f: &GridFunction,
    delta: f64,
) -> Result<(GridPath, AchievingCertificate)> {
    f.check_monotone()?;
    check_delta(delta)?;
    let values = exp_of(f, path.values())?;
    Ok((
        GridPath::new(path.horizon(), path.grid().to_vec(), values)?,
        uniform_certificate(delta),
    ))
}

/// `Y_n = exp(delta n + f(X_n))`, a submartingale when `X` is one and `f`
/// is non-decreasing and `delta`-convex.
pub fn invariance_i(path: &DiscretePath, f: &GridFunction, delta: f64) -> Result<DiscretePath> {
    f.check_monotone()?;
    check_delta(delta)?;
    let values = path
        .values()
        .iter()
        .enumerate()
        .map(|(n, &x)| {
            let y = (delta * n as f64 + f.eval(x)?).exp();
            if y.is_finite() {
                Ok(y)
            } else {
                Err(Error::Overflow(format!("exp(delta n + f(X_n)) at n = {n}")))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    DiscretePath::new(values)
}

/// `U_n = e^{f(X_n / a^n)}` for an `a`-achieving `X`; uniformly
/// `e^{-delta}`-achieving provided every `X_n / a^n` lies in the domain of `f`.
pub fn invariance_ii(
    path: &DiscretePath,
    f: &GridFunction,
    a: f64,
    delta: f64,
) -> Result<(DiscretePath, AchievingCertificate)> {
    f.check_monotone()?;
    let rescaled = to_submartingale(path, a)?;
    smg_to_achieving(&rescaled, f, delta)
}

/// Binning used by [`certify_a`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinningConfig {
    pub max_bins: usize,
    pub min_samples: usize,
}

impl Default for BinningConfig {
    fn default() -> Self {
        Self {
            max_bins: 16,
            min_samples: 30,
        }
    }
}

struct BinRatio {
    ratio: f64,
    lower: f64,
}

/// Equal-count bins of `(X_m, X_n)` pairs sorted by `X_m`. Ties keep
/// ensemble order, so a bin boundary inside a tie does not sort on `X_n`.
fn binned_ratios(pairs: &mut Vec<(f64, f64)>, cfg: BinningConfig) -> Vec<BinRatio> {
    // X_m = 0 puts no constraint on a nonnegative process
    pairs.retain(|p| p.0 > 0.0);
    let n = pairs.len();
    if n < cfg.min_samples || cfg.min_samples == 0 {
        return Vec::new();
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let bins = (n / cfg.min_samples).clamp(1, cfg.max_bins.max(1));
    let mut out = Vec::with_capacity(bins);
    for b in 0..bins {
        let chunk = &pairs[b * n / bins..(b + 1) * n / bins];
        let k = chunk.len() as f64;
        let mean_m = chunk.iter().map(|p| p.0).sum::<f64>() / k;
        if !(mean_m > 0.0) {
            continue;
        }
        let mean_n = chunk.iter().map(|p| p.1).sum::<f64>() / k;
        let var_n = chunk.iter().map(|p| (p.1 - mean_n).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
        let ratio = mean_n / mean_m;
        out.push(BinRatio {
            ratio,
            lower: ratio - Z95 * (var_n / k).sqrt() / mean_m,
        });
    }
    out
}

/// Estimates the achieving constant of a Markov ensemble by binning on the
/// current value `X_m` and comparing the bin mean of `X_n` with the bin
/// mean of `X_m`. Pairs are `(m, m+1)` in stepwise mode and all `m < n`
/// otherwise; the exponential-rate mode reports `ratio^{1/(n-m)}`.
pub fn certify_a(
    ensemble: &[DiscretePath],
    mode: AchievingMode,
    cfg: BinningConfig,
) -> Result<AchievingCertificate> {
    let insufficient = Error::InsufficientData {
        min_samples: cfg.min_samples,
    };
    let Some(first) = ensemble.first() else {
        return Err(insufficient);
    };
    let len = first.len();
    if ensemble.iter().any(|p| p.len() != len) {
        return Err(crate::error::invalid(
            "ensemble paths must have equal lengths",
        ));
    }
    let mut a_hat = f64::INFINITY;
    let mut lower = f64::INFINITY;
    let mut bins_used = 0;
    for m in 0..len {
        let ends: Vec<usize> = match mode {
            AchievingMode::Stepwise => (m + 1..len.min(m + 2)).collect(),
            _ => (m + 1..len).collect(),
        };
        for n in ends {
            let mut pairs: Vec<(f64, f64)> = ensemble
                .iter()
                .map(|p| (p.values()[m], p.values()[n]))
                .collect();
            for bin in binned_ratios(&mut pairs, cfg) {
                let (r, lo) = match mode {
                    AchievingMode::ExponentialRate => {
                        let e = 1.0 / (n - m) as f64;
                        (bin.ratio.max(0.0).powf(e), bin.lower.max(0.0).powf(e))
                    }
                    _ => (bin.ratio, bin.lower),
                };
                a_hat = a_hat.min(r);
                lower = lower.min(lo);
                bins_used += 1;
            }
        }
    }
    if bins_used == 0 {
        return Err(insufficient);
    }
    if !(a_hat > 0.0) {
        return Err(Error::NonPositiveA(a_hat));
    }
    Ok(AchievingCertificate {
        mode,
        a_hat,
        confidence: Confidence::BinnedMc {
            lower_bound: lower,
            bins_used,
        },
    })
}

/// Certificate from exhaustive enumeration of a finite-support walk, with
/// `X = transform(S)`.
pub fn certify_a_exact(
    spec: &crate::simulators::RandomWalkSpec,
    transform: impl Fn(f64) -> f64,
    mode: AchievingMode,
    cap: u64,
) -> Result<AchievingCertificate> {
    let res = crate::oracle::enumerate_walk(spec, transform, f64::INFINITY, cap)?;
    let a = match mode {
        AchievingMode::Stepwise => res.certified_a_stepwise,
        AchievingMode::Uniform => res.certified_a_uniform,
        AchievingMode::ExponentialRate => res.certified_a_rate,
    };
    AchievingCertificate::exact(mode, a)
}
