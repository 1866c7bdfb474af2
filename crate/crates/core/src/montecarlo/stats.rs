use std::fmt;

use serde::{Deserialize, Serialize};

/// 97.5% standard normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Relative tolerance used when both sides of an inequality are exact.
pub const EXACT_TOL: f64 = 1e-12;

/// A Monte Carlo estimate with its standard error and 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub ci95: (f64, f64),
}

impl McEstimate {
    /// Sample mean with a normal-approximation interval.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                n,
                ci95: (f64::NAN, f64::NAN),
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        if !mean.is_finite() {
            return Self {
                mean,
                stderr: f64::INFINITY,
                n,
                ci95: (mean, f64::INFINITY),
            };
        }
        let all_equal = samples.iter().all(|&x| x == samples[0]);
        let stderr = if all_equal || n < 2 {
            0.0
        } else {
            let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        };
        Self {
            mean,
            stderr,
            n,
            ci95: (mean - Z95 * stderr, mean + Z95 * stderr),
        }
    }

    /// Proportion `successes / n` with a Wilson score interval.
    pub fn proportion(successes: usize, n: usize) -> Self {
        let nf = n as f64;
        let p = successes as f64 / nf;
        let stderr = (p * (1.0 - p) / nf).sqrt();
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / nf;
        let center = (p + z2 / (2.0 * nf)) / denom;
        let half = Z95 / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
        Self {
            mean: p,
            stderr,
            n,
            ci95: (
                if successes == 0 {
                    0.0
                } else {
                    (center - half).max(0.0)
                },
                if successes == n {
                    1.0
                } else {
                    (center + half).min(1.0)
                },
            ),
        }
    }

    /// `c * X` for a constant `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        let scale = |x: f64| if x == 0.0 { 0.0 } else { c * x };
        Self {
            mean: scale(self.mean),
            stderr: scale(self.stderr),
            n: self.n,
            ci95: (scale(self.ci95.0), scale(self.ci95.1)),
        }
    }
}

/// Either an exactly computed value or a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Estimate {
    Exact(f64),
    Mc(McEstimate),
}

impl Estimate {
    pub fn value(&self) -> f64 {
        match self {
            Self::Exact(v) => *v,
            Self::Mc(m) => m.mean,
        }
    }

    pub fn stderr(&self) -> f64 {
        match self {
            Self::Exact(_) => 0.0,
            Self::Mc(m) => m.stderr,
        }
    }

    pub fn lo(&self) -> f64 {
        match self {
            Self::Exact(v) => *v,
            Self::Mc(m) => m.ci95.0,
        }
    }

    pub fn hi(&self) -> f64 {
        match self {
            Self::Exact(v) => *v,
            Self::Mc(m) => m.ci95.1,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Self::Exact(_))
    }

    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Self::Exact(v) => Self::Exact(if *v == 0.0 { 0.0 } else { c * v }),
            Self::Mc(m) => Self::Mc(m.scaled(c)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    #[serde(rename = "HOLDS_WITH_MARGIN")]
    HoldsWithMargin,
    #[serde(rename = "WITHIN_NOISE")]
    WithinNoise,
    #[serde(rename = "VIOLATED")]
    Violated,
    /// The right-hand side is infinite; the inequality holds only trivially.
    #[serde(rename = "VACUOUS")]
    Vacuous,
}

impl VerdictKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::HoldsWithMargin => "HOLDS_WITH_MARGIN",
            Self::WithinNoise => "WITHIN_NOISE",
            Self::Violated => "VIOLATED",
            Self::Vacuous => "VACUOUS",
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of comparing `lhs <= rhs`, with the margin `(rhs - lhs)` in
/// combined standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub margin_stderr: f64,
}

impl Verdict {
    pub fn is_violated(&self) -> bool {
        self.kind == VerdictKind::Violated
    }
}

/// Decides `lhs <= rhs`. VIOLATED only when the intervals are disjoint in
/// the wrong order; exact pairs use a relative tolerance of 1e-12.
pub fn verify_inequality(lhs: &Estimate, rhs: &Estimate) -> Verdict {
    let diff = rhs.value() - lhs.value();
    let se = lhs.stderr().hypot(rhs.stderr());
    let margin_stderr = if se > 0.0 {
        diff / se
    } else if diff > 0.0 {
        f64::INFINITY
    } else if diff < 0.0 {
        f64::NEG_INFINITY
    } else {
        0.0
    };
    if rhs.value().is_infinite() || rhs.value().is_nan() {
        return Verdict {
            kind: VerdictKind::Vacuous,
            margin_stderr: f64::INFINITY,
        };
    }
    let kind = if lhs.is_exact() && rhs.is_exact() {
        let tol = EXACT_TOL * lhs.value().abs().max(rhs.value().abs()).max(1.0);
        if diff < -tol {
            VerdictKind::Violated
        } else if diff > tol {
            VerdictKind::HoldsWithMargin
        } else {
            VerdictKind::WithinNoise
        }
    } else if lhs.lo() > rhs.hi() {
        VerdictKind::Violated
    } else if lhs.hi() < rhs.lo() {
        VerdictKind::HoldsWithMargin
    } else {
        VerdictKind::WithinNoise
    };
    Verdict {
        kind,
        margin_stderr,
    }
}
