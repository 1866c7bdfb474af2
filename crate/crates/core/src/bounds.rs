//! Closed-form right-hand sides of the improved Doob inequality and its
//! specializations.
//!
//! Every function takes expectations as plain numbers, so the same formula
//! serves exact enumeration and Monte Carlo plug-ins. A `+inf` restricted
//! expectation yields a `+inf` bound (a vacuous but valid inequality).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::montecarlo::{Estimate, Verdict};

/// Stable theorem identifiers, as written in report files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TheoremId {
    #[serde(rename = "A")]
    A,
    #[serde(rename = "B")]
    B,
    #[serde(rename = "T1_time_series")]
    TimeSeries,
    #[serde(rename = "T2_slope")]
    Slope,
    #[serde(rename = "T3_indep_incr")]
    IndepIncrements,
    #[serde(rename = "COR_rw")]
    RandomWalk,
    #[serde(rename = "T4_levy")]
    Levy,
    /// The second, moment-only Lévy bound `e^{-alpha} max{1, E e^{Z_T}}`.
    #[serde(rename = "T4_levy_max")]
    LevyMax,
    #[serde(rename = "T5_branching")]
    Branching,
    #[serde(rename = "CSBP")]
    Csbp,
    #[serde(rename = "GBM")]
    Gbm,
    #[serde(rename = "LP")]
    Lp,
    /// Classical Doob (`a = 1`) evaluated on an instance for comparison only.
    #[serde(rename = "A_classical")]
    ClassicalDoob,
}

impl TheoremId {
    pub const ALL: [TheoremId; 13] = [
        Self::A,
        Self::B,
        Self::TimeSeries,
        Self::Slope,
        Self::IndepIncrements,
        Self::RandomWalk,
        Self::Levy,
        Self::LevyMax,
        Self::Branching,
        Self::Csbp,
        Self::Gbm,
        Self::Lp,
        Self::ClassicalDoob,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
            Self::TimeSeries => "T1_time_series",
            Self::Slope => "T2_slope",
            Self::IndepIncrements => "T3_indep_incr",
            Self::RandomWalk => "COR_rw",
            Self::Levy => "T4_levy",
            Self::LevyMax => "T4_levy_max",
            Self::Branching => "T5_branching",
            Self::Csbp => "CSBP",
            Self::Gbm => "GBM",
            Self::Lp => "LP",
            Self::ClassicalDoob => "A_classical",
        }
    }
}

impl fmt::Display for TheoremId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TheoremId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown theorem id {s:?}")))
    }
}

/// One theorem applied to one instance at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub theorem_id: TheoremId,
    pub alpha: f64,
    pub a: f64,
    pub a_tilde: f64,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub slack: f64,
    pub verdict: Verdict,
}

impl BoundReport {
    pub fn new(
        theorem_id: TheoremId,
        alpha: f64,
        a: f64,
        lhs: Estimate,
        rhs: Estimate,
    ) -> Result<Self> {
        let a_tilde = a_tilde(a)?;
        let verdict = crate::montecarlo::verify_inequality(&lhs, &rhs);
        Ok(Self {
            theorem_id,
            alpha,
            a,
            a_tilde,
            slack: rhs.value() - lhs.value(),
            lhs,
            rhs,
            verdict,
        })
    }
}

fn check_a(a: f64) -> Result<()> {
    if a > 0.0 && !a.is_nan() {
        Ok(())
    } else {
        Err(Error::NonPositiveA(a))
    }
}

fn check_restricted(r: f64) -> Result<()> {
    if r >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!(
            "restricted expectation must be nonnegative, got {r}"
        )))
    }
}

/// `min{a, 1}`.
pub fn a_tilde(a: f64) -> Result<f64> {
    check_a(a)?;
    Ok(a.min(1.0))
}

/// `E[X_N; max X_n >= alpha] / (alpha min{a, 1})`.
pub fn improved_doob_rhs(alpha: f64, a: f64, restricted_exp: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    check_restricted(restricted_exp)?;
    if restricted_exp == 0.0 {
        return Ok(0.0);
    }
    Ok(restricted_exp / (alpha * a_tilde(a)?))
}

/// `(1/min{a,1}) (p/(p-1)) ||X_N||_p`.
pub fn lp_bound(p: f64, a: f64, norm_terminal: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::BadExponent(p));
    }
    check_restricted(norm_terminal)?;
    Ok(norm_terminal * (p / (p - 1.0)) / a_tilde(a)?)
}

/// Applies the improved Doob bound to `X = e^S` at threshold `e^alpha`.
/// `alpha` may be any real; if `e^alpha` underflows the bound is `+inf`.
fn exponential_doob(alpha: f64, a: f64, restricted_exp: f64) -> Result<f64> {
    let alpha_exp = alpha.exp();
    if alpha_exp == 0.0 {
        check_restricted(restricted_exp)?;
        return Ok(if restricted_exp == 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    improved_doob_rhs(alpha_exp, a, restricted_exp)
}

/// Time series with jumps above `ell < 0`:
/// `e^{-alpha + |ell| N} E[e^{S_N}; max S_n >= alpha]`, computed as the
/// improved Doob bound with threshold `e^alpha` and `a = e^{ell N}`.
pub fn time_series_rhs(alpha: f64, ell: f64, n: usize, restricted_exp_es: f64) -> Result<f64> {
    if !(ell < 0.0) {
        return Err(invalid(format!("jump floor must be negative, got {ell}")));
    }
    exponential_doob(alpha, (ell * n as f64).exp(), restricted_exp_es)
}

/// Continuous analogue for slopes above `ell < 0` on `[0, T]`.
pub fn slope_rhs(alpha: f64, ell: f64, horizon: f64, restricted_exp_ey: f64) -> Result<f64> {
    if !(ell < 0.0) {
        return Err(invalid(format!("slope floor must be negative, got {ell}")));
    }
    if !(horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    exponential_doob(alpha, (ell * horizon).exp(), restricted_exp_ey)
}

/// `inf_s E e^{Z_T - Z_s}` over the supplied grid values (which include `s = T`).
pub fn indep_incr_a(increment_mgfs: &[f64]) -> Result<f64> {
    let a = increment_mgfs.iter().copied().fold(f64::INFINITY, f64::min);
    if increment_mgfs.is_empty() {
        return Err(invalid("need at least the s = T term"));
    }
    check_a(a)?;
    Ok(a)
}

/// Bound for processes with independent increments:
/// `(e^{-alpha}/a) E[e^{Z_T}; sup Z >= alpha]`.
pub fn indep_incr_rhs(alpha: f64, a: f64, restricted_exp_ezt: f64) -> Result<f64> {
    exponential_doob(alpha, a, restricted_exp_ezt)
}

/// Random walk corollary: `e^{-alpha} (max_n pi_n^{-1}) E[e^{S_N}; max S_n >= alpha]`.
pub fn rw_corollary_rhs(alpha: f64, pi: &[f64], restricted_exp_esn: f64) -> Result<f64> {
    if pi.is_empty() {
        return Err(invalid("pi must hold pi_0..pi_N"));
    }
    if let Some(bad) = pi.iter().find(|p| !(**p > 0.0)) {
        return Err(Error::NonPositiveA(*bad));
    }
    check_restricted(restricted_exp_esn)?;
    if restricted_exp_esn == 0.0 {
        return Ok(0.0);
    }
    let max_inv = pi.iter().map(|p| 1.0 / p).fold(0.0, f64::max);
    Ok((-alpha).exp() * max_inv * restricted_exp_esn)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyBounds {
    /// `e^{-alpha} E[e^{Z_T}; sup >= alpha] / min{1, E e^{Z_T}}`.
    pub bound1: f64,
    /// `e^{-alpha} max{1, E e^{Z_T}}`.
    pub bound2: f64,
}

pub fn levy_rhs(
    alpha: f64,
    gamma: f64,
    horizon: f64,
    restricted_exp_ezt: f64,
) -> Result<LevyBounds> {
    if !(gamma > 0.0) {
        return Err(invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !(horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    check_restricted(restricted_exp_ezt)?;
    let terminal_mgf = gamma.powf(horizon);
    let scale = (-alpha).exp();
    let bound1 = if restricted_exp_ezt == 0.0 {
        0.0
    } else {
        scale * restricted_exp_ezt / terminal_mgf.min(1.0)
    };
    Ok(LevyBounds {
        bound1,
        bound2: scale * terminal_mgf.max(1.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchingBound {
    /// `alpha^{-1} e^{-b m T} E[Z_T; sup Z >= alpha]`.
    pub rhs: f64,
    /// `alpha^{-1}`, which dominates `rhs` when the expectation is exact.
    pub cap: f64,
}

pub fn branching_rhs(
    alpha: f64,
    b: f64,
    mu: f64,
    horizon: f64,
    restricted_exp_zt: f64,
) -> Result<BranchingBound> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(invalid(format!(
            "subcritical bound needs 0 < mu < 1, got {mu}"
        )));
    }
    if !(b > 0.0 && horizon > 0.0) {
        return Err(invalid("clock rate and horizon must be positive"));
    }
    check_restricted(restricted_exp_zt)?;
    let m = mu - 1.0;
    let rhs = if restricted_exp_zt == 0.0 {
        0.0
    } else {
        (-b * m * horizon).exp() * restricted_exp_zt / alpha
    };
    Ok(BranchingBound {
        rhs,
        cap: 1.0 / alpha,
    })
}

/// `alpha^{-1} e^{-beta T} E[X_T; sup X >= alpha]` for `beta < 0`.
pub fn csbp_rhs(alpha: f64, beta: f64, horizon: f64, restricted_exp_xt: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::NonPositiveAlpha(alpha));
    }
    if !(beta < 0.0) {
        return Err(invalid(format!("CSBP bound needs beta < 0, got {beta}")));
    }
    if !(horizon > 0.0) {
        return Err(invalid(format!("horizon must be positive, got {horizon}")));
    }
    check_restricted(restricted_exp_xt)?;
    if restricted_exp_xt == 0.0 {
        return Ok(0.0);
    }
    Ok((-beta * horizon).exp() * restricted_exp_xt / alpha)
}

/// `P_z(sup_t S_t >= alpha) <= z / alpha` for GBM with negative drift.
pub fn gbm_sup_bound(z: f64, alpha: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(invalid(format!("start must be positive, got {z}")));
    }
    if !(alpha > z) {
        return Err(Error::ThresholdBelowStart { z, alpha });
    }
    Ok(z / alpha)
}
