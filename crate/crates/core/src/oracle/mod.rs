//! Exact ground truth on small instances: path enumeration for finite
//! walks, generating-function iteration for Galton–Watson processes, and
//! the closed-form GBM supremum law.

mod enumerate;
pub mod rational;

pub use enumerate::{
    enumerate_lp_moments, enumerate_walk, for_each_path, EnumerationResult, Kahan,
    DEFAULT_ENUMERATION_CAP,
};

use crate::error::{invalid, Error, Result};
use crate::simulators::{GbmSpec, OffspringLaw};

/// `h^{(n)}(z)`, the `n`-fold composition of the offspring generating
/// function; this is `E z^{Z_n}` for `Z_0 = 1`.
pub fn pgf_iterate(offspring: &OffspringLaw, n: usize, z: f64) -> f64 {
    let mut v = z;
    for _ in 0..n {
        v = offspring.pgf(v).clamp(0.0, 1.0);
    }
    v
}

/// Law of `Z_n` (with `Z_0 = 1`) on `{0, ..., cap}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GwPmf {
    pub pmf: Vec<f64>,
    /// `P(Z_n > cap)`, as `1 - sum(pmf)`.
    pub overflow: f64,
}

impl GwPmf {
    /// `sum_j pmf[j] z^j`.
    pub fn pgf(&self, z: f64) -> f64 {
        self.pmf.iter().rev().fold(0.0, |acc, p| acc * z + p)
    }
}

fn mul_truncated(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Iterates `P_{k+1} = h(P_k)` on coefficient vectors truncated to degree
/// `cap`. Coefficients up to `cap` are exact because they only depend on
/// coefficients up to `cap` of the inner series.
pub fn gw_exact_pmf(offspring: &OffspringLaw, n: usize, cap: usize, tol: f64) -> Result<GwPmf> {
    if offspring.max_offspring() > cap {
        return Err(invalid(format!(
            "offspring support {} exceeds the cap {cap}",
            offspring.max_offspring()
        )));
    }
    let len = cap + 1;
    let mut current = vec![0.0; len];
    if cap >= 1 {
        current[1] = 1.0;
    }
    for _ in 0..n {
        let mut acc = vec![0.0; len];
        for &p in offspring.pmf().iter().rev() {
            acc = mul_truncated(&acc, &current, len);
            acc[0] += p;
        }
        current = acc;
    }
    let mut total = Kahan::default();
    current.iter().for_each(|p| total.add(*p));
    let overflow = (1.0 - total.value()).max(0.0);
    if overflow > tol {
        return Err(Error::CapTooSmall {
            mass: overflow,
            tol,
        });
    }
    Ok(GwPmf {
        pmf: current,
        overflow,
    })
}

/// `P_z(sup_{t >= 0} S_t >= alpha) = (z/alpha)^{1 - 2 mu / sigma^2}` for
/// GBM with `mu < 0`.
pub fn gbm_sup_prob_exact(spec: &GbmSpec, alpha: f64) -> Result<f64> {
    if spec.mu() >= 0.0 {
        return Err(Error::PositiveDrift(spec.mu()));
    }
    if !(alpha > spec.z()) {
        return Err(Error::ThresholdBelowStart { z: spec.z(), alpha });
    }
    let exponent = 1.0 - 2.0 * spec.mu() / (spec.sigma() * spec.sigma());
    Ok((spec.z() / alpha).powf(exponent))
}
