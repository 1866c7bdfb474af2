use rand::Rng;

use crate::error::{invalid, Result};

const PROB_TOL: f64 = 1e-12;

fn check_probs(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(invalid(format!("{what}: empty probability vector")));
    }
    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(invalid(format!(
            "{what}: probabilities must be nonnegative"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(invalid(format!(
            "{what}: probabilities sum to {total}, not 1"
        )));
    }
    Ok(())
}

/// Inverse-CDF draw of an index from a probability vector.
fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the accumulated mass: take the last charged atom
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(probs.len() - 1)
}

/// A finitely supported law on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLaw {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl StepLaw {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(invalid(
                "step law: support and probabilities differ in length",
            ));
        }
        check_probs(&probs, "step law")?;
        if support.iter().any(|x| !x.is_finite()) {
            return Err(invalid("step law: support values must be finite"));
        }
        for (i, x) in support.iter().enumerate() {
            if support[..i].contains(x) {
                return Err(invalid(format!("step law: repeated support value {x}")));
            }
        }
        Ok(Self { support, probs })
    }

    /// Point mass at `x`.
    pub fn point(x: f64) -> Self {
        Self {
            support: vec![x],
            probs: vec![1.0],
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms().map(|(x, p)| p * f(x)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    /// `E e^{theta Y}`.
    pub fn mgf(&self, theta: f64) -> f64 {
        self.expect(|x| (theta * x).exp())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.support[sample_index(&self.probs, rng)]
    }
}

/// Offspring distribution `(p_0, ..., p_K)` of a branching process.
#[derive(Debug, Clone, PartialEq)]
pub struct OffspringLaw {
    pmf: Vec<f64>,
}

impl OffspringLaw {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        // p_0 = 1 is accepted for simulation; see `is_nondegenerate`.
        check_probs(&pmf, "offspring law")?;
        Ok(Self { pmf })
    }

    /// `p_0 = 1 - mu/2`, `p_2 = mu/2`: binary splitting with mean `mu`.
    pub fn binary(mu: f64) -> Result<Self> {
        if !(0.0..=2.0).contains(&mu) {
            return Err(invalid(format!(
                "binary offspring mean must lie in [0, 2], got {mu}"
            )));
        }
        Self::new(vec![1.0 - mu / 2.0, 0.0, mu / 2.0])
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn max_offspring(&self) -> usize {
        self.pmf.len() - 1
    }

    /// `mu = h'(1)`.
    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }

    /// Generating function `h(z) = sum p_k z^k` by Horner's rule.
    pub fn pgf(&self, z: f64) -> f64 {
        self.pmf.iter().rev().fold(0.0, |acc, p| acc * z + p)
    }

    /// Whether the standing assumption `p_0 < 1` holds.
    pub fn is_nondegenerate(&self) -> bool {
        self.pmf[0] < 1.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        sample_index(&self.pmf, rng)
    }
}
