//! Exact rational arithmetic for integer-step walks with `X = e^S`.
//!
//! Probabilities are rationals and every expectation of `e^{S}` is a Laurent
//! polynomial in `e` with rational coefficients; only the final evaluation
//! at `e` touches floating point.

use std::collections::BTreeMap;
use std::ops::{Add, Mul};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};

/// `sum_k c_k e^k` with rational `c_k`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, BigRational>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `c e^k`.
    pub fn monomial(k: i64, c: BigRational) -> Self {
        let mut p = Self::zero();
        p.add_term(k, c);
        p
    }

    fn add_term(&mut self, k: i64, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(k).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&k);
        }
    }

    pub fn coeff(&self, k: i64) -> BigRational {
        self.coeffs
            .get(&k)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, &BigRational)> {
        self.coeffs.iter().map(|(k, c)| (*k, c))
    }

    /// Value at `x`, summed from the lowest power up.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .map(|(k, c)| c.to_f64().unwrap_or(f64::NAN) * x.powi(*k as i32))
            .sum()
    }

    pub fn eval_e(&self) -> f64 {
        self.eval(std::f64::consts::E)
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (k, c) in rhs.terms() {
            out.add_term(k, c.clone());
        }
        out
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (i, a) in self.terms() {
            for (j, b) in rhs.terms() {
                out.add_term(i + j, a * b);
            }
        }
        out
    }
}

/// Parses a decimal or `p/q` string into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad rational {s:?}")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .map_err(|_| invalid(format!("bad rational {s:?}")))?;
        if q.is_zero() {
            return Err(invalid("zero denominator"));
        }
        return Ok(BigRational::new(p, q));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    let digits: BigInt = format!("{int}{frac}")
        .parse()
        .map_err(|_| invalid(format!("bad rational {s:?}")))?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Ok(BigRational::new(digits, den))
}

/// One step law with integer support and rational probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalStep {
    atoms: Vec<(i64, BigRational)>,
}

impl RationalStep {
    pub fn new(atoms: Vec<(i64, BigRational)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid("empty step law"));
        }
        if atoms.iter().any(|(_, p)| p < &BigRational::zero()) {
            return Err(invalid("negative probability"));
        }
        let total = atoms
            .iter()
            .fold(BigRational::zero(), |acc, (_, p)| acc + p);
        if !total.is_one() {
            return Err(invalid(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self { atoms })
    }

    /// `E e^Y` as a Laurent polynomial.
    pub fn mgf(&self) -> LaurentPoly {
        self.atoms.iter().fold(LaurentPoly::zero(), |acc, (y, p)| {
            &acc + &LaurentPoly::monomial(*y, p.clone())
        })
    }
}

/// Exact outcome of enumerating a rational walk at integer threshold `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalEnumeration {
    /// `P(max S_n >= k)`, i.e. `P(max e^{S_n} >= e^k)`.
    pub p_max_ge_alpha: BigRational,
    /// `E[e^{S_N}; max S_n >= k]`.
    pub restricted_exp: LaurentPoly,
    pub terminal_exp: LaurentPoly,
}

/// Walk `S_0 = start` with integer steps and exact probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalWalk {
    steps: Vec<RationalStep>,
    start: i64,
}

impl RationalWalk {
    pub fn new(steps: Vec<RationalStep>, start: i64) -> Result<Self> {
        if steps.is_empty() {
            return Err(invalid("walk needs at least one step"));
        }
        Ok(Self { steps, start })
    }

    pub fn homogeneous(step: RationalStep, n: usize, start: i64) -> Result<Self> {
        Self::new(vec![step; n], start)
    }

    pub fn enumerate(&self, k: i64, cap: u64) -> Result<RationalEnumeration> {
        let paths: f64 = self.steps.iter().map(|s| s.atoms.len() as f64).product();
        if paths > cap as f64 {
            return Err(Error::TooManyPaths { paths, cap });
        }
        let mut out = RationalEnumeration {
            p_max_ge_alpha: BigRational::zero(),
            restricted_exp: LaurentPoly::zero(),
            terminal_exp: LaurentPoly::zero(),
        };
        self.rec(0, self.start, self.start, BigRational::one(), k, &mut out);
        Ok(out)
    }

    fn rec(
        &self,
        n: usize,
        s: i64,
        max: i64,
        prob: BigRational,
        k: i64,
        out: &mut RationalEnumeration,
    ) {
        if n == self.steps.len() {
            out.terminal_exp.add_term(s, prob.clone());
            if max >= k {
                out.restricted_exp.add_term(s, prob.clone());
                out.p_max_ge_alpha += prob;
            }
            return;
        }
        for (y, p) in &self.steps[n].atoms {
            if p.is_zero() {
                continue;
            }
            let next = s + y;
            self.rec(n + 1, next, max.max(next), &prob * p, k, out);
        }
    }

    /// `pi_n = prod_{i >= n} E e^{Y_i}` for `n = 0..=N`.
    pub fn pi(&self) -> Vec<LaurentPoly> {
        let mut pi = vec![LaurentPoly::monomial(0, BigRational::one()); self.steps.len() + 1];
        for n in (0..self.steps.len()).rev() {
            pi[n] = &self.steps[n].mgf() * &pi[n + 1];
        }
        pi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn witness_is_exact() {
        let step = RationalStep::new(vec![(1, r(1, 5)), (-1, r(4, 5))]).unwrap();
        let walk = RationalWalk::homogeneous(step, 2, 0).unwrap();
        let e = walk.enumerate(1, 100).unwrap();
        assert_eq!(e.p_max_ge_alpha, r(1, 5));
        assert_eq!(e.restricted_exp.coeff(2), r(1, 25));
        assert_eq!(e.restricted_exp.coeff(0), r(4, 25));
        assert_eq!(e.restricted_exp.terms().count(), 2);
        let pi0 = &walk.pi()[0];
        assert_eq!(pi0.coeff(2), r(1, 25));
        assert_eq!(pi0.coeff(0), r(8, 25));
        assert_eq!(pi0.coeff(-2), r(16, 25));
        assert_eq!(e.terminal_exp, *pi0);
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_rational("0.2").unwrap(), r(1, 5));
        assert_eq!(parse_rational("3/12").unwrap(), r(1, 4));
        assert_eq!(parse_rational("1").unwrap(), r(1, 1));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn unnormalized_step_rejected() {
        assert!(RationalStep::new(vec![(1, r(1, 3)), (0, r(1, 3))]).is_err());
    }
}
