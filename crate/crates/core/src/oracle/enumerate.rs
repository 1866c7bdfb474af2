use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::simulators::RandomWalkSpec;

/// Default bound on the number of enumerated paths.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Exact quantities for `X = f(S)` over every path of a finite walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnumerationResult {
    /// `P(max_n X_n >= alpha)`.
    pub p_max_ge_alpha: f64,
    /// `E[X_N; max_n X_n >= alpha]`.
    pub restricted_exp: f64,
    /// `E X_N`.
    pub terminal_exp: f64,
    /// Largest `a` with `E(X_N | F_n) >= a X_n` on every reachable history, `n < N`.
    pub certified_a_theorem: f64,
    /// Largest `a` with `E(X_{n+1} | F_n) >= a X_n` on every reachable history.
    pub certified_a_stepwise: f64,
    /// Largest `a` with `E(X_n | F_m) >= a X_m` for all `m < n`.
    pub certified_a_uniform: f64,
    /// Largest `a` with `E(X_n | F_m) >= a^{n-m} X_m` for all `m < n`.
    pub certified_a_rate: f64,
}

fn check_cap(spec: &RandomWalkSpec, cap: u64) -> Result<()> {
    let paths = spec.path_count();
    if paths > cap as f64 {
        return Err(Error::TooManyPaths { paths, cap });
    }
    Ok(())
}

fn checked(x: f64, n: usize) -> Result<f64> {
    if x.is_nan() {
        return Err(invalid(format!("transform is undefined at step {n}")));
    }
    if x.is_infinite() {
        return Err(Error::Overflow(format!("transformed value at step {n}")));
    }
    Ok(x)
}

/// Calls `visit(values, probability)` for every path with positive
/// probability, in lexicographic order of step choices. `values` holds the
/// walk `S_0..=S_N`.
pub fn for_each_path(
    spec: &RandomWalkSpec,
    cap: u64,
    mut visit: impl FnMut(&[f64], f64),
) -> Result<()> {
    check_cap(spec, cap)?;
    let mut values = Vec::with_capacity(spec.len() + 1);
    values.push(spec.start());
    fn rec(
        spec: &RandomWalkSpec,
        values: &mut Vec<f64>,
        prob: f64,
        visit: &mut dyn FnMut(&[f64], f64),
    ) {
        let n = values.len() - 1;
        if n == spec.len() {
            visit(values, prob);
            return;
        }
        let s = values[n];
        for (y, p) in spec.steps()[n].atoms() {
            if p == 0.0 {
                continue;
            }
            values.push(s + y);
            rec(spec, values, prob * p, visit);
            values.pop();
        }
    }
    rec(spec, &mut values, 1.0, &mut visit);
    Ok(())
}

struct Search<'a, F> {
    spec: &'a RandomWalkSpec,
    f: F,
    alpha: f64,
    p: Kahan,
    restricted: Kahan,
    terminal: Kahan,
    a_theorem: f64,
    a_step: f64,
    a_uniform: f64,
    a_rate: f64,
}

impl<F: Fn(f64) -> f64> Search<'_, F> {
    /// Returns `E(X_k | history)` for `k = n..=N`.
    fn visit(&mut self, n: usize, s: f64, x: f64, max_x: f64, prob: f64) -> Result<Vec<f64>> {
        let big_n = self.spec.len();
        if n == big_n {
            if max_x >= self.alpha {
                self.p.add(prob);
                self.restricted.add(prob * x);
            }
            self.terminal.add(prob * x);
            return Ok(vec![x]);
        }
        let mut cond = vec![0.0; big_n - n + 1];
        cond[0] = x;
        for (y, p) in self.spec.steps()[n].atoms() {
            if p == 0.0 {
                continue;
            }
            let s_next = s + y;
            let x_next = checked((self.f)(s_next), n + 1)?;
            if x_next < 0.0 {
                return Err(invalid(format!(
                    "transform must be nonnegative, got {x_next}"
                )));
            }
            let child = self.visit(n + 1, s_next, x_next, max_x.max(x_next), prob * p)?;
            for (c, v) in cond[1..].iter_mut().zip(child) {
                *c += p * v;
            }
        }
        if x > 0.0 {
            self.a_theorem = self.a_theorem.min(cond[big_n - n] / x);
            self.a_step = self.a_step.min(cond[1] / x);
            for (k, c) in cond.iter().enumerate().skip(1) {
                let r = c / x;
                self.a_uniform = self.a_uniform.min(r);
                self.a_rate = self.a_rate.min(r.powf(1.0 / k as f64));
            }
        }
        Ok(cond)
    }
}

/// Exhaustive enumeration of every path of `spec` with `X_n = f(S_n)`.
/// Constants default to 1 when no history has `X_n > 0`.
pub fn enumerate_walk(
    spec: &RandomWalkSpec,
    transform: impl Fn(f64) -> f64,
    alpha: f64,
    cap: u64,
) -> Result<EnumerationResult> {
    check_cap(spec, cap)?;
    let x0 = checked(transform(spec.start()), 0)?;
    if x0 < 0.0 {
        return Err(invalid(format!("transform must be nonnegative, got {x0}")));
    }
    let mut search = Search {
        spec,
        f: transform,
        alpha,
        p: Kahan::default(),
        restricted: Kahan::default(),
        terminal: Kahan::default(),
        a_theorem: f64::INFINITY,
        a_step: f64::INFINITY,
        a_uniform: f64::INFINITY,
        a_rate: f64::INFINITY,
    };
    search.visit(0, spec.start(), x0, x0, 1.0)?;
    let finite_or_one = |a: f64| if a.is_finite() { a } else { 1.0 };
    Ok(EnumerationResult {
        p_max_ge_alpha: search.p.value().min(1.0),
        restricted_exp: search.restricted.value(),
        terminal_exp: search.terminal.value(),
        certified_a_theorem: finite_or_one(search.a_theorem),
        certified_a_stepwise: finite_or_one(search.a_step),
        certified_a_uniform: finite_or_one(search.a_uniform),
        certified_a_rate: finite_or_one(search.a_rate),
    })
}

/// `(E (max_n X_n)^p, E X_N^p)` for `X_n = f(S_n) >= 0`.
pub fn enumerate_lp_moments(
    spec: &RandomWalkSpec,
    transform: impl Fn(f64) -> f64,
    p: f64,
    cap: u64,
) -> Result<(f64, f64)> {
    let mut max_moment = Kahan::default();
    let mut terminal_moment = Kahan::default();
    let mut err = None;
    for_each_path(spec, cap, |values, prob| {
        let xs: Vec<f64> = values.iter().map(|&s| transform(s)).collect();
        if xs.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            err.get_or_insert_with(|| invalid("transform must be finite and nonnegative"));
            return;
        }
        let max = xs.iter().copied().fold(0.0, f64::max);
        max_moment.add(prob * max.powf(p));
        terminal_moment.add(prob * xs[xs.len() - 1].powf(p));
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok((max_moment.value(), terminal_moment.value())),
    }
}
