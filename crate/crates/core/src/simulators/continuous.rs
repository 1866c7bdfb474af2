//! Continuous-time families on dyadic grids.
//!
//! Brownian paths are built by bridge refinement: the terminal value first,
//! then midpoints level by level, left to right. The draws for depth `n` are
//! a prefix of those for depth `n + 1`, so a finer grid under the same seed
//! contains the coarser path bitwise. Compound-Poisson jump times and sizes
//! are drawn before any Brownian value and do not depend on the depth.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

use super::laws::{OffspringLaw, StepLaw};
use crate::error::{invalid, Error, Result};
use crate::paths::{dyadic_grid, DiscretePath, GridPath, SeedSpec};

/// Default cap on population size and event count for branching simulators.
pub const DEFAULT_POPULATION_CAP: u64 = 10_000_000;

/// Standard Brownian motion at `m T / 2^depth`, `m = 0..=2^depth`.
pub fn brownian_dyadic<R: Rng + ?Sized>(horizon: f64, depth: u32, rng: &mut R) -> Vec<f64> {
    let n = 1usize << depth;
    let mut w = vec![0.0; n + 1];
    let z: f64 = StandardNormal.sample(rng);
    w[n] = horizon.sqrt() * z;
    let dt = horizon / n as f64;
    for level in 1..=depth {
        let step = n >> level;
        // midpoint of an interval of length 2 step dt has conditional variance step dt / 2
        let sd = (step as f64 * dt / 2.0).sqrt();
        let mut i = step;
        while i < n {
            let z: f64 = StandardNormal.sample(rng);
            w[i] = 0.5 * (w[i - step] + w[i + step]) + sd * z;
            i += 2 * step;
        }
    }
    w
}

/// Finite-activity Lévy process `b t + sigma W_t + sum of jumps`, with jumps
/// arriving at rate `lambda` and sizes drawn from `jump_law`.
///
/// `drift` is the plain drift of this pathwise construction. The Lévy–Khintchine
/// drift paired with the truncation `h(x) = x 1{|x| <= 1}` is
/// [`LevyTriple::lk_drift`].
#[derive(Debug, Clone, PartialEq)]
pub struct LevyTriple {
    sigma: f64,
    drift: f64,
    jump_rate: f64,
    jump_law: StepLaw,
}

impl LevyTriple {
    pub fn new(sigma: f64, drift: f64, jump_rate: f64, jump_law: Option<StepLaw>) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("sigma must be nonnegative, got {sigma}")));
        }
        if !(jump_rate >= 0.0 && jump_rate.is_finite()) {
            return Err(invalid(format!(
                "jump rate must be nonnegative, got {jump_rate}"
            )));
        }
        if !drift.is_finite() {
            return Err(invalid("drift must be finite"));
        }
        let jump_law = match jump_law {
            Some(law) => law,
            None if jump_rate == 0.0 => StepLaw::point(1.0),
            None => return Err(invalid("positive jump rate needs a jump law")),
        };
        if jump_law.atoms().any(|(x, p)| x == 0.0 && p > 0.0) {
            return Err(invalid("the Lévy measure may not charge 0"));
        }
        Ok(Self {
            sigma,
            drift,
            jump_rate,
            jump_law,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }

    pub fn jump_law(&self) -> &StepLaw {
        &self.jump_law
    }

    /// Log of `E e^{Z_1}`: `b + sigma^2/2 + lambda (E e^J - 1)`.
    pub fn log_gamma(&self) -> f64 {
        self.drift + 0.5 * self.sigma * self.sigma + self.jump_rate * (self.jump_law.mgf(1.0) - 1.0)
    }

    /// `gamma = E e^{Z_1}`.
    pub fn gamma(&self) -> f64 {
        self.log_gamma().exp()
    }

    pub fn gamma_lt_one(&self) -> bool {
        self.gamma() < 1.0
    }

    /// Drift of the characteristic triple under truncation `h(x) = x 1{|x|<=1}`.
    pub fn lk_drift(&self) -> f64 {
        self.drift + self.jump_rate * self.jump_law.expect(truncation)
    }

    /// `int (e^x - 1 - h(x)) Lambda(dx)` for `Lambda = lambda * jump_law`.
    pub fn exponential_compensator(&self) -> f64 {
        self.jump_rate * self.jump_law.expect(|x| x.exp() - 1.0 - truncation(x))
    }

    /// The characteristic-triple criterion for `gamma < 1`,
    /// `b_LK < -sigma^2/2 - int (e^x - 1 - h(x)) Lambda(dx)`, evaluated from
    /// the triple without going through `gamma`.
    pub fn triple_criterion(&self) -> bool {
        self.lk_drift() < -0.5 * self.sigma * self.sigma - self.exponential_compensator()
    }

    pub fn mean(&self, t: f64) -> f64 {
        t * (self.drift + self.jump_rate * self.jump_law.mean())
    }

    pub fn simulate(&self, horizon: f64, depth: u32, seed: SeedSpec) -> Result<GridPath> {
        GridPath::dyadic(horizon, depth, self.simulate_values(horizon, depth, seed)?)
    }

    pub(crate) fn simulate_values(
        &self,
        horizon: f64,
        depth: u32,
        seed: SeedSpec,
    ) -> Result<Vec<f64>> {
        check_horizon(horizon)?;
        let mut rng = seed.rng();
        let mut jumps: Vec<(f64, f64)> = Vec::new();
        let mean_count = self.jump_rate * horizon;
        if mean_count > 0.0 {
            let poisson = Poisson::new(mean_count).map_err(|e| invalid(e.to_string()))?;
            let count: f64 = poisson.sample(&mut rng);
            jumps.reserve(count as usize);
            for _ in 0..count as u64 {
                let tau = horizon * rng.random::<f64>();
                let size = self.jump_law.sample(&mut rng);
                jumps.push((tau, size));
            }
            jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let grid = dyadic_grid(horizon, depth);
        let w = if self.sigma > 0.0 {
            brownian_dyadic(horizon, depth, &mut rng)
        } else {
            vec![0.0; grid.len()]
        };
        let mut values = Vec::with_capacity(grid.len());
        let mut next_jump = 0;
        let mut jump_sum = 0.0;
        for (t, wt) in grid.iter().zip(&w) {
            while next_jump < jumps.len() && jumps[next_jump].0 <= *t {
                jump_sum += jumps[next_jump].1;
                next_jump += 1;
            }
            values.push(self.drift * t + self.sigma * wt + jump_sum);
        }
        Ok(values)
    }
}

fn truncation(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        x
    } else {
        0.0
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("horizon must be positive, got {horizon}")))
    }
}

/// Geometric Brownian motion `dS = mu S dt + sigma S dW`, `S_0 = z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbmSpec {
    mu: f64,
    sigma: f64,
    z: f64,
}

impl GbmSpec {
    pub fn new(mu: f64, sigma: f64, z: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(invalid("GBM drift must be finite"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!(
                "GBM volatility must be positive, got {sigma}"
            )));
        }
        if !(z > 0.0 && z.is_finite()) {
            return Err(invalid(format!("GBM start must be positive, got {z}")));
        }
        Ok(Self { mu, sigma, z })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn with_start(&self, z: f64) -> Result<Self> {
        Self::new(self.mu, self.sigma, z)
    }

    pub fn mean(&self, t: f64) -> f64 {
        self.z * (self.mu * t).exp()
    }

    /// `ln(S_t / z)` on the dyadic grid: exact Gaussian transitions.
    pub fn log_returns(&self, horizon: f64, depth: u32, seed: SeedSpec) -> Result<Vec<f64>> {
        check_horizon(horizon)?;
        let mut rng = seed.rng();
        let w = brownian_dyadic(horizon, depth, &mut rng);
        let nu = self.mu - 0.5 * self.sigma * self.sigma;
        Ok(dyadic_grid(horizon, depth)
            .iter()
            .zip(&w)
            .map(|(t, wt)| nu * t + self.sigma * wt)
            .collect())
    }

    pub fn simulate(&self, horizon: f64, depth: u32, seed: SeedSpec) -> Result<GridPath> {
        let values = self
            .log_returns(horizon, depth, seed)?
            .into_iter()
            .map(|x| self.z * x.exp())
            .collect::<Vec<_>>();
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Overflow(format!("GBM value {v} left (0, inf)")));
        }
        GridPath::dyadic(horizon, depth, values)
    }
}

/// Continuous-state branching process with mechanism `beta u - k u^2`,
/// simulated as the Feller diffusion `dX = beta X dt + sqrt(2 k X) dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsbpSpec {
    beta: f64,
    k: f64,
    x0: f64,
}

impl CsbpSpec {
    pub fn new(beta: f64, k: f64, x0: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(invalid("CSBP beta must be finite"));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid(format!("CSBP k must be positive, got {k}")));
        }
        if !(x0 >= 0.0 && x0.is_finite()) {
            return Err(invalid(format!("CSBP start must be nonnegative, got {x0}")));
        }
        Ok(Self { beta, k, x0 })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn with_start(&self, x0: f64) -> Result<Self> {
        Self::new(self.beta, self.k, x0)
    }

    pub fn mean(&self, t: f64) -> f64 {
        self.x0 * (self.beta * t).exp()
    }

    /// Full-truncation Euler on `2^depth` steps. The latent state may go
    /// negative; the recorded path is its positive part, and once the latent
    /// state is at or below zero both coefficients vanish, so 0 absorbs.
    /// The scheme carries an O(dt) bias in the mean.
    pub fn simulate(&self, horizon: f64, depth: u32, seed: SeedSpec) -> Result<GridPath> {
        check_horizon(horizon)?;
        let mut rng = seed.rng();
        let n = 1usize << depth;
        let dt = horizon / n as f64;
        let sqrt_dt = dt.sqrt();
        let mut latent = self.x0;
        let mut values = Vec::with_capacity(n + 1);
        values.push(self.x0);
        for _ in 0..n {
            let pos = latent.max(0.0);
            if pos > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                latent += self.beta * pos * dt + (2.0 * self.k * pos).sqrt() * sqrt_dt * z;
            }
            if !latent.is_finite() {
                return Err(Error::Overflow("CSBP Euler scheme diverged".into()));
            }
            values.push(latent.max(0.0));
        }
        GridPath::dyadic(horizon, depth, values)
    }
}

/// Continuous-time Galton–Watson process: each individual branches at rate
/// `b`, replaced by an offspring count drawn from `offspring`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchingSpec {
    offspring: OffspringLaw,
    clock_rate: f64,
    initial: u64,
}

impl BranchingSpec {
    pub fn new(offspring: OffspringLaw, clock_rate: f64, initial: u64) -> Result<Self> {
        if !(clock_rate > 0.0 && clock_rate.is_finite()) {
            return Err(invalid(format!(
                "branching clock rate must be positive, got {clock_rate}"
            )));
        }
        if initial == 0 {
            return Err(invalid("initial population must be positive"));
        }
        Ok(Self {
            offspring,
            clock_rate,
            initial,
        })
    }

    pub fn offspring(&self) -> &OffspringLaw {
        &self.offspring
    }

    pub fn clock_rate(&self) -> f64 {
        self.clock_rate
    }

    pub fn initial(&self) -> u64 {
        self.initial
    }

    /// `m = mu - 1`.
    pub fn malthusian(&self) -> f64 {
        self.offspring.mean() - 1.0
    }

    /// `E Z_t = Z_0 e^{b m t}`.
    pub fn mean(&self, t: f64) -> f64 {
        self.initial as f64 * (self.clock_rate * self.malthusian() * t).exp()
    }

    pub fn simulate(&self, horizon: f64, depth: u32, seed: SeedSpec) -> Result<GridPath> {
        self.simulate_with_cap(horizon, depth, seed, DEFAULT_POPULATION_CAP)
    }

    pub fn simulate_with_cap(
        &self,
        horizon: f64,
        depth: u32,
        seed: SeedSpec,
        cap: u64,
    ) -> Result<GridPath> {
        let values = self.simulate_from(self.initial, horizon, depth, seed, cap)?;
        GridPath::dyadic(horizon, depth, values)
    }

    /// Event-driven simulation started from `initial` individuals (0 allowed).
    pub(crate) fn simulate_from(
        &self,
        initial: u64,
        horizon: f64,
        depth: u32,
        seed: SeedSpec,
        cap: u64,
    ) -> Result<Vec<f64>> {
        check_horizon(horizon)?;
        let mut rng = seed.rng();
        let grid = dyadic_grid(horizon, depth);
        let mut values = Vec::with_capacity(grid.len());
        let mut pop = initial;
        let mut events = 0u64;
        let mut t = 0.0;
        let mut next_event = self.next_event_time(t, pop, &mut rng);
        for &g in &grid {
            while next_event <= g {
                let children = self.offspring.sample(&mut rng) as u64;
                pop = pop - 1 + children;
                events += 1;
                if pop > cap || events > cap {
                    return Err(Error::PopulationCap { cap });
                }
                t = next_event;
                next_event = self.next_event_time(t, pop, &mut rng);
            }
            values.push(pop as f64);
        }
        Ok(values)
    }

    fn next_event_time<R: Rng + ?Sized>(&self, now: f64, pop: u64, rng: &mut R) -> f64 {
        if pop == 0 {
            return f64::INFINITY;
        }
        let rate = self.clock_rate * pop as f64;
        let e: f64 = Exp::new(rate).expect("positive rate").sample(rng);
        now + e
    }
}

/// Discrete-generation Galton–Watson process `Z_0 = initial, ..., Z_n`.
pub fn simulate_gw_discrete(
    offspring: &OffspringLaw,
    n_gens: usize,
    initial: u64,
    seed: SeedSpec,
    cap: u64,
) -> Result<DiscretePath> {
    let mut rng = seed.rng();
    let mut pop = initial;
    let mut values = Vec::with_capacity(n_gens + 1);
    values.push(pop as f64);
    for _ in 0..n_gens {
        let mut next = 0u64;
        for _ in 0..pop {
            next += offspring.sample(&mut rng) as u64;
            if next > cap {
                return Err(Error::PopulationCap { cap });
            }
        }
        pop = next;
        values.push(pop as f64);
    }
    DiscretePath::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bridge_refinement_is_nested() {
        let seed = SeedSpec::new(11, 5);
        let coarse = brownian_dyadic(2.0, 4, &mut seed.rng());
        let fine = brownian_dyadic(2.0, 7, &mut seed.rng());
        for (m, w) in coarse.iter().enumerate() {
            assert_eq!(*w, fine[m * 8]);
        }
    }

    #[test]
    fn pure_drift_levy() {
        let triple = LevyTriple::new(0.0, 1.0, 0.0, None).unwrap();
        let p = triple.simulate(1.0, 3, SeedSpec::new(0, 0)).unwrap();
        for (t, v) in p.grid().iter().zip(p.values()) {
            assert!((t - v).abs() < 1e-15);
        }
    }

    #[test]
    fn levy_gamma_examples() {
        let zero = LevyTriple::new(0.0, 0.0, 0.0, None).unwrap();
        assert_eq!(zero.gamma(), 1.0);
        let cp = LevyTriple::new(0.0, 0.0, 1.0, Some(StepLaw::point(-1.0))).unwrap();
        let expected = ((-1f64).exp() - 1.0).exp();
        assert!((cp.gamma() - expected).abs() < 1e-15);
        assert!((cp.gamma() - 0.531464).abs() < 1e-6);
        assert!(cp.gamma_lt_one() && cp.triple_criterion());
        let bm = LevyTriple::new(1.0, -0.5, 0.0, None).unwrap();
        assert_eq!(bm.gamma(), 1.0);
        assert!(!bm.gamma_lt_one() && !bm.triple_criterion());
    }

    #[test]
    fn levy_rejects_bad_triples() {
        assert!(LevyTriple::new(-1.0, 0.0, 0.0, None).is_err());
        assert!(LevyTriple::new(0.0, 0.0, -1.0, None).is_err());
        assert!(LevyTriple::new(0.0, 0.0, 1.0, None).is_err());
        assert!(LevyTriple::new(0.0, 0.0, 1.0, Some(StepLaw::point(0.0))).is_err());
    }

    #[test]
    fn levy_depth_refinement_is_nested() {
        let triple = LevyTriple::new(
            0.7,
            -0.2,
            3.0,
            Some(StepLaw::new(vec![-1.0, 0.5], vec![0.4, 0.6]).unwrap()),
        )
        .unwrap();
        let seed = SeedSpec::new(99, 1);
        let coarse = triple.simulate(1.5, 3, seed).unwrap();
        let fine = triple.simulate(1.5, 6, seed).unwrap();
        assert_eq!(fine.dyadic_skeleton(3).unwrap().values(), coarse.values());
    }

    #[test]
    fn gbm_positive_and_nested() {
        let spec = GbmSpec::new(-0.5, 1.0, 1.0).unwrap();
        let seed = SeedSpec::new(5, 5);
        let p = spec.simulate(3.0, 8, seed).unwrap();
        assert!(p.values().iter().all(|v| *v > 0.0));
        assert_eq!(p.values()[0], 1.0);
        let q = spec.simulate(3.0, 5, seed).unwrap();
        assert_eq!(p.dyadic_skeleton(5).unwrap().values(), q.values());
        assert!(GbmSpec::new(0.0, 0.0, 1.0).is_err());
        assert!(GbmSpec::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn csbp_zero_start_is_absorbing() {
        let spec = CsbpSpec::new(-1.0, 0.5, 0.0).unwrap();
        let p = spec.simulate(1.0, 6, SeedSpec::new(1, 1)).unwrap();
        assert!(p.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn csbp_stays_at_zero_after_hitting() {
        let spec = CsbpSpec::new(-2.0, 2.0, 0.05).unwrap();
        let mut hits = 0;
        for i in 0..200 {
            let p = spec.simulate(2.0, 8, SeedSpec::new(2, i)).unwrap();
            assert!(p.values().iter().all(|v| *v >= 0.0));
            if let Some(first) = p.values().iter().position(|v| *v == 0.0) {
                hits += 1;
                assert!(p.values()[first..].iter().all(|v| *v == 0.0));
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn critical_unit_offspring_is_constant() {
        let spec = BranchingSpec::new(OffspringLaw::new(vec![0.0, 1.0]).unwrap(), 2.0, 3).unwrap();
        let p = spec.simulate(5.0, 4, SeedSpec::new(0, 0)).unwrap();
        assert!(p.values().iter().all(|v| *v == 3.0));
    }

    #[test]
    fn branching_integer_and_nonnegative() {
        let spec = BranchingSpec::new(OffspringLaw::binary(1.2).unwrap(), 1.0, 2).unwrap();
        for i in 0..100 {
            let p = spec.simulate(2.0, 5, SeedSpec::new(8, i)).unwrap();
            assert_eq!(p.values()[0], 2.0);
            assert!(p.values().iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
        }
    }

    #[test]
    fn branching_population_cap() {
        let spec =
            BranchingSpec::new(OffspringLaw::new(vec![0.0, 0.0, 1.0]).unwrap(), 5.0, 1).unwrap();
        let err = spec
            .simulate_with_cap(10.0, 2, SeedSpec::new(0, 0), 1000)
            .unwrap_err();
        assert_eq!(err, Error::PopulationCap { cap: 1000 });
    }

    #[test]
    fn gw_constant_and_cap() {
        let unit = OffspringLaw::new(vec![0.0, 1.0]).unwrap();
        let p = simulate_gw_discrete(&unit, 5, 4, SeedSpec::new(0, 0), 100).unwrap();
        assert!(p.values().iter().all(|v| *v == 4.0));
        let doubling = OffspringLaw::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(
            simulate_gw_discrete(&doubling, 20, 1, SeedSpec::new(0, 0), 1000),
            Err(Error::PopulationCap { cap: 1000 })
        );
    }
}
