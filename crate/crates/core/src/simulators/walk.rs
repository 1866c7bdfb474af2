use std::fmt;
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, Exp1};

use super::laws::StepLaw;
use crate::error::{invalid, Error, Result};
use crate::paths::{DiscretePath, SeedSpec};

/// Random walk with independent, time-inhomogeneous finite-support steps.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalkSpec {
    steps: Vec<StepLaw>,
    start: f64,
}

impl RandomWalkSpec {
    pub fn new(steps: Vec<StepLaw>, start: f64) -> Result<Self> {
        if steps.is_empty() {
            return Err(invalid("random walk needs at least one step"));
        }
        if !start.is_finite() {
            return Err(invalid("random walk start must be finite"));
        }
        Ok(Self { steps, start })
    }

    /// `n` i.i.d. steps with the same law.
    pub fn homogeneous(law: StepLaw, n: usize, start: f64) -> Result<Self> {
        Self::new(vec![law; n], start)
    }

    pub fn steps(&self) -> &[StepLaw] {
        &self.steps
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Number of steps `N`.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of distinct step sequences, as a float to avoid overflow.
    pub fn path_count(&self) -> f64 {
        self.steps
            .iter()
            .map(|s| s.support().len() as f64)
            .product()
    }

    pub fn simulate(&self, seed: SeedSpec) -> DiscretePath {
        let mut rng = seed.rng();
        let mut s = self.start;
        let mut values = Vec::with_capacity(self.steps.len() + 1);
        values.push(s);
        for law in &self.steps {
            s += law.sample(&mut rng);
            values.push(s);
        }
        DiscretePath::new(values).expect("finite steps give finite paths")
    }

    pub fn mean_terminal(&self) -> f64 {
        self.start + self.steps.iter().map(StepLaw::mean).sum::<f64>()
    }

    /// `phi_i = E e^{Y_i}` and `pi_n = prod_{i=n}^{N-1} phi_i` (with `pi_N = 1`).
    pub fn phi_pi(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let phi: Vec<f64> = self.steps.iter().map(|s| s.mgf(1.0)).collect();
        if let Some(i) = phi.iter().position(|p| !p.is_finite()) {
            return Err(Error::Overflow(format!("E e^Y overflows at step {i}")));
        }
        let mut pi = vec![1.0; phi.len() + 1];
        for n in (0..phi.len()).rev() {
            pi[n] = phi[n] * pi[n + 1];
            if !pi[n].is_finite() {
                return Err(Error::Overflow(format!(
                    "product of E e^Y overflows at {n}"
                )));
            }
        }
        Ok((phi, pi))
    }
}

/// Rule producing the next increment of a time series from its history.
pub trait IncrementRule: Send + Sync {
    /// `history` holds `S_0..=S_n`; the return value is `S_{n+1} - S_n`.
    fn next_increment(&self, history: &[f64], rng: &mut dyn RngCore) -> f64;
}

/// Built-in and user-supplied increment generators.
#[derive(Clone)]
pub enum IncrementGenerator {
    /// `ell + E / rate` with `E ~ Exp(1)`, i.i.d.
    ShiftedExponential {
        rate: f64,
    },
    /// `ell + E (1 + excitation H_n) / rate`, where `H_n` is an exponentially
    /// decaying sum of past positive increments. Not Markov in `S`.
    SelfExciting {
        rate: f64,
        excitation: f64,
        decay: f64,
    },
    Custom(Arc<dyn IncrementRule>),
}

impl fmt::Debug for IncrementGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ShiftedExponential { rate } => f
                .debug_struct("ShiftedExponential")
                .field("rate", rate)
                .finish(),
            Self::SelfExciting {
                rate,
                excitation,
                decay,
            } => f
                .debug_struct("SelfExciting")
                .field("rate", rate)
                .field("excitation", excitation)
                .field("decay", decay)
                .finish(),
            Self::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

fn positive_exp(rng: &mut dyn RngCore) -> f64 {
    loop {
        let e: f64 = Exp1.sample(rng);
        if e > 0.0 {
            return e;
        }
    }
}

/// A time series whose jumps are bounded below: `S_{n+1} - S_n > ell`.
#[derive(Debug, Clone)]
pub struct TimeSeriesSpec {
    ell: f64,
    n_steps: usize,
    start: f64,
    generator: IncrementGenerator,
}

impl TimeSeriesSpec {
    pub fn new(
        ell: f64,
        n_steps: usize,
        start: f64,
        generator: IncrementGenerator,
    ) -> Result<Self> {
        if !(ell < 0.0 && ell.is_finite()) {
            return Err(invalid(format!("jump floor must be negative, got {ell}")));
        }
        if !start.is_finite() {
            return Err(invalid("time series start must be finite"));
        }
        match &generator {
            IncrementGenerator::ShiftedExponential { rate } if !(*rate > 0.0) => {
                return Err(invalid("exponential rate must be positive"))
            }
            IncrementGenerator::SelfExciting {
                rate,
                excitation,
                decay,
            } if !(*rate > 0.0 && *excitation >= 0.0 && (0.0..1.0).contains(decay)) => {
                return Err(invalid(
                    "self-exciting generator needs rate > 0, excitation >= 0, decay in [0, 1)",
                ))
            }
            _ => {}
        }
        Ok(Self {
            ell,
            n_steps,
            start,
            generator,
        })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn generator(&self) -> &IncrementGenerator {
        &self.generator
    }

    fn increment(&self, history: &[f64], rng: &mut dyn RngCore) -> f64 {
        match &self.generator {
            IncrementGenerator::ShiftedExponential { rate } => self.ell + positive_exp(rng) / rate,
            IncrementGenerator::SelfExciting {
                rate,
                excitation,
                decay,
            } => {
                let mut intensity = 0.0;
                for w in history.windows(2) {
                    intensity = decay * intensity + (w[1] - w[0]).max(0.0);
                }
                self.ell + positive_exp(rng) * (1.0 + excitation * intensity) / rate
            }
            IncrementGenerator::Custom(rule) => rule.next_increment(history, rng),
        }
    }

    /// Simulates `S_0..=S_N`, failing if any increment is not above the floor.
    pub fn simulate(&self, seed: SeedSpec) -> Result<DiscretePath> {
        let mut rng = seed.rng();
        let mut values = Vec::with_capacity(self.n_steps + 1);
        values.push(self.start);
        for _ in 0..self.n_steps {
            let inc = self.increment(&values, &mut rng);
            if !(inc > self.ell) {
                return Err(Error::JumpFloor {
                    increment: inc,
                    ell: self.ell,
                });
            }
            let next = values[values.len() - 1] + inc;
            if !next.is_finite() {
                return Err(Error::Overflow("time series left the finite range".into()));
            }
            values.push(next);
        }
        DiscretePath::new(values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fair_pm1() -> StepLaw {
        StepLaw::new(vec![1.0, -1.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn deterministic_walk() {
        let spec = RandomWalkSpec::homogeneous(StepLaw::point(-1.0), 3, 0.0).unwrap();
        let p = spec.simulate(SeedSpec::new(1, 2));
        assert_eq!(p.values(), &[0.0, -1.0, -2.0, -3.0]);
    }

    #[test]
    fn phi_pi_identity_steps() {
        let spec = RandomWalkSpec::homogeneous(StepLaw::point(0.0), 4, 0.0).unwrap();
        let (phi, pi) = spec.phi_pi().unwrap();
        assert!(phi.iter().all(|&p| p == 1.0));
        assert!(pi.iter().all(|&p| p == 1.0));
    }

    #[test]
    fn phi_pi_inhomogeneous_example() {
        let spec = RandomWalkSpec::new(vec![fair_pm1(), StepLaw::point(-1.0)], 0.0).unwrap();
        let (phi, pi) = spec.phi_pi().unwrap();
        // direct evaluation: phi_0 = cosh 1, phi_1 = e^-1
        let c = 1f64.cosh();
        let e_inv = (-1f64).exp();
        assert!((phi[0] - c).abs() < 1e-15);
        assert!((phi[1] - e_inv).abs() < 1e-15);
        assert!((phi[0] - 1.543081).abs() < 1e-6);
        assert!((phi[1] - 0.367879).abs() < 1e-6);
        assert!((pi[0] - c * e_inv).abs() < 1e-15);
        assert!((pi[0] - 0.567668).abs() < 1e-6);
        assert_eq!(pi[2], 1.0);
        let max_inv = pi.iter().map(|p| 1.0 / p).fold(0.0, f64::max);
        assert!((max_inv - std::f64::consts::E).abs() < 1e-14);
    }

    #[test]
    fn phi_pi_overflow() {
        let spec = RandomWalkSpec::homogeneous(StepLaw::point(800.0), 1, 0.0).unwrap();
        assert!(matches!(spec.phi_pi(), Err(Error::Overflow(_))));
        let spec = RandomWalkSpec::homogeneous(StepLaw::point(400.0), 2, 0.0).unwrap();
        assert!(matches!(spec.phi_pi(), Err(Error::Overflow(_))));
    }

    #[test]
    fn pi_telescopes() {
        let laws = vec![
            fair_pm1(),
            StepLaw::new(vec![0.5, -2.0, 1.0], vec![0.2, 0.3, 0.5]).unwrap(),
            StepLaw::point(0.3),
        ];
        let spec = RandomWalkSpec::new(laws, 0.0).unwrap();
        let (phi, pi) = spec.phi_pi().unwrap();
        let prod: f64 = phi.iter().product();
        assert!((pi[0] - prod).abs() < 1e-14 * prod);
    }

    #[test]
    fn time_series_respects_floor() {
        for gen in [
            IncrementGenerator::ShiftedExponential { rate: 2.0 },
            IncrementGenerator::SelfExciting {
                rate: 2.0,
                excitation: 0.5,
                decay: 0.7,
            },
        ] {
            let spec = TimeSeriesSpec::new(-0.5, 50, 0.0, gen).unwrap();
            for i in 0..200 {
                let p = spec.simulate(SeedSpec::new(3, i)).unwrap();
                assert!(p.values().windows(2).all(|w| w[1] - w[0] > -0.5));
            }
        }
    }

    struct Constant(f64);
    impl IncrementRule for Constant {
        fn next_increment(&self, _: &[f64], _: &mut dyn RngCore) -> f64 {
            self.0
        }
    }

    #[test]
    fn custom_rule_floor_violation() {
        let ok = TimeSeriesSpec::new(
            -1.0,
            3,
            0.0,
            IncrementGenerator::Custom(Arc::new(Constant(-0.5))),
        )
        .unwrap();
        assert_eq!(
            ok.simulate(SeedSpec::new(0, 0)).unwrap().values(),
            &[0.0, -0.5, -1.0, -1.5]
        );
        let bad = TimeSeriesSpec::new(
            -1.0,
            3,
            0.0,
            IncrementGenerator::Custom(Arc::new(Constant(-1.0))),
        )
        .unwrap();
        assert!(matches!(
            bad.simulate(SeedSpec::new(0, 0)),
            Err(Error::JumpFloor { .. })
        ));
    }

    #[test]
    fn time_series_validation() {
        let g = IncrementGenerator::ShiftedExponential { rate: 1.0 };
        assert!(TimeSeriesSpec::new(0.0, 3, 0.0, g.clone()).is_err());
        assert!(TimeSeriesSpec::new(
            -1.0,
            3,
            0.0,
            IncrementGenerator::ShiftedExponential { rate: 0.0 }
        )
        .is_err());
        assert!(TimeSeriesSpec::new(-1.0, 0, 0.0, g).is_ok());
    }
}
