//! Path containers, dyadic time grids and seeded random streams.
//!
//! Every simulator returns either a [`DiscretePath`] (integer time) or a
//! [`GridPath`] (values on a time grid over `[0, T]`). Both reject
//! non-finite values at construction and are immutable afterwards.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_finite(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::EmptyPath);
    }
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// A realized trajectory `X_0, ..., X_N` on integer times.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    values: Vec<f64>,
}

impl DiscretePath {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false; paths hold at least one value.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of steps `N` (one less than the number of values).
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max(&self) -> f64 {
        max_of(&self.values)
    }

    /// `output[k] = max(values[0..=k])`.
    pub fn running_max(&self) -> DiscretePath {
        let mut acc = f64::NEG_INFINITY;
        let values = self
            .values
            .iter()
            .map(|&v| {
                acc = acc.max(v);
                acc
            })
            .collect();
        DiscretePath { values }
    }

    /// Per-path integrand of `E[X_N; max X_n >= alpha]`.
    pub fn restricted_terminal(&self, alpha: f64) -> f64 {
        restricted_terminal(self.max(), self.last(), alpha)
    }
}

/// `terminal` if `max >= alpha`, else zero. The comparison is weak.
#[inline]
pub fn restricted_terminal(max: f64, terminal: f64, alpha: f64) -> f64 {
    if max >= alpha {
        terminal
    } else {
        0.0
    }
}

/// Times `m T / 2^depth` for `m = 0..=2^depth`.
pub fn dyadic_grid(horizon: f64, depth: u32) -> Vec<f64> {
    let n = 1u64 << depth;
    let step = horizon / n as f64;
    (0..=n)
        .map(|m| if m == n { horizon } else { m as f64 * step })
        .collect()
}

/// A realized trajectory on a time grid `0 = t_0 < ... < t_K = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    horizon: f64,
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(horizon: f64, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if grid.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if grid.len() < 2 || grid[0] != 0.0 || grid[grid.len() - 1] != horizon {
            return Err(Error::InvalidGrid(
                "grid must start at 0 and end at the horizon".into(),
            ));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(
                "grid must be strictly increasing".into(),
            ));
        }
        check_finite(&values)?;
        Ok(Self {
            horizon,
            grid,
            values,
        })
    }

    /// Path on the dyadic grid with `2^depth` intervals.
    pub fn dyadic(horizon: f64, depth: u32, values: Vec<f64>) -> Result<Self> {
        Self::new(horizon, dyadic_grid(horizon, depth), values)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn max(&self) -> f64 {
        max_of(&self.values)
    }

    pub fn restricted_terminal(&self, alpha: f64) -> f64 {
        restricted_terminal(self.max(), self.last(), alpha)
    }

    pub fn to_discrete(&self) -> DiscretePath {
        DiscretePath {
            values: self.values.clone(),
        }
    }

    /// Values at the times `m T / 2^n`, `m = 0..=2^n`.
    pub fn dyadic_skeleton(&self, n: u32) -> Result<DiscretePath> {
        let tol = 1e-12 * self.horizon;
        let values = dyadic_grid(self.horizon, n)
            .into_iter()
            .map(|t| {
                let idx = self.grid.partition_point(|&g| g < t - tol);
                match self.grid.get(idx) {
                    Some(&g) if (g - t).abs() <= tol => Ok(self.values[idx]),
                    _ => Err(Error::MissingGridPoint { time: t }),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DiscretePath { values })
    }
}

/// Identifies one independent, reproducible random stream.
///
/// The master seed keys a ChaCha8 generator and the stream index selects
/// its 64-bit stream, so distinct pairs never share a generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(self.stream_index);
        rng
    }

    /// The stream `offset` positions further along under the same master seed.
    pub fn offset(&self, offset: u64) -> SeedSpec {
        SeedSpec {
            master_seed: self.master_seed,
            stream_index: self.stream_index.wrapping_add(offset),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn dp(v: &[f64]) -> DiscretePath {
        DiscretePath::new(v.to_vec()).unwrap()
    }

    #[test]
    fn running_max_examples() {
        assert_eq!(
            dp(&[1.0, 0.0, 2.0]).running_max().values(),
            &[1.0, 1.0, 2.0]
        );
        assert_eq!(dp(&[5.0]).running_max().values(), &[5.0]);
        assert_eq!(
            dp(&[-1.0, -3.0, -2.0]).running_max().values(),
            &[-1.0, -1.0, -1.0]
        );
    }

    #[test]
    fn rejects_empty_and_nan() {
        assert_eq!(DiscretePath::new(vec![]), Err(Error::EmptyPath));
        assert!(matches!(
            DiscretePath::new(vec![0.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(DiscretePath::new(vec![f64::INFINITY]).is_err());
        assert!(GridPath::new(1.0, vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(GridPath::new(1.0, vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 4]).is_err());
        assert!(GridPath::new(1.0, vec![0.1, 1.0], vec![0.0; 2]).is_err());
        assert!(GridPath::new(1.0, vec![0.0, 0.9], vec![0.0; 2]).is_err());
        assert!(GridPath::new(1.0, vec![0.0, 1.0], vec![0.0; 3]).is_err());
    }

    #[test]
    fn restricted_terminal_examples() {
        assert_eq!(dp(&[0.0, 2.0, 1.0]).restricted_terminal(2.0), 1.0);
        assert_eq!(dp(&[0.0, 1.0]).restricted_terminal(5.0), 0.0);
        assert_eq!(dp(&[3.0]).restricted_terminal(3.0), 3.0);
    }

    #[test]
    fn skeleton_examples() {
        let p = GridPath::new(1.0, vec![0.0, 0.5, 1.0], vec![1.0, 3.0, 2.0]).unwrap();
        assert_eq!(p.dyadic_skeleton(1).unwrap().values(), &[1.0, 3.0, 2.0]);
        assert_eq!(p.dyadic_skeleton(0).unwrap().values(), &[1.0, 2.0]);
        assert!(matches!(
            p.dyadic_skeleton(2),
            Err(Error::MissingGridPoint { .. })
        ));
    }

    #[test]
    fn skeleton_of_non_dyadic_grid_reports_missing_point() {
        let p = GridPath::new(1.0, vec![0.0, 0.4, 1.0], vec![0.0, 1.0, 2.0]).unwrap();
        assert_eq!(p.dyadic_skeleton(0).unwrap().values(), &[0.0, 2.0]);
        assert_eq!(
            p.dyadic_skeleton(1),
            Err(Error::MissingGridPoint { time: 0.5 })
        );
    }

    #[test]
    fn dyadic_grid_endpoints() {
        let g = dyadic_grid(3.7, 5);
        assert_eq!(g.len(), 33);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[32], 3.7);
        // coarse times appear bitwise in the fine grid
        let coarse = dyadic_grid(3.7, 2);
        for (m, t) in coarse.iter().enumerate() {
            assert_eq!(*t, g[m * 8]);
        }
    }

    #[test]
    fn seeds_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4)
            .map({
                let mut r = SeedSpec::new(7, 3).rng();
                move |_| r.random()
            })
            .collect();
        let b: Vec<u64> = (0..4)
            .map({
                let mut r = SeedSpec::new(7, 3).rng();
                move |_| r.random()
            })
            .collect();
        let c: Vec<u64> = (0..4)
            .map({
                let mut r = SeedSpec::new(7, 4).rng();
                move |_| r.random()
            })
            .collect();
        let d: Vec<u64> = (0..4)
            .map({
                let mut r = SeedSpec::new(8, 3).rng();
                move |_| r.random()
            })
            .collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    proptest! {
        #[test]
        fn running_max_idempotent_and_monotone(v in prop::collection::vec(-1e6f64..1e6, 1..40)) {
            let p = DiscretePath::new(v).unwrap();
            let r = p.running_max();
            prop_assert_eq!(r.running_max(), r.clone());
            prop_assert!(r.values().windows(2).all(|w| w[0] <= w[1]));
            prop_assert_eq!(r.last(), p.max());
        }

        #[test]
        fn skeleton_max_monotone_in_depth(depth in 0u32..7, seed in any::<u64>()) {
            let mut rng = SeedSpec::new(seed, 0).rng();
            let values: Vec<f64> = (0..=(1u64 << depth)).map(|_| rng.random_range(-5.0..5.0)).collect();
            let p = GridPath::dyadic(2.5, depth, values).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for n in 0..=depth {
                let m = p.dyadic_skeleton(n).unwrap().max();
                prop_assert!(m >= prev);
                prop_assert!(m <= p.max());
                prev = m;
            }
            prop_assert_eq!(prev, p.max());
        }
    }
}
