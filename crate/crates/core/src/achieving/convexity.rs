//! delta-convexity estimation, convex envelopes, Hyers–Ulam decomposition
//! and the approximate Jensen margin.

use serde::Serialize;

use super::grid::GridFunction;
use crate::error::{invalid, Result};
use crate::montecarlo::McEstimate;

/// Estimated delta-convexity constant of a tabulated function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaEstimate {
    /// Largest convexity defect found, clamped below at 0.
    pub delta: f64,
    /// Interpolation error term reported alongside (largest adjacent jump).
    pub quantization: f64,
}

/// Largest `f(z) - t f(x) - (1-t) f(y)` over node pairs `(x, y)` and
/// weights `t`, where `z` is the node nearest to `t x + (1-t) y`.
///
/// The weight is recomputed so that `z = t' x + (1-t') y` holds exactly;
/// every defect is then a genuine defect of the tabulated function, which
/// keeps the estimate invariant under adding affine functions.
pub fn estimate_delta(f: &GridFunction, t_grid: &[f64]) -> Result<DeltaEstimate> {
    if t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) {
        return Err(invalid("weights must lie in [0, 1]"));
    }
    for required in [0.0, 0.5, 1.0] {
        if !t_grid.contains(&required) {
            return Err(invalid("weights must include 0, 0.5 and 1"));
        }
    }
    let xs = f.xs();
    let ys = f.ys();
    let mut delta: f64 = 0.0;
    for i in 0..xs.len() {
        for j in (i + 1)..xs.len() {
            let (x, y) = (xs[i], xs[j]);
            for &t in t_grid {
                let k = f.nearest_index(t * x + (1.0 - t) * y);
                let t_snap = (xs[k] - y) / (x - y);
                let defect = ys[k] - t_snap * ys[i] - (1.0 - t_snap) * ys[j];
                delta = delta.max(defect);
            }
        }
    }
    Ok(DeltaEstimate {
        delta,
        quantization: f.quantization(),
    })
}

/// Evenly spaced weights `0, 1/(n-1), ..., 1` (always containing 0.5 when
/// `n` is odd).
pub fn uniform_weights(n: usize) -> Vec<f64> {
    let n = n.max(3) | 1;
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Indices of the lower convex hull of the graph points, left to right.
pub fn lower_hull_indices(f: &GridFunction) -> Vec<usize> {
    let pts: Vec<(f64, f64)> = f.xs().iter().copied().zip(f.ys().iter().copied()).collect();
    let mut hull: Vec<usize> = Vec::with_capacity(pts.len());
    for (i, &p) in pts.iter().enumerate() {
        while hull.len() >= 2 {
            let o = pts[hull[hull.len() - 2]];
            let a = pts[hull[hull.len() - 1]];
            if cross(o, a, p) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Greatest convex minorant on the grid: the lower hull of the graph,
/// interpolated linearly between hull vertices.
pub fn convex_envelope(f: &GridFunction) -> GridFunction {
    let hull = lower_hull_indices(f);
    let xs = f.xs();
    let ys = f.ys();
    let mut env = Vec::with_capacity(xs.len());
    for w in hull.windows(2) {
        let (i0, i1) = (w[0], w[1]);
        let slope = (ys[i1] - ys[i0]) / (xs[i1] - xs[i0]);
        for k in i0..i1 {
            env.push(if k == i0 {
                ys[k]
            } else {
                (ys[i0] + slope * (xs[k] - xs[i0])).min(ys[k])
            });
        }
    }
    env.push(ys[ys.len() - 1]);
    GridFunction::new(xs.to_vec(), env).expect("envelope shares the input grid")
}

/// `f = g + h` with `g` convex and `sup |h| <= delta_used / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub g: GridFunction,
    pub h: GridFunction,
    /// `max (f - envelope)`.
    pub delta_used: f64,
}

/// Picks `h` near `f - g` so that `g + h == f` holds in floating point.
/// That is impossible when `|g|` and `|h|` are both much larger than `|f|`
/// and `f` has low-order bits that neither can carry; then `f - g` rounded
/// is kept, off by at most one unit in the last place of `max(|g|, |h|)`.
fn exact_remainder(f: f64, g: f64) -> f64 {
    let h = f - g;
    if g + h == f {
        return h;
    }
    let mut lo = h;
    let mut hi = h;
    for _ in 0..8 {
        lo = next_down(lo);
        hi = next_up(hi);
        if g + lo == f {
            return lo;
        }
        if g + hi == f {
            return hi;
        }
    }
    h
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

pub fn hyers_ulam_decompose(f: &GridFunction) -> Decomposition {
    let env = convex_envelope(f);
    let delta_used = f
        .ys()
        .iter()
        .zip(env.ys())
        .map(|(y, e)| y - e)
        .fold(0.0, f64::max);
    let g = env.map_values(|_, e| e + delta_used / 2.0);
    let h = GridFunction::new(
        f.xs().to_vec(),
        f.ys()
            .iter()
            .zip(g.ys())
            .map(|(&y, &gy)| exact_remainder(y, gy))
            .collect(),
    )
    .expect("remainder shares the input grid");
    Decomposition { g, h, delta_used }
}

/// Largest `|g + h - f|` over the grid, in units of
/// `eps * max(|g|, |h|)`; 0 means the reconstruction is exact.
pub fn reconstruction_error(d: &Decomposition, f: &GridFunction) -> f64 {
    d.g.ys()
        .iter()
        .zip(d.h.ys())
        .zip(f.ys())
        .map(|((g, h), f)| {
            let err = (g + h - f).abs();
            if err == 0.0 {
                0.0
            } else {
                err / (f64::EPSILON * g.abs().max(h.abs()))
            }
        })
        .fold(0.0, f64::max)
}

/// Approximate Jensen check: `mean f(X) - f(mean X) + delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenMargin {
    pub margin: f64,
    /// Standard error of the sample mean of `f(X)`.
    pub stderr: f64,
    pub quantization: f64,
}

pub fn approximate_jensen_margin(
    f: &GridFunction,
    samples: &[f64],
    delta: f64,
) -> Result<JensenMargin> {
    if samples.is_empty() {
        return Err(invalid("need at least one sample"));
    }
    let values = samples
        .iter()
        .map(|&x| f.eval(x))
        .collect::<Result<Vec<_>>>()?;
    let fx = McEstimate::from_samples(&values);
    let mean_x = samples.iter().sum::<f64>() / samples.len() as f64;
    // the sample mean of in-domain points is in the domain up to rounding
    let (lo, hi) = f.domain();
    let f_mean = f.eval(mean_x.clamp(lo, hi))?;
    Ok(JensenMargin {
        margin: fx.mean - f_mean + delta,
        stderr: fx.stderr,
        quantization: f.quantization(),
    })
}
