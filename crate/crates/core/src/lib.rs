//! Generalized Doob maximal inequalities for processes that are only
//! `a`-achieving: simulators, closed-form bounds, exact oracles, Monte Carlo
//! verification, and the approximate-convexity toolkit.

pub mod achieving;
pub mod bounds;
pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod oracle;
pub mod paths;
pub mod simulators;

pub use error::{Error, Result};
pub use paths::{DiscretePath, GridPath, SeedSpec};

/// Formats a float with 17 significant digits, enough to round-trip any
/// `f64`; infinities and NaN are written as `inf`, `-inf` and `nan`.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}
