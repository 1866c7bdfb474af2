use std::io::{Read, Write};

use crate::error::{invalid, Error, Result};

/// A real function tabulated on a strictly increasing grid and extended
/// piecewise-linearly between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl GridFunction {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(invalid("grid function: xs and ys differ in length"));
        }
        if xs.len() < 2 {
            return Err(invalid("grid function needs at least two points"));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(invalid("grid function values must be finite"));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("grid function xs must be strictly increasing"));
        }
        Ok(Self { xs, ys })
    }

    /// Tabulates `f` on `n` equally spaced points of `[lo, hi]`.
    pub fn sample(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("need at least two grid points"));
        }
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self::new(xs, ys)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.domain();
        x >= lo && x <= hi
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            let (lo, hi) = self.domain();
            Err(Error::OutOfDomain { value: x, lo, hi })
        }
    }

    /// Piecewise-linear interpolation; nodes are reproduced exactly.
    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        let i = self.xs.partition_point(|&g| g < x);
        if i < self.xs.len() && self.xs[i] == x {
            return Ok(self.ys[i]);
        }
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let (y0, y1) = (self.ys[i - 1], self.ys[i]);
        let w = (x - x0) / (x1 - x0);
        Ok(y0 + w * (y1 - y0))
    }

    /// Index of the grid node nearest to `x` (clamped into the domain).
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = self.xs.partition_point(|&g| g < x);
        if i == 0 {
            0
        } else if i == self.xs.len() {
            self.xs.len() - 1
        } else if x - self.xs[i - 1] <= self.xs[i] - x {
            i - 1
        } else {
            i
        }
    }

    /// Largest change between adjacent nodes: bounds the error from
    /// evaluating the function at a node instead of a nearby point.
    pub fn quantization(&self) -> f64 {
        self.ys
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.first_decrease().is_none()
    }

    pub(crate) fn first_decrease(&self) -> Option<(f64, f64)> {
        (1..self.len())
            .find(|&i| self.ys[i] < self.ys[i - 1])
            .map(|i| (self.xs[i - 1], self.xs[i]))
    }

    pub(crate) fn check_monotone(&self) -> Result<()> {
        match self.first_decrease() {
            Some((x0, x1)) => Err(Error::NotMonotone { x0, x1 }),
            None => Ok(()),
        }
    }

    /// Minimum second divided difference over consecutive triples.
    pub fn min_second_difference(&self) -> f64 {
        (2..self.len())
            .map(|i| {
                let s0 = (self.ys[i - 1] - self.ys[i - 2]) / (self.xs[i - 1] - self.xs[i - 2]);
                let s1 = (self.ys[i] - self.ys[i - 1]) / (self.xs[i] - self.xs[i - 1]);
                (s1 - s0) / (self.xs[i] - self.xs[i - 2])
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Convex on the grid: consecutive slopes never drop by more than
    /// `tol` relative to their size. Slopes are compared rather than second
    /// divided differences, whose rounding noise grows like `1/h^2`.
    pub fn is_grid_convex(&self, tol: f64) -> bool {
        let slopes: Vec<f64> = (1..self.len())
            .map(|i| (self.ys[i] - self.ys[i - 1]) / (self.xs[i] - self.xs[i - 1]))
            .collect();
        slopes
            .windows(2)
            .all(|s| s[1] - s[0] >= -tol * s[0].abs().max(s[1].abs()).max(1.0))
    }

    pub fn map_values(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        Self {
            xs: self.xs.clone(),
            ys: self
                .xs
                .iter()
                .zip(&self.ys)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        }
    }

    /// Two-column CSV `x,f`; a non-numeric first row is treated as a header.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| invalid(format!("csv: {e}")))?;
            if rec.len() != 2 {
                return Err(invalid(format!(
                    "csv line {}: expected 2 columns",
                    line + 1
                )));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(x), Ok(y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                _ if line == 0 => continue,
                _ => return Err(invalid(format!("csv line {}: not a number", line + 1))),
            }
        }
        Self::new(xs, ys)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| invalid(format!("csv: {e}"));
        w.write_record(["x", "f"]).map_err(io)?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            w.write_record([crate::fmt_float(*x), crate::fmt_float(*y)])
                .map_err(io)?;
        }
        w.flush().map_err(|e| invalid(format!("csv: {e}")))?;
        Ok(())
    }
}
