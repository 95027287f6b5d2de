//! Monotone cubic (Fritsch-Carlson) interpolation of a tabulated potential.

use std::path::Path;

use crate::error::{Error, Result};

/// A tabulated potential with precomputed Hermite slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    xs: Vec<f64>,
    vs: Vec<f64>,
    slopes: Vec<f64>,
}

impl Table {
    pub fn new(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        if xs.len() != vs.len() {
            return Err(Error::Shape(format!(
                "table has {} nodes but {} values",
                xs.len(),
                vs.len()
            )));
        }
        if xs.len() < 3 {
            return Err(Error::Domain("a tabulated potential needs at least 3 nodes".into()));
        }
        if xs.iter().chain(vs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("tabulated nodes and values must be finite".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("table nodes must be strictly increasing".into()));
        }
        let slopes = fritsch_carlson_slopes(&xs, &vs);
        Ok(Self { xs, vs, slopes })
    }

    /// Reads a two-column `x V` text file; `#` starts a comment.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected two columns, found {}",
                    lineno + 1,
                    cols.len()
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            xs.push(parse(cols[0])?);
            vs.push(parse(cols[1])?);
        }
        Self::new(xs, vs)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.vs
    }

    pub fn range(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Value and first two derivatives of the interpolant at `x`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64, f64)> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&x) {
            return Err(Error::Domain(format!(
                "x = {x} outside the tabulated range [{lo}, {hi}]"
            )));
        }
        let i = match self.xs.partition_point(|&n| n <= x) {
            0 => 0,
            p if p >= self.xs.len() => self.xs.len() - 2,
            p => p - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.vs[i], self.vs[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);

        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1;
        let dv = ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / h;
        let d2v = ((12.0 * t - 6.0) * y0
            + (6.0 * t - 4.0) * m0
            + (-12.0 * t + 6.0) * y1
            + (6.0 * t - 2.0) * m1)
            / (h * h);
        Ok((v, dv, d2v))
    }

    /// Jump of the second derivative across interior node `i`.
    pub fn curvature_jump(&self, i: usize) -> f64 {
        assert!(i > 0 && i + 1 < self.xs.len());
        let x = self.xs[i];
        let left = self.segment_d2(i - 1, x);
        let right = self.segment_d2(i, x);
        right - left
    }

    fn segment_d2(&self, i: usize, x: f64) -> f64 {
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (y0, y1) = (self.vs[i], self.vs[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        ((12.0 * t - 6.0) * y0 + (6.0 * t - 4.0) * m0 + (-12.0 * t + 6.0) * y1 + (6.0 * t - 2.0) * m1)
            / (h * h)
    }
}

fn fritsch_carlson_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let w1 = 2.0 * h[i] + h[i - 1];
            let w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}
