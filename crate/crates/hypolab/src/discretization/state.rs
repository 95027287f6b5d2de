use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of unknowns carried by mode `k` on a grid of `n` cells: even modes
/// sit on cell centres, odd modes on the `n - 1` interior faces.
pub fn mode_len(n: usize, k: usize) -> usize {
    if k % 2 == 0 {
        n
    } else {
        n - 1
    }
}

/// Perturbation `h(x, v) = sum_k c_k(x) H_k(v)` stored mode by mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub modes: Vec<Vec<f64>>,
    pub eps: f64,
    pub time: f64,
}

impl PhaseState {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            modes: (0..k).map(|j| vec![0.0; mode_len(n, j)]).collect(),
            eps: 1.0,
            time: 0.0,
        }
    }

    pub fn from_modes(modes: Vec<Vec<f64>>, n: usize) -> Result<Self> {
        for (k, m) in modes.iter().enumerate() {
            if m.len() != mode_len(n, k) {
                return Err(Error::Shape(format!(
                    "mode {k} has {} values, expected {}",
                    m.len(),
                    mode_len(n, k)
                )));
            }
        }
        Ok(Self {
            modes,
            eps: 1.0,
            time: 0.0,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.modes[0].len()
    }

    pub fn is_finite(&self) -> bool {
        self.modes.iter().flatten().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, a: f64) {
        self.modes.iter_mut().flatten().for_each(|v| *v *= a);
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut s = self.clone();
        s.scale(a);
        s
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &PhaseState) {
        for (m, o) in self.modes.iter_mut().zip(&other.modes) {
            for (x, y) in m.iter_mut().zip(o) {
                *x += a * y;
            }
        }
    }

    pub fn fill_zero(&mut self) {
        self.modes.iter_mut().flatten().for_each(|v| *v = 0.0);
    }

    pub fn max_abs(&self) -> f64 {
        self.modes.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Same shape, only mode `k` kept.
    pub fn only_mode(&self, k: usize) -> Self {
        let mut s = self.clone();
        for (j, m) in s.modes.iter_mut().enumerate() {
            if j != k {
                m.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        s
    }
}
