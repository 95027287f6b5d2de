use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform cell-centred grid on `[-X_max, X_max]`.
///
/// Node `i` sits at the centre of cell `i`, so no node falls on the origin.
/// The `N - 1` interior faces separate neighbouring cells; the two
/// boundary faces coincide with `-X_max` and `X_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    x_max: f64,
    dx: f64,
}

impl Grid1D {
    pub fn new(n: usize, x_max: f64) -> Result<Self> {
        if n < 16 {
            return Err(Error::Domain(format!("grid needs at least 16 nodes, got {n}")));
        }
        if n % 2 != 0 {
            return Err(Error::Domain(format!("grid size must be even to stay symmetric, got {n}")));
        }
        if !(x_max > 0.0 && x_max.is_finite()) {
            return Err(Error::Domain(format!("X_max must be positive, got {x_max}")));
        }
        Ok(Self {
            n,
            x_max,
            dx: 2.0 * x_max / n as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn node(&self, i: usize) -> f64 {
        -self.x_max + (i as f64 + 0.5) * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }

    /// Interior face `j` lies between nodes `j` and `j + 1`.
    pub fn face(&self, j: usize) -> f64 {
        -self.x_max + (j as f64 + 1.0) * self.dx
    }

    pub fn faces(&self) -> Vec<f64> {
        (0..self.n - 1).map(|j| self.face(j)).collect()
    }

    /// Cell quadrature `sum_i f_i dx`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.n);
        f.iter().sum::<f64>() * self.dx
    }

    /// Cell quadrature of a product.
    pub fn integrate_product(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() * self.dx
    }

    /// Indices of the nodes in the outer `fraction` of the half-width.
    pub fn outer_nodes(&self, fraction: f64) -> impl Iterator<Item = usize> + '_ {
        let cut = self.x_max * (1.0 - fraction);
        (0..self.n).filter(move |&i| self.node(i).abs() >= cut)
    }
}
