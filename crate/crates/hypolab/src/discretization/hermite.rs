use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Normalised probabilists' Hermite functions `H_k / sqrt(k!)`, orthonormal
/// for the Maxwellian `(2 pi)^{-1/2} e^{-v^2/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteBasis {
    k: usize,
    sqrt: Vec<f64>,
}

impl HermiteBasis {
    pub fn new(k: usize) -> Result<Self> {
        if k < 4 {
            return Err(Error::Domain(format!("Hermite basis needs at least 4 modes, got {k}")));
        }
        Ok(Self {
            k,
            sqrt: (0..=k).map(|j| (j as f64).sqrt()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `sqrt(j)` for `j = 0..=K`.
    pub fn sqrt(&self, j: usize) -> f64 {
        self.sqrt[j]
    }

    /// Values of all `K` basis functions at `v`.
    pub fn eval(&self, v: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.k];
        out[0] = 1.0;
        out[1] = v;
        for j in 1..self.k - 1 {
            out[j + 1] = (v * out[j] - self.sqrt[j] * out[j - 1]) / self.sqrt[j + 1];
        }
        out
    }
}

/// Gauss-Hermite rule for the Maxwellian weight (Golub-Welsch).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(q: usize) -> Self {
        assert!(q >= 1);
        let mut jac = DMatrix::<f64>::zeros(q, q);
        for i in 1..q {
            let b = (i as f64).sqrt();
            jac[(i, i - 1)] = b;
            jac[(i - 1, i)] = b;
        }
        let eig = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..q)
            .map(|i| (eig.eigenvalues[i], eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(v, w)| w * f(*v)).sum()
    }
}

/// `int (a v^2 - a)^2 M(v) dv`, which equals `2 a^2`.
pub fn fourth_moment_form(a: f64) -> f64 {
    GaussHermite::new(4).integrate(|v| (a * v * v - a).powi(2))
}
