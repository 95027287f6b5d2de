//! Poisson-Boltzmann steady state and the one-dimensional Poisson inverse.

mod grid;
mod io;
mod poisson;
mod solver;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::Grid1D;
pub use io::{read_steady_state, write_steady_state, SteadySidecar};
pub use poisson::{poisson_solve_1d, PoissonSolution};
pub use solver::{solve_poisson_boltzmann, InitialGuess, SolverOptions};

/// What a macroscopic field represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Density,
    Potential,
    Flux,
    Cumulative,
    Generic,
}

/// Values of a macroscopic quantity on the nodes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacroField {
    pub values: Vec<f64>,
    pub role: Role,
}

impl MacroField {
    pub fn new(values: Vec<f64>, role: Role) -> Self {
        Self { values, role }
    }

    pub fn zeros(n: usize, role: Role) -> Self {
        Self::new(vec![0.0; n], role)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `int u rho_star dx` for a density-tagged field.
    pub fn weighted_average(&self, state: &SteadyState) -> f64 {
        state.grid.integrate_product(&self.values, &state.rho)
    }

    pub fn has_zero_average(&self, state: &SteadyState) -> bool {
        self.role == Role::Density && self.weighted_average(state).abs() <= 1e-10
    }
}

/// Stationary solution `rho_star = exp(-W_star)` with `W_star = V + phi_star`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub grid: Grid1D,
    pub rho: Vec<f64>,
    pub phi: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub d2w: Vec<f64>,
    pub mass: f64,
    pub residual: f64,
    pub alpha: Option<f64>,
    pub iterations: usize,
}

impl SteadyState {
    /// Assembles a state from nodal `phi` and the potential values, fixing
    /// `rho = exp(-V - phi)`.
    pub(crate) fn assemble(
        grid: Grid1D,
        v: &[f64],
        dv: &[f64],
        d2v: &[f64],
        phi: Vec<f64>,
        mass: f64,
        alpha: Option<f64>,
        iterations: usize,
    ) -> Result<Self> {
        let w: Vec<f64> = v.iter().zip(&phi).map(|(a, b)| a + b).collect();
        let rho: Vec<f64> = w.iter().map(|x| (-x).exp()).collect();
        let sol = poisson_solve_1d(&rho, grid.integrate(&rho), &grid)?;
        let dw: Vec<f64> = (0..grid.len())
            .map(|i| dv[i] + 0.5 * (sol.slope[i] + sol.slope[i + 1]))
            .collect();
        let d2w: Vec<f64> = d2v.iter().zip(&rho).map(|(a, r)| a - r).collect();
        let mut s = Self {
            grid,
            rho,
            phi,
            w,
            dw,
            d2w,
            mass,
            residual: 0.0,
            alpha,
            iterations,
        };
        s.residual = steady_residual(&s);
        s.validate()?;
        Ok(s)
    }

    /// Builds a state from exported columns; `W''` is recovered by
    /// differencing `W'`.
    pub fn from_columns(
        grid: Grid1D,
        rho: Vec<f64>,
        phi: Vec<f64>,
        w: Vec<f64>,
        dw: Vec<f64>,
        mass: f64,
        alpha: Option<f64>,
    ) -> Result<Self> {
        let n = grid.len();
        for (name, col) in [("rho_star", &rho), ("phi_star", &phi), ("W_star", &w), ("dW_star", &dw)] {
            if col.len() != n {
                return Err(Error::Shape(format!("column {name} has {} rows, grid has {n}", col.len())));
            }
        }
        let h = grid.dx();
        let d2w: Vec<f64> = (0..n)
            .map(|i| match i {
                0 => (dw[1] - dw[0]) / h,
                i if i == n - 1 => (dw[n - 1] - dw[n - 2]) / h,
                i => (dw[i + 1] - dw[i - 1]) / (2.0 * h),
            })
            .collect();
        let mut s = Self {
            grid,
            rho,
            phi,
            w,
            dw,
            d2w,
            mass,
            residual: 0.0,
            alpha,
            iterations: 0,
        };
        s.residual = steady_residual(&s);
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<()> {
        if self.rho.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Numeric("rho_star must be positive and finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `rho_star` at the interior faces (geometric mean of the neighbours).
    pub fn rho_faces(&self) -> Vec<f64> {
        self.w
            .windows(2)
            .map(|p| (-(0.5 * (p[0] + p[1]))).exp())
            .collect()
    }

    /// `W_star'` at the interior faces by differencing `W_star`.
    pub fn dw_faces(&self) -> Vec<f64> {
        let h = self.grid.dx();
        self.w.windows(2).map(|p| (p[1] - p[0]) / h).collect()
    }

    pub fn rho_max(&self) -> f64 {
        self.rho.iter().copied().fold(0.0, f64::max)
    }

    /// `rho_star`-mass in the outer tenth of the grid.
    pub fn boundary_leakage(&self) -> f64 {
        self.grid.outer_nodes(0.1).map(|i| self.rho[i]).sum::<f64>() * self.grid.dx()
    }
}

/// Sup-norm of `-phi'' - rho` by second differences, with the Neumann slopes
/// `+-M/2` closing the stencil at the two ends.
pub fn steady_residual(state: &SteadyState) -> f64 {
    let n = state.len();
    let h = state.grid.dx();
    let phi = &state.phi;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let right = if i + 1 < n { (phi[i + 1] - phi[i]) / h } else { -0.5 * state.mass };
        let left = if i > 0 { (phi[i] - phi[i - 1]) / h } else { 0.5 * state.mass };
        let lap = (right - left) / h;
        worst = worst.max((-lap - state.rho[i]).abs());
    }
    worst
}
