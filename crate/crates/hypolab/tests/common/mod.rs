#![allow(dead_code)]

use std::sync::Arc;

use hypolab::discretization::{build_operators, HermiteBasis, OperatorSet};
use hypolab::potential::PotentialSpec;
use hypolab::steady_state::{solve_poisson_boltzmann, Grid1D, SolverOptions, SteadyState};

pub fn steady(alpha: f64, mass: f64, n: usize, x_max: f64) -> SteadyState {
    let spec = PotentialSpec::power_law(alpha, x_max).unwrap();
    let grid = Grid1D::new(n, x_max).unwrap();
    solve_poisson_boltzmann(&spec, mass, &grid, &SolverOptions::with_tol(1e-12)).unwrap()
}

pub fn operators(alpha: f64, mass: f64, n: usize, x_max: f64, k: usize) -> OperatorSet {
    build_operators(Arc::new(steady(alpha, mass, n, x_max)), HermiteBasis::new(k).unwrap()).unwrap()
}

/// Dense smallest nonzero eigenvalue of `-(1/rho)(rho u')'` with no-flux ends,
/// assembled from scratch on the nodes.
pub fn dense_poincare(state: &SteadyState) -> f64 {
    use nalgebra::{DMatrix, SymmetricEigen};
    let n = state.len();
    let h = state.grid.dx();
    let rf: Vec<f64> = (0..n - 1).map(|j| (-(state.w[j] + state.w[j + 1]) / 2.0).exp()).collect();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for j in 0..n - 1 {
        let c = rf[j] / (h * h);
        let (a, b) = (j, j + 1);
        let sa = 1.0 / state.rho[a].sqrt();
        let sb = 1.0 / state.rho[b].sqrt();
        k[(a, a)] += c * sa * sa;
        k[(b, b)] += c * sb * sb;
        k[(a, b)] -= c * sa * sb;
        k[(b, a)] -= c * sa * sb;
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(k).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[1]
}
