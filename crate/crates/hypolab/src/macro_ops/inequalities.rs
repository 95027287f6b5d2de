use serde::{Deserialize, Serialize};

use super::{tpi, MacroSolver};
use crate::discretization::{weighted_dot, OperatorSet};

/// The three integrals of the weighted Bochner-Lichnerowicz-Weitzenbock
/// inequality `int |w''|^2 rho <= 6 int |(rho w')'|^2 / rho + 8 int (W' w')^2 rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlwTerms {
    pub hessian: f64,
    pub divergence: f64,
    pub drift: f64,
}

impl BlwTerms {
    pub fn rhs(&self) -> f64 {
        6.0 * self.divergence + 8.0 * self.drift
    }

    pub fn holds(&self, slack: f64) -> bool {
        self.hessian <= self.rhs() + slack
    }
}

pub fn blw_terms(ops: &OperatorSet, w: &[f64]) -> BlwTerms {
    let n = ops.n();
    let dx = ops.dx();
    let wn = ops.node_weights();
    let hessian = (1..n - 1)
        .map(|i| {
            let s = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (dx * dx);
            wn[i] * s * s
        })
        .sum();
    let mut grad = vec![0.0; n - 1];
    ops.d(w, &mut grad);
    let mut div = vec![0.0; n];
    ops.d_star(&grad, &mut div);
    let divergence = weighted_dot(wn, &div, &div);
    let dwf = ops.state().dw_faces();
    let drift_vals: Vec<f64> = grad.iter().zip(&dwf).map(|(g, d)| g * d).collect();
    let drift = weighted_dot(ops.face_weights(), &drift_vals, &drift_vals);
    BlwTerms {
        hessian,
        divergence,
        drift,
    }
}

/// Energy bounds for `u_g + (T Pi)^*(T Pi) u_g = u_h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipticClaims {
    /// `int u_g^2 rho_star`.
    pub u_sq: f64,
    /// `int |psi_g'|^2`.
    pub field_sq: f64,
    /// `int |w_g'|^2 rho_star`.
    pub grad_w_sq: f64,
    /// `int |u_g'|^2 rho_star`.
    pub grad_u_sq: f64,
    /// `|Pi h|^2`.
    pub pi_norm_sq: f64,
    /// `1 + 2 max rho_star`.
    pub k_const: f64,
}

impl EllipticClaims {
    pub fn first_holds(&self, slack: f64) -> bool {
        self.u_sq + self.field_sq + 2.0 * self.grad_w_sq <= self.pi_norm_sq * (1.0 + slack)
    }

    pub fn second_holds(&self, slack: f64) -> bool {
        self.grad_u_sq <= self.k_const * self.pi_norm_sq * (1.0 + slack)
    }
}

pub fn elliptic_claims(solver: &MacroSolver, u_h: &[f64]) -> EllipticClaims {
    let ops = solver.ops();
    let u = solver.resolvent(u_h);
    let wn = ops.node_weights();
    let wf = ops.face_weights();
    let m = ops.cumulative(&u);
    let flux = tpi(ops, &u);
    let mut du = vec![0.0; ops.n() - 1];
    ops.d(&u, &mut du);
    EllipticClaims {
        u_sq: weighted_dot(wn, &u, &u),
        field_sq: ops.dx() * m.iter().map(|x| x * x).sum::<f64>(),
        grad_w_sq: weighted_dot(wf, &flux, &flux),
        grad_u_sq: weighted_dot(wf, &du, &du),
        pi_norm_sq: ops.macro_inner(u_h, u_h),
        k_const: 1.0 + 2.0 * ops.state().rho_max(),
    }
}
