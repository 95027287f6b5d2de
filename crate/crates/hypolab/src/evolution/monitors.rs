use serde::{Deserialize, Serialize};

use crate::discretization::{GaussHermite, OperatorSet, PhaseState};
use crate::error::{Error, Result};
use crate::macro_ops::MacroSolver;

/// Gauss-Hermite velocity lattice with one node per Hermite mode, the
/// collocation points of the truncated expansion.
#[derive(Debug, Clone)]
pub struct Lattice {
    pub quad: GaussHermite,
    /// `table[q][k] = H_k(v_q)`.
    table: Vec<Vec<f64>>,
}

impl Lattice {
    pub fn new(ops: &OperatorSet) -> Self {
        let quad = GaussHermite::new(ops.k());
        let table = quad.nodes.iter().map(|&v| ops.basis().eval(v)).collect();
        Self { quad, table }
    }

    pub fn len(&self) -> usize {
        self.quad.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quad.nodes.is_empty()
    }

    /// `h(x_i, v_q)` and `d_v h(x_i, v_q)` with odd modes averaged to the
    /// cell centres.
    pub fn values(&self, ops: &OperatorSet, h: &PhaseState) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let nodes = ops.node_values(h);
        let n = ops.n();
        let k = ops.k();
        let mut val = vec![vec![0.0; self.len()]; n];
        let mut dv = vec![vec![0.0; self.len()]; n];
        for i in 0..n {
            for (q, row) in self.table.iter().enumerate() {
                let mut s = 0.0;
                let mut d = 0.0;
                for j in 0..k {
                    let c = nodes[j][i];
                    s += c * row[j];
                    if j + 1 < k {
                        d += ops.basis().sqrt(j + 1) * nodes[j + 1][i] * row[j];
                    }
                }
                val[i][q] = s;
                dv[i][q] = d;
            }
        }
        (val, dv)
    }
}

/// Fails when `1 + h < -tol` somewhere on the lattice.
pub fn check_positivity(ops: &OperatorSet, h: &PhaseState, lattice: &Lattice, tol: f64) -> Result<()> {
    let (val, _) = lattice.values(ops, h);
    let x = ops.state().grid.nodes();
    for (i, row) in val.iter().enumerate() {
        for (q, v) in row.iter().enumerate() {
            if 1.0 + v < -tol {
                return Err(Error::Positivity {
                    x: x[i],
                    v: lattice.quad.nodes[q],
                    value: 1.0 + v,
                });
            }
        }
    }
    Ok(())
}

/// Free energy, Fisher information and the sup of the field for a
/// nonlinear perturbation `f = (1 + h) f_star`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearMonitors {
    pub free_energy: f64,
    pub fisher: f64,
    pub psi_prime_sup: f64,
}

pub fn nonlinear_free_energy(ops: &OperatorSet, lattice: &Lattice, h: &PhaseState) -> Result<NonlinearMonitors> {
    let (val, dv) = lattice.values(ops, h);
    let wn = ops.node_weights();
    let w = &lattice.quad.weights;
    let mut entropy = 0.0;
    let mut fisher = 0.0;
    for i in 0..ops.n() {
        let mut e = 0.0;
        let mut f = 0.0;
        for q in 0..lattice.len() {
            let g = 1.0 + val[i][q];
            if !(g > 0.0) {
                return Err(Error::Domain(format!("1 + h = {g:.3e} is not positive")));
            }
            e += w[q] * (g * g.ln() - val[i][q]);
            f += w[q] * dv[i][q] * dv[i][q] / g;
        }
        entropy += wn[i] * e;
        fisher += wn[i] * f;
    }
    let field = ops.poisson_inner(&h.modes[0], &h.modes[0]);
    Ok(NonlinearMonitors {
        free_energy: entropy + 0.5 * field,
        fisher,
        psi_prime_sup: psi_prime_sup(ops, h),
    })
}

pub fn psi_prime_sup(ops: &OperatorSet, h: &PhaseState) -> f64 {
    ops.cumulative(&h.modes[0]).iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `H_delta[h] = |h|^2 / 2 + delta <A h, h>`.
pub fn evaluate_h_delta(solver: &MacroSolver, h: &PhaseState, delta: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&delta) {
        return Err(Error::Domain(format!("delta = {delta} outside [0, 2)")));
    }
    Ok(0.5 * solver.ops().norm_sq(h) + delta * solver.a_pairing(h))
}

/// The entropy production and its four `A`-terms, unscaled. For the
/// parabolic system
/// `total = minus_l / eps^2 + delta (a_t_pi + a_t_micro - t_a) / eps - delta a_l / eps^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationTerms {
    /// `-dH_delta/dt` evaluated from the exact right-hand side.
    pub total: f64,
    pub minus_l: f64,
    pub a_t_pi: f64,
    pub t_a: f64,
    pub a_t_micro: f64,
    pub a_l: f64,
}

/// `D_delta` for `eps dh/dt = -T h + L h / eps` (linear part only).
pub fn dissipation_terms(solver: &MacroSolver, h: &PhaseState, delta: f64, eps: f64) -> DissipationTerms {
    let ops = solver.ops();
    let th = ops.apply_t(h);
    let lh = ops.apply_l(h);
    let mut hdot = lh.scaled(1.0 / (eps * eps));
    hdot.axpy(-1.0 / eps, &th);
    let total = -(ops.inner(h, &hdot) + delta * (solver.a_pairing_with(&hdot, h) + solver.a_pairing_with(h, &hdot)));

    let c0 = &h.modes[0];
    let tpi_flux = crate::macro_ops::tpi(ops, c0);
    let a_t_pi = ops.macro_inner(&solver.solve_flux(&tpi_flux), c0);
    let t_a = ops.inner(&solver.ta_state(h), h);
    let a_t_micro = ops.macro_inner(&solver.a_t_micro(&h.modes[2]), c0);
    let a_l = -solver.a_pairing(h);
    DissipationTerms {
        total,
        minus_l: ops.dissipation(h),
        a_t_pi,
        t_a,
        a_t_micro,
        a_l,
    }
}
