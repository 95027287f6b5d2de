use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{mode_len, HermiteBasis, PhaseState};
use crate::error::{Error, Result};
use crate::steady_state::SteadyState;

/// Discrete `T`, `L`, `Pi` and the hypocoercive scalar product, all built
/// around one steady state.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    state: Arc<SteadyState>,
    basis: HermiteBasis,
    n: usize,
    dx: f64,
    /// `dx * rho_star` at the cell centres.
    w_node: Vec<f64>,
    /// `dx * rho_star` at the interior faces.
    w_face: Vec<f64>,
    /// `rho_face[i-1] / rho[i]` and `rho_face[i] / rho[i]`.
    left_ratio: Vec<f64>,
    right_ratio: Vec<f64>,
    /// `rho[j] / rho_face[j]` and `rho[j+1] / rho_face[j]`.
    face_left: Vec<f64>,
    face_right: Vec<f64>,
    mass_grid: f64,
}

impl OperatorSet {
    pub fn state(&self) -> &SteadyState {
        &self.state
    }

    pub fn shared_state(&self) -> Arc<SteadyState> {
        Arc::clone(&self.state)
    }

    pub fn basis(&self) -> &HermiteBasis {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.basis.len()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn node_weights(&self) -> &[f64] {
        &self.w_node
    }

    pub fn face_weights(&self) -> &[f64] {
        &self.w_face
    }

    pub fn weights(&self, k: usize) -> &[f64] {
        if k % 2 == 0 {
            &self.w_node
        } else {
            &self.w_face
        }
    }

    pub fn zeros(&self) -> PhaseState {
        PhaseState::zeros(self.n, self.k())
    }

    pub fn check_shape(&self, h: &PhaseState) -> Result<()> {
        if h.n_modes() != self.k() {
            return Err(Error::Shape(format!("state has {} modes, basis has {}", h.n_modes(), self.k())));
        }
        for (k, m) in h.modes.iter().enumerate() {
            if m.len() != mode_len(self.n, k) {
                return Err(Error::Shape(format!("mode {k} has {} values on a grid of {}", m.len(), self.n)));
            }
        }
        Ok(())
    }

    // ---- one-dimensional stencils ----

    /// Compact difference, centres to faces.
    pub fn d(&self, c: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.dx;
        for j in 0..self.n - 1 {
            out[j] = (c[j + 1] - c[j]) * inv;
        }
    }

    /// Weighted adjoint of `d`, faces to centres; approximates
    /// `-(1/rho) (rho j)'` with no flux through the outer boundary.
    pub fn d_star(&self, j: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.dx;
        let n = self.n;
        for i in 0..n {
            let left = if i > 0 { self.left_ratio[i] * j[i - 1] } else { 0.0 };
            let right = if i + 1 < n { self.right_ratio[i] * j[i] } else { 0.0 };
            out[i] = (left - right) * inv;
        }
    }

    /// Compact difference, faces to centres (boundary faces carry zero).
    pub fn e(&self, j: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.dx;
        let n = self.n;
        for i in 0..n {
            let right = if i + 1 < n { j[i] } else { 0.0 };
            let left = if i > 0 { j[i - 1] } else { 0.0 };
            out[i] = (right - left) * inv;
        }
    }

    /// Weighted adjoint of `e`, centres to faces.
    pub fn e_star(&self, c: &[f64], out: &mut [f64]) {
        let inv = 1.0 / self.dx;
        for j in 0..self.n - 1 {
            out[j] = -(self.face_right[j] * c[j + 1] - self.face_left[j] * c[j]) * inv;
        }
    }

    /// Cumulative perturbation mass `m_j = sum_{i <= j} dx rho_i u_i` at the
    /// interior faces; the Poisson field is `psi' = -m`.
    pub fn cumulative(&self, u: &[f64]) -> Vec<f64> {
        let mut m = vec![0.0; self.n - 1];
        let mut acc = 0.0;
        for j in 0..self.n - 1 {
            acc += self.w_node[j] * u[j];
            m[j] = acc;
        }
        m
    }

    /// `psi_h'` at the interior faces.
    pub fn psi_prime(&self, u: &[f64]) -> Vec<f64> {
        self.cumulative(u).into_iter().map(|m| -m).collect()
    }

    /// `psi_h` at the centres, up to a constant (zero at the first node).
    pub fn psi(&self, u: &[f64]) -> Vec<f64> {
        let m = self.cumulative(u);
        let mut p = vec![0.0; self.n];
        for i in 0..self.n - 1 {
            p[i + 1] = p[i] - self.dx * m[i];
        }
        p
    }

    // ---- kinetic operators ----

    /// Free transport `v d_x - W' d_v` without the Poisson term.
    pub fn apply_t_free_into(&self, h: &PhaseState, out: &mut PhaseState) {
        out.fill_zero();
        let mut buf_n = vec![0.0; self.n];
        let mut buf_f = vec![0.0; self.n - 1];
        for k in 0..self.k() - 1 {
            let s = self.basis.sqrt(k + 1);
            if k % 2 == 0 {
                self.d(&h.modes[k], &mut buf_f);
                axpy(&mut out.modes[k + 1], s, &buf_f);
                self.d_star(&h.modes[k + 1], &mut buf_n);
                axpy(&mut out.modes[k], -s, &buf_n);
            } else {
                self.e(&h.modes[k], &mut buf_n);
                axpy(&mut out.modes[k + 1], s, &buf_n);
                self.e_star(&h.modes[k + 1], &mut buf_f);
                axpy(&mut out.modes[k], -s, &buf_f);
            }
        }
    }

    /// Full linearised transport including `v psi_h'`.
    pub fn apply_t_into(&self, h: &PhaseState, out: &mut PhaseState) {
        self.apply_t_free_into(h, out);
        let m = self.cumulative(&h.modes[0]);
        for (o, mj) in out.modes[1].iter_mut().zip(&m) {
            *o -= mj;
        }
    }

    pub fn apply_t(&self, h: &PhaseState) -> PhaseState {
        let mut out = self.zeros();
        self.apply_t_into(h, &mut out);
        out
    }

    pub fn apply_l(&self, h: &PhaseState) -> PhaseState {
        let mut out = h.clone();
        for (k, m) in out.modes.iter_mut().enumerate() {
            let f = -(k as f64);
            m.iter_mut().for_each(|v| *v *= f);
        }
        out
    }

    pub fn apply_pi(&self, h: &PhaseState) -> PhaseState {
        h.only_mode(0)
    }

    pub fn apply_micro(&self, h: &PhaseState) -> PhaseState {
        let mut out = h.clone();
        out.modes[0].iter_mut().for_each(|v| *v = 0.0);
        out
    }

    /// Nonlinear term `psi_h' (d_v - v) h`: mode `k` receives
    /// `-sqrt(k) psi_h' c_{k-1}`, evaluated on the grid of mode `k`.
    pub fn apply_q_into(&self, h: &PhaseState, out: &mut PhaseState) {
        out.fill_zero();
        let force = self.psi_prime(&h.modes[0]);
        let n = self.n;
        for k in 1..self.k() {
            let s = self.basis.sqrt(k);
            let prev = &h.modes[k - 1];
            let target = &mut out.modes[k];
            if k % 2 == 1 {
                for j in 0..n - 1 {
                    target[j] = -s * force[j] * 0.5 * (prev[j] + prev[j + 1]);
                }
            } else {
                for i in 0..n {
                    let left = if i > 0 { force[i - 1] * prev[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { force[i] * prev[i] } else { 0.0 };
                    target[i] = -s * 0.5 * (left + right);
                }
            }
        }
    }

    pub fn apply_q(&self, h: &PhaseState) -> PhaseState {
        let mut out = self.zeros();
        self.apply_q_into(h, &mut out);
        out
    }

    // ---- scalar product ----

    /// `sum_k int c_k c'_k rho_star + int psi_1' psi_2'`, no average check.
    pub fn inner(&self, a: &PhaseState, b: &PhaseState) -> f64 {
        self.l2_inner(a, b) + self.poisson_inner(&a.modes[0], &b.modes[0])
    }

    /// Kinetic `L^2(dmu)` part of the scalar product.
    pub fn l2_inner(&self, a: &PhaseState, b: &PhaseState) -> f64 {
        a.modes
            .iter()
            .zip(&b.modes)
            .enumerate()
            .map(|(k, (x, y))| weighted_dot(self.weights(k), x, y))
            .sum()
    }

    /// `int psi_u' psi_v' dx`.
    pub fn poisson_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        let mu = self.cumulative(u);
        let mv = self.cumulative(v);
        self.dx * mu.iter().zip(&mv).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Macroscopic scalar product `int u v rho_star + int psi_u' psi_v'`.
    pub fn macro_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        weighted_dot(&self.w_node, u, v) + self.poisson_inner(u, v)
    }

    /// Checked scalar product on the zero-average space.
    pub fn scalar_product(&self, a: &PhaseState, b: &PhaseState) -> Result<f64> {
        self.check_shape(a)?;
        self.check_shape(b)?;
        for h in [a, b] {
            let avg = self.average(h);
            if avg.abs() > 1e-10 * (1.0 + h.max_abs()) {
                return Err(Error::Domain(format!("state has nonzero average {avg:.3e}")));
            }
        }
        Ok(self.inner(a, b))
    }

    pub fn norm_sq(&self, h: &PhaseState) -> f64 {
        self.inner(h, h)
    }

    pub fn micro_norm_sq(&self, h: &PhaseState) -> f64 {
        (1..self.k()).map(|k| weighted_dot(self.weights(k), &h.modes[k], &h.modes[k])).sum()
    }

    pub fn macro_norm_sq(&self, h: &PhaseState) -> f64 {
        self.macro_inner(&h.modes[0], &h.modes[0])
    }

    /// `-<L h, h> = sum_k k |c_k|^2`.
    pub fn dissipation(&self, h: &PhaseState) -> f64 {
        (1..self.k())
            .map(|k| k as f64 * weighted_dot(self.weights(k), &h.modes[k], &h.modes[k]))
            .sum()
    }

    /// `int int h f_star = int c_0 rho_star`.
    pub fn average(&self, h: &PhaseState) -> f64 {
        self.w_node.iter().zip(&h.modes[0]).map(|(w, c)| w * c).sum()
    }

    pub fn mass_grid(&self) -> f64 {
        self.mass_grid
    }

    /// Removes the constant part of `c_0` so the state has zero average.
    pub fn project_zero_average(&self, h: &mut PhaseState) {
        let shift = self.average(h) / self.mass_grid;
        h.modes[0].iter_mut().for_each(|c| *c -= shift);
    }

    /// All modes on the cell centres (odd modes averaged from the faces).
    pub fn node_values(&self, h: &PhaseState) -> Vec<Vec<f64>> {
        h.modes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                if k % 2 == 0 {
                    m.clone()
                } else {
                    (0..self.n)
                        .map(|i| {
                            let l = if i > 0 { m[i - 1] } else { 0.0 };
                            let r = if i + 1 < self.n { m[i] } else { 0.0 };
                            0.5 * (l + r)
                        })
                        .collect()
                }
            })
            .collect()
    }

    /// Relative energy in the two highest modes.
    pub fn closure_energy(&self, h: &PhaseState) -> f64 {
        let total = self.l2_inner(h, h);
        if total == 0.0 {
            return 0.0;
        }
        let k = self.k();
        (k - 2..k)
            .map(|j| weighted_dot(self.weights(j), &h.modes[j], &h.modes[j]))
            .sum::<f64>()
            / total
    }

    /// Largest `|<T a, b> + <a, T b>|` over seeded pairs, relative to
    /// `|a| |b|`.
    pub fn antisymmetry_defect(&self, seed: u64, trials: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..trials {
            let a = random_state(self, seed.wrapping_add(2 * t as u64), self.k());
            let b = random_state(self, seed.wrapping_add(2 * t as u64 + 1), self.k());
            let s = self.inner(&self.apply_t(&a), &b) + self.inner(&a, &self.apply_t(&b));
            worst = worst.max(s.abs() / (self.norm_sq(&a) * self.norm_sq(&b)).sqrt());
        }
        worst
    }

    /// Operator norm of `T` in the scalar product, by power iteration on
    /// `-T^2`; `T` is antisymmetric so this is its spectral radius.
    pub fn transport_norm(&self, iterations: usize) -> f64 {
        let mut x = random_state(self, 0x5eed, self.k());
        let mut est = 0.0;
        let mut t1 = self.zeros();
        let mut t2 = self.zeros();
        for _ in 0..iterations {
            let nx = self.norm_sq(&x).sqrt();
            if nx == 0.0 {
                return 0.0;
            }
            x.scale(1.0 / nx);
            self.apply_t_into(&x, &mut t1);
            self.apply_t_into(&t1, &mut t2);
            est = self.norm_sq(&t1).sqrt();
            std::mem::swap(&mut x, &mut t2);
            x.scale(-1.0);
        }
        est
    }
}

/// Builds the operator set on a steady state.
pub fn build_operators(state: Arc<SteadyState>, basis: HermiteBasis) -> Result<OperatorSet> {
    if state.residual > 1e-4 {
        return Err(Error::Domain(format!(
            "steady state residual {:.3e} is above 1e-4",
            state.residual
        )));
    }
    let n = state.len();
    if state.rho.len() != n || state.w.len() != n {
        return Err(Error::Shape("steady-state columns do not match the grid".into()));
    }
    let dx = state.grid.dx();
    let rho_f = state.rho_faces();
    let w_node: Vec<f64> = state.rho.iter().map(|r| dx * r).collect();
    let w_face: Vec<f64> = rho_f.iter().map(|r| dx * r).collect();
    let left_ratio = (0..n)
        .map(|i| if i > 0 { rho_f[i - 1] / state.rho[i] } else { 0.0 })
        .collect();
    let right_ratio = (0..n)
        .map(|i| if i + 1 < n { rho_f[i] / state.rho[i] } else { 0.0 })
        .collect();
    let face_left = (0..n - 1).map(|j| state.rho[j] / rho_f[j]).collect();
    let face_right = (0..n - 1).map(|j| state.rho[j + 1] / rho_f[j]).collect();
    let mass_grid = w_node.iter().sum();
    Ok(OperatorSet {
        state,
        basis,
        n,
        dx,
        w_node,
        w_face,
        left_ratio,
        right_ratio,
        face_left,
        face_right,
        mass_grid,
    })
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub(crate) fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

/// Smooth seeded state with content in the first `modes` Hermite modes:
/// each mode is a sum of three Gaussian bumps with random centres, widths
/// and amplitudes. The result has zero average.
pub fn random_state(ops: &OperatorSet, seed: u64, modes: usize) -> PhaseState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = &ops.state().grid;
    let reach = 0.6 * grid.x_max().min(4.0);
    let mut h = ops.zeros();
    for k in 0..modes.min(ops.k()) {
        let xs = if k % 2 == 0 { grid.nodes() } else { grid.faces() };
        for _ in 0..3 {
            let c: f64 = rng.random_range(-reach..reach);
            let s: f64 = rng.random_range(0.3..1.2);
            let a: f64 = rng.random_range(-1.0..1.0);
            for (v, x) in h.modes[k].iter_mut().zip(&xs) {
                *v += a * (-(x - c) * (x - c) / (2.0 * s * s)).exp();
            }
        }
    }
    ops.project_zero_average(&mut h);
    h
}
