//! Macroscopic elliptic machinery: the auxiliary operator `A`, the
//! macroscopic diffusion operator `(T Pi)^*(T Pi)` and the linearised
//! drift-diffusion-Poisson limit.

mod inequalities;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::discretization::{OperatorSet, PhaseState};
use crate::error::{Error, Result};
use crate::steady_state::{MacroField, Role};

pub use inequalities::{blw_terms, elliptic_claims, BlwTerms, EllipticClaims};

/// Output of the coupled elliptic-Poisson solve behind `A h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticSolveResult {
    pub u_g: MacroField,
    pub psi_g: MacroField,
    pub w_g: MacroField,
    pub iterations: usize,
    pub defect: f64,
}

/// Time-stepping scheme for the drift-diffusion limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionScheme {
    #[default]
    Implicit,
    Explicit,
}

/// `T Pi u` restricted to mode 1: `(u + psi_u)'` on the interior faces.
pub fn tpi(ops: &OperatorSet, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ops.n() - 1];
    ops.d(u, &mut out);
    for (o, m) in out.iter_mut().zip(ops.cumulative(u)) {
        *o -= m;
    }
    out
}

/// `-(1/rho_star)(rho_star w')'` with `w = u + psi_u`.
pub fn apply_tpi_star_tpi(u: &MacroField, ops: &OperatorSet) -> Result<MacroField> {
    if u.len() != ops.n() {
        return Err(Error::Shape(format!("field of length {} on a grid of {}", u.len(), ops.n())));
    }
    check_zero_average(ops, &u.values)?;
    Ok(MacroField::new(tpi_star_tpi(ops, &u.values), Role::Density))
}

fn tpi_star_tpi(ops: &OperatorSet, u: &[f64]) -> Vec<f64> {
    let flux = tpi(ops, u);
    let mut out = vec![0.0; ops.n()];
    ops.d_star(&flux, &mut out);
    out
}

fn check_zero_average(ops: &OperatorSet, u: &[f64]) -> Result<()> {
    let avg: f64 = ops.node_weights().iter().zip(u).map(|(w, x)| w * x).sum();
    let scale = u.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
    if avg.abs() > 1e-10 * scale {
        return Err(Error::Domain(format!("density has nonzero average {avg:.3e}")));
    }
    Ok(())
}

/// Dense factorisations of the macroscopic operators on one steady state.
///
/// Everything is stored in the scaled unknown `sqrt(dx rho_star) u`, where
/// the Gram matrix of the macroscopic scalar product is `I + dx M^T M` and
/// `T Pi` becomes the matrix `P`.
#[derive(Debug, Clone)]
pub struct MacroSolver {
    ops: OperatorSet,
    sqrt_wn: Vec<f64>,
    sqrt_wf: Vec<f64>,
    gram: DMatrix<f64>,
    p: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    condition: f64,
}

impl MacroSolver {
    pub fn new(ops: &OperatorSet) -> Result<Self> {
        let n = ops.n();
        let dx = ops.dx();
        let sqrt_wn: Vec<f64> = ops.node_weights().iter().map(|w| w.sqrt()).collect();
        let sqrt_wf: Vec<f64> = ops.face_weights().iter().map(|w| w.sqrt()).collect();

        let mut cum = DMatrix::<f64>::zeros(n - 1, n);
        for j in 0..n - 1 {
            for i in 0..=j {
                cum[(j, i)] = sqrt_wn[i];
            }
        }
        let mut gram = cum.tr_mul(&cum);
        gram *= dx;
        for i in 0..n {
            gram[(i, i)] += 1.0;
        }

        let mut p = DMatrix::<f64>::zeros(n - 1, n);
        for j in 0..n - 1 {
            let sf = sqrt_wf[j];
            for i in 0..=j {
                p[(j, i)] = -sf * sqrt_wn[i];
            }
            p[(j, j)] -= sf / (dx * sqrt_wn[j]);
            p[(j, j + 1)] += sf / (dx * sqrt_wn[j + 1]);
        }

        let system = &gram + p.tr_mul(&p);
        let (chol, condition) = factor(system)?;
        Ok(Self {
            ops: ops.clone(),
            sqrt_wn,
            sqrt_wf,
            gram,
            p,
            chol,
            condition,
        })
    }

    pub fn ops(&self) -> &OperatorSet {
        &self.ops
    }

    /// Lower Cholesky factor `L` of the macroscopic Gram matrix, so that
    /// `|u|^2 = |L^T sqrt(w) u|^2`.
    pub fn gram_factor(&self) -> Result<DMatrix<f64>> {
        self.gram
            .clone()
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::Solver("Gram matrix is not positive definite".into()))
    }

    /// Rough condition estimate of the factored system.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    fn to_scaled(&self, u: &[f64]) -> DVector<f64> {
        DVector::from_iterator(u.len(), u.iter().zip(&self.sqrt_wn).map(|(x, s)| x * s))
    }

    fn from_scaled(&self, v: &DVector<f64>) -> Vec<f64> {
        v.iter().zip(&self.sqrt_wn).map(|(x, s)| x / s).collect()
    }

    /// `A` acting through the flux: solves
    /// `(Id + (T Pi)^*(T Pi)) u_g = (T Pi)^* j` for a mode-1 profile `j`.
    pub fn solve_flux(&self, c1: &[f64]) -> Vec<f64> {
        let rhs = self.flux_rhs(c1);
        self.from_scaled(&self.chol.solve(&rhs))
    }

    fn flux_rhs(&self, c1: &[f64]) -> DVector<f64> {
        let weighted = DVector::from_iterator(c1.len(), c1.iter().zip(&self.sqrt_wf).map(|(x, s)| x * s));
        self.p.tr_mul(&weighted)
    }

    /// Solves `u_g + (T Pi)^*(T Pi) u_g = u_h`.
    pub fn resolvent(&self, u_h: &[f64]) -> Vec<f64> {
        let rhs = &self.gram * self.to_scaled(u_h);
        self.from_scaled(&self.chol.solve(&rhs))
    }

    pub fn apply_a(&self, h: &PhaseState) -> Result<EllipticSolveResult> {
        self.ops.check_shape(h)?;
        check_zero_average(&self.ops, &h.modes[0])?;
        let rhs = self.flux_rhs(&h.modes[1]);
        let sol = self.chol.solve(&rhs);
        let lhs = &self.gram * &sol + self.p.tr_mul(&(&self.p * &sol));
        let scale = rhs.norm();
        let defect = if scale > 0.0 { (lhs - &rhs).norm() / scale } else { 0.0 };
        if !(defect <= 1e-8) {
            return Err(Error::Solver(format!(
                "elliptic defect {defect:.3e} (condition estimate {:.3e})",
                self.condition
            )));
        }
        let u = self.from_scaled(&sol);
        let psi = self.ops.psi(&u);
        let w: Vec<f64> = u.iter().zip(&psi).map(|(a, b)| a + b).collect();
        Ok(EllipticSolveResult {
            u_g: MacroField::new(u, Role::Density),
            psi_g: MacroField::new(psi, Role::Potential),
            w_g: MacroField::new(w, Role::Generic),
            iterations: 1,
            defect,
        })
    }

    /// `A h` as a phase-space state (macroscopic).
    pub fn a_state(&self, h: &PhaseState) -> PhaseState {
        let mut out = self.ops.zeros();
        out.modes[0] = self.solve_flux(&h.modes[1]);
        out
    }

    /// `T A h`, which lives in mode 1 only.
    pub fn ta_state(&self, h: &PhaseState) -> PhaseState {
        let u = self.solve_flux(&h.modes[1]);
        let mut out = self.ops.zeros();
        out.modes[1] = tpi(&self.ops, &u);
        out
    }

    /// `<A h, h>`.
    pub fn a_pairing(&self, h: &PhaseState) -> f64 {
        let u = self.solve_flux(&h.modes[1]);
        self.ops.macro_inner(&u, &h.modes[0])
    }

    /// `<A g, h>`.
    pub fn a_pairing_with(&self, g: &PhaseState, h: &PhaseState) -> f64 {
        let u = self.solve_flux(&g.modes[1]);
        self.ops.macro_inner(&u, &h.modes[0])
    }

    /// `A T (Id - Pi) h`, which depends on `c_2` only.
    pub fn a_t_micro(&self, c2: &[f64]) -> Vec<f64> {
        let mut j = vec![0.0; self.ops.n() - 1];
        self.ops.e_star(c2, &mut j);
        let s = -self.ops.basis().sqrt(2);
        j.iter_mut().for_each(|v| *v *= s);
        self.solve_flux(&j)
    }

    /// Spectrum of `(T Pi)^*(T Pi)` in the macroscopic scalar product,
    /// ascending. The lowest value is the zero mode that the zero-average
    /// constraint removes.
    pub fn macro_spectrum(&self) -> Result<Vec<f64>> {
        let l = self
            .gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Solver("Gram matrix is not positive definite".into()))?;
        let ptp = self.p.tr_mul(&self.p);
        let linv = l
            .l()
            .solve_lower_triangular(&DMatrix::identity(self.ops.n(), self.ops.n()))
            .ok_or_else(|| Error::Solver("singular Cholesky factor".into()))?;
        let c = &linv * ptp * linv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(c).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// Smallest eigenvalue of `(T Pi)^*(T Pi)` on zero-average densities.
    /// Exact drift-diffusion flow `u(t)` at each of `times`, by the
    /// eigendecomposition of the generator in Gram-orthonormal coordinates.
    pub fn evolve_exact(&self, u0: &MacroField, times: &[f64]) -> Result<Vec<MacroField>> {
        if u0.len() != self.ops.n() {
            return Err(Error::Shape("initial density does not match the grid".into()));
        }
        check_zero_average(&self.ops, &u0.values)?;
        let n = self.ops.n();
        let l = self.gram_factor()?;
        let linv = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| Error::Solver("singular Cholesky factor".into()))?;
        let c = &linv * self.p.tr_mul(&self.p) * linv.transpose();
        let eig = SymmetricEigen::new((&c + c.transpose()) * 0.5);
        let y0 = l.transpose() * self.to_scaled(&u0.values);
        let coeff = eig.eigenvectors.tr_mul(&y0);
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            if !(t >= 0.0) {
                return Err(Error::Domain("times must be nonnegative".into()));
            }
            let decayed = DVector::from_iterator(
                n,
                coeff.iter().zip(eig.eigenvalues.iter()).map(|(a, mu)| a * (-t * mu.max(0.0)).exp()),
            );
            let y = &eig.eigenvectors * decayed;
            let v = linv.transpose() * y;
            out.push(MacroField::new(self.from_scaled(&v), Role::Density));
        }
        Ok(out)
    }

    pub fn macro_gap(&self) -> Result<f64> {
        Ok(self.macro_spectrum()?[1])
    }

    /// Largest eigenvalue of `(T Pi)^*(T Pi)` by power iteration in the
    /// macroscopic scalar product.
    pub fn diffusion_radius(&self, iterations: usize) -> f64 {
        let n = self.ops.n();
        let mut u: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + (i as f64 * 0.37).sin().abs())).collect();
        let shift: f64 = self.ops.node_weights().iter().zip(&u).map(|(w, x)| w * x).sum::<f64>() / self.ops.mass_grid();
        u.iter_mut().for_each(|x| *x -= shift);
        let mut est = 0.0;
        for _ in 0..iterations {
            let nu = self.ops.macro_inner(&u, &u).sqrt();
            u.iter_mut().for_each(|x| *x /= nu);
            let bu = tpi_star_tpi(&self.ops, &u);
            est = self.ops.macro_inner(&bu, &u);
            u = bu;
        }
        est
    }

    /// Advances `du/dt = -(T Pi)^*(T Pi) u` and returns every step,
    /// starting with `u0`.
    pub fn solve_drift_diffusion(
        &self,
        u0: &MacroField,
        t_end: f64,
        dt: f64,
        scheme: DiffusionScheme,
    ) -> Result<Vec<MacroField>> {
        if !(dt > 0.0) || !(t_end >= 0.0) {
            return Err(Error::Domain("dt must be positive and t_end nonnegative".into()));
        }
        if u0.len() != self.ops.n() {
            return Err(Error::Shape("initial density does not match the grid".into()));
        }
        check_zero_average(&self.ops, &u0.values)?;
        let steps = (t_end / dt).round() as usize;
        let mut out = Vec::with_capacity(steps + 1);
        out.push(MacroField::new(u0.values.clone(), Role::Density));
        match scheme {
            DiffusionScheme::Explicit => {
                let dx = self.ops.dx();
                if dt >= 0.5 * dx * dx {
                    return Err(Error::Stability(format!(
                        "explicit step {dt} exceeds dx^2/2 = {}",
                        0.5 * dx * dx
                    )));
                }
                let radius = self.diffusion_radius(300);
                if dt * radius >= 1.9 {
                    return Err(Error::Stability(format!(
                        "explicit step {dt} exceeds 1.9 / spectral radius = {}",
                        1.9 / radius
                    )));
                }
                let mut u = u0.values.clone();
                for _ in 0..steps {
                    let bu = tpi_star_tpi(&self.ops, &u);
                    u.iter_mut().zip(&bu).for_each(|(x, b)| *x -= dt * b);
                    out.push(MacroField::new(u.clone(), Role::Density));
                }
            }
            DiffusionScheme::Implicit => {
                let system = &self.gram + self.p.tr_mul(&self.p) * dt;
                let (chol, _) = factor(system)?;
                let mut v = self.to_scaled(&u0.values);
                for _ in 0..steps {
                    v = chol.solve(&(&self.gram * &v));
                    out.push(MacroField::new(self.from_scaled(&v), Role::Density));
                }
            }
        }
        Ok(out)
    }
}

fn factor(m: DMatrix<f64>) -> Result<(nalgebra::Cholesky<f64, nalgebra::Dyn>, f64)> {
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Solver("macroscopic system is not positive definite".into()))?;
    let diag: Vec<f64> = chol.l_dirty().diagonal().iter().map(|d| d * d).collect();
    let hi = diag.iter().copied().fold(0.0, f64::max);
    let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = hi / lo;
    if !condition.is_finite() || condition > 1e14 {
        return Err(Error::Solver(format!("condition estimate {condition:.3e} too large")));
    }
    Ok((chol, condition))
}
