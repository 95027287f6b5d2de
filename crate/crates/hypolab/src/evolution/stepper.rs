use serde::{Deserialize, Serialize};

use crate::discretization::{OperatorSet, PhaseState};
use crate::error::{Error, Result};

/// Which equation is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Linear,
    Parabolic,
    Nonlinear,
}

/// Largest step allowed by the advection condition
/// `dt <= 0.4 dx eps / sqrt(2K)`.
pub fn cfl_limit(ops: &OperatorSet, eps: f64) -> f64 {
    0.4 * ops.dx() * eps / (2.0 * ops.k() as f64).sqrt()
}

/// Strang splitting for `eps dh/dt + T h = L h / eps (+ eps Q[h])`: exact
/// collision half steps around a classical fourth-order Runge-Kutta
/// transport step, subcycled so that every stage stays inside the
/// norm-contracting region of the scheme.
#[derive(Debug, Clone)]
pub struct Stepper {
    dt: f64,
    eps: f64,
    nonlinear: bool,
    substeps: usize,
    decay: Vec<f64>,
    k1: PhaseState,
    k2: PhaseState,
    k3: PhaseState,
    k4: PhaseState,
    stage: PhaseState,
    q: PhaseState,
}

impl Stepper {
    /// `transport_norm` is the operator norm of `T` (see
    /// [`OperatorSet::transport_norm`]).
    pub fn new(ops: &OperatorSet, dt: f64, eps: f64, nonlinear: bool, transport_norm: f64) -> Result<Self> {
        if !(dt > 0.0) || !(eps > 0.0) {
            return Err(Error::Domain("dt and eps must be positive".into()));
        }
        let limit = cfl_limit(ops, eps);
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Stability(format!("dt = {dt} exceeds the advection limit {limit}")));
        }
        let reach = 1.05 * transport_norm * dt / eps;
        let substeps = ((reach / 2.5).ceil() as usize).max(1);
        let decay = (0..ops.k()).map(|k| (-(k as f64) * dt / (2.0 * eps * eps)).exp()).collect();
        let z = ops.zeros();
        Ok(Self {
            dt,
            eps,
            nonlinear,
            substeps,
            decay,
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            stage: z.clone(),
            q: z,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn substeps(&self) -> usize {
        self.substeps
    }

    fn collide_half(&self, h: &mut PhaseState) {
        for (m, f) in h.modes.iter_mut().zip(&self.decay) {
            m.iter_mut().for_each(|v| *v *= f);
        }
    }

    /// `out = -(T h) / eps + Q[h]` (the nonlinear term only when enabled).
    fn rhs(&mut self, ops: &OperatorSet, h: &PhaseState, out_slot: usize) {
        let out = match out_slot {
            1 => &mut self.k1,
            2 => &mut self.k2,
            3 => &mut self.k3,
            _ => &mut self.k4,
        };
        ops.apply_t_into(h, out);
        out.scale(-1.0 / self.eps);
        if self.nonlinear {
            ops.apply_q_into(h, &mut self.q);
            out.axpy(1.0, &self.q);
        }
    }

    fn transport(&mut self, ops: &OperatorSet, h: &mut PhaseState) {
        let tau = self.dt / self.substeps as f64;
        for _ in 0..self.substeps {
            self.rhs(ops, h, 1);
            self.stage.clone_from(h);
            self.stage.axpy(0.5 * tau, &self.k1);
            let s = self.stage.clone();
            self.rhs(ops, &s, 2);
            self.stage.clone_from(h);
            self.stage.axpy(0.5 * tau, &self.k2);
            let s = self.stage.clone();
            self.rhs(ops, &s, 3);
            self.stage.clone_from(h);
            self.stage.axpy(tau, &self.k3);
            let s = self.stage.clone();
            self.rhs(ops, &s, 4);
            h.axpy(tau / 6.0, &self.k1);
            h.axpy(tau / 3.0, &self.k2);
            h.axpy(tau / 3.0, &self.k3);
            h.axpy(tau / 6.0, &self.k4);
        }
    }

    /// Advances `h` by one step of length `dt`.
    pub fn step(&mut self, ops: &OperatorSet, h: &mut PhaseState) -> Result<()> {
        let t0 = h.time;
        self.collide_half(h);
        self.transport(ops, h);
        self.collide_half(h);
        h.time = t0 + self.dt;
        if !h.is_finite() {
            return Err(Error::BlowUp { last_good_time: t0 });
        }
        Ok(())
    }
}

/// One step of the linearised (or parabolic) system.
pub fn step_linear(ops: &OperatorSet, h: &mut PhaseState, dt: f64, eps: f64) -> Result<()> {
    let mut s = Stepper::new(ops, dt, eps, false, ops.transport_norm(100))?;
    s.step(ops, h)
}

/// One step of the nonlinear system in one dimension.
pub fn step_nonlinear(ops: &OperatorSet, h: &mut PhaseState, dt: f64) -> Result<()> {
    let mut s = Stepper::new(ops, dt, 1.0, true, ops.transport_norm(100))?;
    s.step(ops, h)?;
    super::monitors::check_positivity(ops, h, &super::monitors::Lattice::new(ops), 1e-8)
}
