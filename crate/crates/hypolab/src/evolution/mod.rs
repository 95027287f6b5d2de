//! Time integration of the linearised, parabolically scaled and nonlinear
//! kinetic systems, with the norm and entropy monitors.

mod monitors;
mod profiles;
mod stepper;

use serde::{Deserialize, Serialize};

use crate::discretization::PhaseState;
use crate::error::{Error, Result};
use crate::macro_ops::MacroSolver;

pub use monitors::{
    check_positivity, dissipation_terms, evaluate_h_delta, nonlinear_free_energy, psi_prime_sup, DissipationTerms,
    Lattice, NonlinearMonitors,
};
pub use profiles::{initial_state, Profile};
pub use stepper::{cfl_limit, step_linear, step_nonlinear, Mode, Stepper};

/// Settings of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mode: Mode,
    pub eps: f64,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    /// `delta` of the monitored `H_delta`.
    pub delta: f64,
    /// Assemble the four `A`-terms of the entropy production at each record.
    pub verbose: bool,
}

/// Monitors at one recorded time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorRecord {
    pub t: f64,
    pub norm_sq: f64,
    pub h_delta: f64,
    /// `-(H_n - H_{n-1}) / (t_n - t_{n-1})`; empty on the first record.
    pub d_delta: Option<f64>,
    pub free_energy: Option<f64>,
    pub fisher: Option<f64>,
    pub psi_prime_sup: f64,
    pub mass_defect: f64,
    pub micro_norm_sq: f64,
    pub macro_norm_sq: f64,
    /// `-<L h, h>`.
    pub dissipation: f64,
    /// `<Q[h], h>` and its bound `c |psi'|_inf sqrt(-<Lh,h>) |Pi h|`.
    pub q_pairing: Option<f64>,
    pub q_bound: Option<f64>,
    /// Same bound with the full norm of `h` in place of its macroscopic part.
    pub q_bound_full: Option<f64>,
    pub closure_energy: f64,
    pub terms: Option<DissipationTerms>,
}

/// A recorded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub config: SimConfig,
    pub substeps: usize,
    pub clip_events: usize,
    pub records: Vec<MonitorRecord>,
    /// Filled in by the harness.
    pub lambda_fit: Option<f64>,
}

impl Series {
    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&MonitorRecord) -> f64) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.t, f(r))).collect()
    }
}

/// Result of [`simulate`]: the series recorded so far, the final state and
/// the error that stopped the run, if any.
#[derive(Debug)]
pub struct SimOutcome {
    pub series: Series,
    pub final_state: PhaseState,
    pub error: Option<Error>,
}

fn record(
    solver: &MacroSolver,
    lattice: Option<&Lattice>,
    h: &PhaseState,
    cfg: &SimConfig,
    prev: Option<&MonitorRecord>,
) -> Result<MonitorRecord> {
    let ops = solver.ops();
    let norm_sq = ops.norm_sq(h);
    let h_delta = evaluate_h_delta(solver, h, cfg.delta)?;
    let d_delta = prev.and_then(|p| {
        let dt = h.time - p.t;
        (dt > 0.0).then(|| -(h_delta - p.h_delta) / dt)
    });
    let dissipation = ops.dissipation(h);
    let macro_norm_sq = ops.macro_norm_sq(h);
    let psi_sup = psi_prime_sup(ops, h);
    let (free_energy, fisher, q_pairing, q_bound, q_bound_full) = match lattice {
        Some(lat) => {
            let nl = nonlinear_free_energy(ops, lat, h)?;
            let q = ops.apply_q(h);
            let c = 1.0 + 6.0_f64.sqrt();
            (
                Some(nl.free_energy),
                Some(nl.fisher),
                Some(ops.inner(&q, h)),
                Some(c * psi_sup * dissipation.sqrt() * macro_norm_sq.sqrt()),
                Some(c * psi_sup * dissipation.sqrt() * norm_sq.sqrt()),
            )
        }
        None => (None, None, None, None, None),
    };
    Ok(MonitorRecord {
        t: h.time,
        norm_sq,
        h_delta,
        d_delta,
        free_energy,
        fisher,
        psi_prime_sup: psi_sup,
        mass_defect: ops.average(h).abs(),
        micro_norm_sq: ops.micro_norm_sq(h),
        macro_norm_sq,
        dissipation,
        q_pairing,
        q_bound,
        q_bound_full,
        closure_energy: ops.closure_energy(h),
        terms: cfg.verbose.then(|| dissipation_terms(solver, h, cfg.delta, cfg.eps)),
    })
}

/// Runs one simulation from `h0` (projected to zero average first).
pub fn simulate(solver: &MacroSolver, cfg: &SimConfig, h0: &PhaseState) -> Result<SimOutcome> {
    simulate_with_norm(solver, cfg, h0, solver.ops().transport_norm(200))
}

/// As [`simulate`] with a precomputed operator norm of `T`, so sweeps can
/// share it.
pub fn simulate_with_norm(solver: &MacroSolver, cfg: &SimConfig, h0: &PhaseState, transport_norm: f64) -> Result<SimOutcome> {
    let ops = solver.ops();
    ops.check_shape(h0)?;
    if cfg.record_every == 0 || !(cfg.t_end > 0.0) {
        return Err(Error::Config("record_every must be positive and t_end > 0".into()));
    }
    let nonlinear = cfg.mode == Mode::Nonlinear;
    if nonlinear && cfg.eps != 1.0 {
        return Err(Error::Config("nonlinear runs use eps = 1".into()));
    }
    if cfg.mode == Mode::Linear && cfg.eps != 1.0 {
        return Err(Error::Config("linear runs use eps = 1; use the parabolic mode".into()));
    }
    let mut stepper = Stepper::new(ops, cfg.dt, cfg.eps, nonlinear, transport_norm)?;
    let lattice = nonlinear.then(|| Lattice::new(ops));

    let mut h = h0.clone();
    ops.project_zero_average(&mut h);
    h.time = 0.0;
    h.eps = cfg.eps;
    if let Some(lat) = &lattice {
        check_positivity(ops, &h, lat, 1e-8)?;
    }
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut series = Series {
        config: *cfg,
        substeps: stepper.substeps(),
        clip_events: 0,
        records: Vec::with_capacity(steps / cfg.record_every + 2),
        lambda_fit: None,
    };
    series.records.push(record(solver, lattice.as_ref(), &h, cfg, None)?);
    for n in 1..=steps {
        let res = stepper.step(ops, &mut h).and_then(|_| match &lattice {
            Some(lat) => check_positivity(ops, &h, lat, 1e-8),
            None => Ok(()),
        });
        if let Err(e) = res {
            return Ok(SimOutcome {
                series,
                final_state: h,
                error: Some(e),
            });
        }
        h.time = n as f64 * cfg.dt;
        if n % cfg.record_every == 0 || n == steps {
            match record(solver, lattice.as_ref(), &h, cfg, series.records.last()) {
                Ok(r) => series.records.push(r),
                Err(e) => {
                    return Ok(SimOutcome {
                        series,
                        final_state: h,
                        error: Some(e),
                    })
                }
            }
        }
    }
    Ok(SimOutcome {
        series,
        final_state: h,
        error: None,
    })
}
