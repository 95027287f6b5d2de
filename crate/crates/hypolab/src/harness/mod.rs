//! Experiment orchestration: configuration, the staged pipeline, rate
//! fitting, verdicts and report files.

mod config;
mod fit;
mod output;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

pub use config::{
    BasisSection, DeltaSetting, ExperimentConfig, GridSection, OutputSection, PotentialSection, ProfileSection,
    RunSection, SteadySection,
};
pub use fit::{fit_decay_rate, DecayFit, FitWindow};
pub use output::{gnuplot_script, series_csv, sweep_csv, SERIES_HEADER, SWEEP_HEADER};

use crate::discretization::{build_operators, HermiteBasis, OperatorSet, PhaseState};
use crate::error::{Error, Result};
use crate::evolution::{cfl_limit, initial_state, simulate_with_norm, Mode, MonitorRecord, Series, SimConfig};
use crate::macro_ops::MacroSolver;
use crate::potential::{check_confinement_assumptions, AssumptionReport, PotentialSpec, RadialProbe};
use crate::rates::{certify, compute_eps_scaled, HypocoConstants, RateReport};
use crate::steady_state::{solve_poisson_boltzmann, write_steady_state, Grid1D, MacroField, Role, SolverOptions};

/// How far the pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    CheckAssumptions,
    SteadyState,
    CertifyRate,
    Simulate,
    EpsSweep,
    Full,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub force: bool,
    /// Worker threads for sweeps; `None` uses all cores.
    pub workers: Option<usize>,
}

/// One pass/fail verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadySummary {
    pub mass: f64,
    pub residual: f64,
    pub iterations: usize,
    pub rho_max: f64,
    pub boundary_leakage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub file: String,
    pub mode: Mode,
    pub eps: f64,
    pub delta: f64,
    pub dt: f64,
    pub substeps: usize,
    pub records: usize,
    pub clip_events: usize,
    pub fit: Option<DecayFit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub eps: f64,
    pub delta_eps: f64,
    pub zeta: f64,
    pub eta: f64,
    pub small_eps_ok: bool,
    pub lambda_fit: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionRow {
    pub eps: f64,
    pub time: f64,
    /// Macroscopic-norm distance between the kinetic density and the
    /// drift-diffusion flow.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub name: String,
    pub stage: Stage,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub assumptions: Option<AssumptionReport>,
    pub steady: Option<SteadySummary>,
    pub rates: Option<RateReport>,
    pub runs: Vec<RunSummary>,
    pub lambda_fit: Option<f64>,
    pub lambda_fit_band: Option<(f64, f64)>,
    pub sweep: Vec<SweepRow>,
    /// Largest swept `eps` below which every fitted rate clears `0.8 eta`.
    pub empirical_eps_threshold: Option<f64>,
    pub diffusion: Vec<DiffusionRow>,
    pub verdicts: Vec<Check>,
    pub files: Vec<String>,
}

impl RunReport {
    fn new(name: String, stage: Stage) -> Self {
        Self {
            name,
            stage,
            failed_stage: None,
            error: None,
            assumptions: None,
            steady: None,
            rates: None,
            runs: Vec::new(),
            lambda_fit: None,
            lambda_fit_band: None,
            sweep: Vec::new(),
            empirical_eps_threshold: None,
            diffusion: Vec::new(),
            verdicts: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Every stage ran and every verdict passed.
    pub fn passed(&self) -> bool {
        self.failed_stage.is_none() && self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, name: &str) -> Option<&Check> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    fn fail(&mut self, stage: &str, err: Error) {
        self.failed_stage = Some(stage.to_string());
        self.error = Some(err.to_string());
    }
}

/// Shared, read-only inputs of every simulation of one configuration.
pub struct Workspace {
    pub solver: MacroSolver,
    pub transport_norm: f64,
}

impl Workspace {
    pub fn ops(&self) -> &OperatorSet {
        self.solver.ops()
    }
}

/// Time step for `eps`: the configured base step scaled by `eps`, or a
/// fraction of the advection limit.
pub fn step_for(cfg: &ExperimentConfig, ops: &OperatorSet, eps: f64) -> f64 {
    match cfg.run.dt {
        Some(dt) => dt * eps,
        None => cfg.run.cfl_fraction * cfl_limit(ops, eps),
    }
}

fn sim_config(cfg: &ExperimentConfig, ops: &OperatorSet, mode: Mode, eps: f64, delta: f64) -> SimConfig {
    let dt = step_for(cfg, ops, eps);
    let steps = (cfg.run.t_end / dt).round().max(1.0) as usize;
    let record_every = match (cfg.run.record_every, eps == cfg.run.eps) {
        (Some(r), true) => r,
        _ => (steps / cfg.run.records).max(1),
    };
    SimConfig {
        mode,
        eps,
        dt,
        t_end: cfg.run.t_end,
        record_every,
        delta,
        verbose: cfg.run.verbose,
    }
}

/// Runs one simulation and fits the decay of `H_delta`.
pub fn run_series(ws: &Workspace, sim: &SimConfig, h0: &PhaseState, label: &str) -> Result<(Series, RunSummary)> {
    let out = simulate_with_norm(&ws.solver, sim, h0, ws.transport_norm)?;
    let mut series = out.series;
    let fit = fit_decay_rate(&series.column(|r| r.h_delta), FitWindow::default()).ok();
    series.lambda_fit = fit.map(|f| f.rate);
    let summary = RunSummary {
        label: label.to_string(),
        file: format!("series_{label}.csv"),
        mode: sim.mode,
        eps: sim.eps,
        delta: sim.delta,
        dt: sim.dt,
        substeps: series.substeps,
        records: series.records.len(),
        clip_events: series.clip_events,
        fit,
        error: out.error.map(|e| e.to_string()),
    };
    Ok((series, summary))
}

fn relative_nonincreasing(values: impl Iterator<Item = f64>, tol: f64) -> (bool, f64) {
    let v: Vec<f64> = values.collect();
    let mut worst = 0.0_f64;
    for w in v.windows(2) {
        let excess = (w[1] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE);
        worst = worst.max(excess);
    }
    (worst <= tol, worst)
}

/// Verdicts on a linear run against the certified rate `lambda`.
pub fn linear_checks(series: &Series, lambda: f64) -> Vec<Check> {
    let recs = &series.records;
    let delta = series.config.delta;
    let mut out = Vec::new();
    let (mono, worst) = relative_nonincreasing(recs.iter().map(|r| r.h_delta), 1e-8);
    out.push(Check::new("h_delta_monotone", mono, format!("largest relative increase {worst:.3e}")));
    let (nmono, nworst) = relative_nonincreasing(recs.iter().map(|r| r.norm_sq), 1e-8);
    out.push(Check::new("norm_monotone", nmono, format!("largest relative increase {nworst:.3e}")));
    let defect = recs.iter().map(|r| r.mass_defect).fold(0.0, f64::max);
    out.push(Check::new("zero_average", defect <= 1e-9, format!("max |average| {defect:.3e}")));
    match series.lambda_fit {
        Some(lf) => {
            out.push(Check::new(
                "rate_vs_certified",
                lf >= 0.9 * lambda,
                format!("lambda_fit {lf:.6} vs 0.9 * lambda {:.6}", 0.9 * lambda),
            ));
            let factor = (2.0 + delta) / (2.0 - delta);
            let n0 = recs[0].norm_sq;
            let ratio = recs
                .iter()
                .map(|r| r.norm_sq / (factor * n0 * (-lf * r.t).exp()))
                .fold(0.0, f64::max);
            out.push(Check::new(
                "norm_bound",
                ratio <= 1.0,
                format!("max |h|^2 / ((2+d)/(2-d) |h0|^2 exp(-lambda_fit t)) = {ratio:.4}"),
            ));
        }
        None => out.push(Check::new("rate_vs_certified", false, "no decay fit".into())),
    }
    let mut slack = f64::INFINITY;
    for w in recs.windows(2).filter(|w| w[0].t >= 1.0) {
        let bound = w[0].h_delta * (-0.9 * lambda * (w[1].t - w[0].t)).exp();
        if bound > 0.0 {
            slack = slack.min(1.0 - w[1].h_delta / bound);
        }
    }
    out.push(Check::new(
        "h_delta_stepwise_rate",
        slack >= -1e-8,
        format!("min relative slack of H(t+) <= H(t) exp(-0.9 lambda dt) after t = 1: {slack:.3e}"),
    ));
    out
}

/// Verdicts on a nonlinear run and its linear companion.
pub fn nonlinear_checks(nonlinear: &Series, linear: &Series, mass: f64) -> Vec<Check> {
    let recs = &nonlinear.records;
    let mut out = Vec::new();
    let (mono, worst) = relative_nonincreasing(recs.iter().filter_map(|r| r.free_energy), 1e-8);
    out.push(Check::new("free_energy_monotone", mono, format!("largest relative increase {worst:.3e}")));
    let lemma = recs
        .iter()
        .filter_map(|r| r.free_energy.map(|fe| r.psi_prime_sup.powi(2) / (4.0 * mass * fe)))
        .filter(|x| x.is_finite())
        .fold(0.0, f64::max);
    out.push(Check::new(
        "field_by_free_energy",
        lemma <= 1.0,
        format!("max |psi'|^2 / (4 M F) = {lemma:.4}"),
    ));
    let worst_q = |bound: fn(&MonitorRecord) -> Option<f64>| {
        recs.iter()
            .filter_map(|r| match (r.q_pairing, bound(r)) {
                (Some(p), Some(b)) if b > 0.0 => Some(p.abs() / b),
                (Some(p), Some(_)) if p != 0.0 => Some(f64::INFINITY),
                _ => None,
            })
            .fold(0.0, f64::max)
    };
    let q = worst_q(|r| r.q_bound);
    out.push(Check::new(
        "quadratic_term_bound",
        q <= 1.0 + 1e-12,
        format!("max |<Q h, h>| / (c |psi'| sqrt(D) |Pi h|) = {q:.4}"),
    ));
    let q = worst_q(|r| r.q_bound_full);
    out.push(Check::new(
        "quadratic_term_bound_full_norm",
        q <= 1.0 + 1e-12,
        format!("max |<Q h, h>| / (c |psi'| sqrt(D) |h|) = {q:.4}"),
    ));
    match (nonlinear.lambda_fit, linear.lambda_fit) {
        (Some(a), Some(b)) => out.push(Check::new(
            "nonlinear_matches_linear",
            (a - b).abs() <= 0.05 * b.abs(),
            format!("nonlinear {a:.6} vs linear {b:.6}"),
        )),
        _ => out.push(Check::new("nonlinear_matches_linear", false, "missing decay fit".into())),
    }
    out
}

/// Sweep table without fitted rates.
pub fn sweep_table(constants: &HypocoConstants, eps_list: &[f64]) -> Vec<SweepRow> {
    eps_list
        .iter()
        .map(|&eps| {
            let s = compute_eps_scaled(constants.lambda_m, constants.lambda_big, constants.c_m, eps);
            SweepRow {
                eps,
                delta_eps: s.delta_eps,
                zeta: s.zeta,
                eta: s.eta,
                small_eps_ok: s.small_eps_ok,
                lambda_fit: None,
                error: None,
            }
        })
        .collect()
}

pub fn sweep_checks(rows: &[SweepRow]) -> (Vec<Check>, Option<f64>) {
    let fitted: Vec<(f64, f64, f64)> = rows
        .iter()
        .filter_map(|r| r.lambda_fit.map(|l| (r.eps, l, r.eta)))
        .collect();
    let mut out = Vec::new();
    let complete = fitted.len() == rows.len() && !rows.is_empty();
    let floor_ok = complete && fitted.iter().all(|(_, l, eta)| *l >= 0.8 * eta);
    let worst = fitted
        .iter()
        .map(|(_, l, eta)| l / (0.8 * eta))
        .fold(f64::INFINITY, f64::min);
    out.push(Check::new(
        "sweep_rate_floor",
        floor_ok,
        format!("min lambda_fit / (0.8 eta) = {worst:.4} over {} of {} runs", fitted.len(), rows.len()),
    ));
    let hi = fitted.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = fitted.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let spread = hi / lo;
    out.push(Check::new(
        "sweep_spread",
        complete && spread <= 3.0,
        format!("max / min lambda_fit = {spread:.4}"),
    ));
    let mut threshold = None;
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    for r in &sorted {
        match r.lambda_fit {
            Some(l) if l >= 0.8 * r.eta => threshold = Some(r.eps),
            _ => break,
        }
    }
    (out, threshold)
}

/// Kinetic density versus the drift-diffusion flow at `time` for each
/// `eps`, measured in the macroscopic norm.
pub fn diffusion_distances(
    ws: &Workspace,
    cfg: &ExperimentConfig,
    h0: &PhaseState,
    eps_list: &[f64],
    time: f64,
) -> Result<Vec<DiffusionRow>> {
    let ops = ws.ops();
    let mut u0 = h0.clone();
    ops.project_zero_average(&mut u0);
    let u0 = MacroField::new(u0.modes[0].clone(), Role::Density);
    eps_list
        .par_iter()
        .map(|&eps| {
            let dt = step_for(cfg, ops, eps);
            let steps = (time / dt).ceil().max(1.0);
            let sim = SimConfig {
                mode: if eps == 1.0 { Mode::Linear } else { Mode::Parabolic },
                eps,
                dt: time / steps,
                t_end: time,
                record_every: usize::MAX,
                delta: 0.0,
                verbose: false,
            };
            let out = simulate_with_norm(&ws.solver, &sim, h0, ws.transport_norm)?;
            if let Some(e) = out.error {
                return Err(e);
            }
            let t = out.final_state.time;
            let exact = ws.solver.evolve_exact(&u0, &[t])?;
            let d: Vec<f64> = out.final_state.modes[0]
                .iter()
                .zip(&exact[0].values)
                .map(|(a, b)| a - b)
                .collect();
            Ok(DiffusionRow {
                eps,
                time: t,
                distance: ops.macro_inner(&d, &d).sqrt(),
            })
        })
        .collect()
}

/// Distances should halve when `eps` halves: ratios in `[4/3, 3]`.
pub fn diffusion_checks(rows: &[DiffusionRow]) -> Vec<Check> {
    rows.windows(2)
        .map(|w| {
            let ratio = w[0].distance / w[1].distance;
            Check::new(
                &format!("diffusion_ratio_{}_{}", w[0].eps, w[1].eps),
                (2.0 / 1.5..=3.0).contains(&ratio),
                format!("distance ratio {ratio:.4} (eps {} -> {})", w[0].eps, w[1].eps),
            )
        })
        .collect()
}

/// Closed-form potentials are probed out to this radius, whatever the
/// simulation domain.
pub const ASSUMPTION_PROBE_RADIUS: f64 = 64.0;

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs the pipeline up to `stage`, writing every artifact into
/// `opts.out`. Stage failures are recorded in the report rather than
/// returned.
pub fn run_pipeline(cfg: &ExperimentConfig, stage: Stage, opts: &RunOptions) -> Result<RunReport> {
    ensure_dir(&opts.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut report = RunReport::new(cfg.name.clone().unwrap_or_else(|| "experiment".into()), stage);
    pool.install(|| pipeline(cfg, stage, opts, &mut report));
    let name = output::write_json(&opts.out, "report.json", &report)?;
    report.files.push(name);
    Ok(report)
}

fn pipeline(cfg: &ExperimentConfig, stage: Stage, opts: &RunOptions, report: &mut RunReport) {
    let dir = opts.out.as_path();
    macro_rules! attempt {
        ($stage:expr, $e:expr) => {
            match $e {
                Ok(v) => v,
                Err(err) => {
                    report.fail($stage, err);
                    return;
                }
            }
        };
    }

    let spec = attempt!("check-assumptions", cfg.potential_spec());
    let (probe_spec, probe_radius) = match cfg.potential {
        PotentialSection::PowerLaw { alpha } => {
            let r = cfg.grid.x_max.max(ASSUMPTION_PROBE_RADIUS);
            (attempt!("check-assumptions", PotentialSpec::power_law(alpha, r)), r)
        }
        PotentialSection::Table { .. } => (spec.clone(), cfg.grid.x_max),
    };
    let assumptions = attempt!(
        "check-assumptions",
        check_confinement_assumptions(&probe_spec, cfg.steady.mass, &RadialProbe::for_domain(probe_radius))
    );
    let regime = spec.is_admissible_regime();
    let ok = assumptions.all_pass() && regime;
    let mut failing: Vec<String> = assumptions.failing().iter().map(|s| s.to_string()).collect();
    if !regime {
        failing.push("power-law exponent not above 1".into());
    }
    report.verdicts.push(Check::new(
        "assumptions",
        ok,
        if ok {
            "all confinement assumptions pass".into()
        } else {
            format!("not passing: {}", failing.join(", "))
        },
    ));
    report.assumptions = Some(assumptions);
    if let Ok(name) = output::write_json(dir, "assumptions.json", &report.assumptions) {
        report.files.push(name);
    }
    if !ok && !opts.force {
        report.fail(
            "check-assumptions",
            Error::Domain("assumption check failed; rerun with --force to continue".into()),
        );
        return;
    }
    if stage == Stage::CheckAssumptions {
        return;
    }

    let grid = attempt!("steady-state", Grid1D::new(cfg.grid.n, cfg.grid.x_max));
    let solver_opts = SolverOptions {
        tol: cfg.steady.tol,
        max_iter: cfg.steady.max_iter,
        ..SolverOptions::default()
    };
    let state = attempt!("steady-state", solve_poisson_boltzmann(&spec, cfg.steady.mass, &grid, &solver_opts));
    report.steady = Some(SteadySummary {
        mass: state.mass,
        residual: state.residual,
        iterations: state.iterations,
        rho_max: state.rho_max(),
        boundary_leakage: state.boundary_leakage(),
    });
    attempt!("steady-state", write_steady_state(&state, dir, "steady_state"));
    report.files.extend(["steady_state.csv".to_string(), "steady_state.json".to_string()]);
    if stage == Stage::SteadyState {
        return;
    }

    let basis = attempt!("certify-rate", HermiteBasis::new(cfg.basis.k));
    let ops = attempt!("certify-rate", build_operators(Arc::new(state), basis));
    let solver = attempt!("certify-rate", MacroSolver::new(&ops));
    let policy = attempt!("certify-rate", cfg.run.delta.policy());
    let mut eps_all = cfg.run.eps_list.clone();
    if !eps_all.contains(&cfg.run.eps) {
        eps_all.push(cfg.run.eps);
    }
    let rates = attempt!("certify-rate", certify(&solver, cfg.run.cm_method, policy, &eps_all));
    report.verdicts.push(Check::new(
        "rate_scan",
        rates.scan_nonnegative && rates.scan_tight,
        format!(
            "form nonnegative at lambda: {}, violated at 1.05 lambda: {}",
            rates.scan_nonnegative, rates.scan_tight
        ),
    ));
    attempt!("certify-rate", output::write_json(dir, "rates.json", &rates).map(|n| report.files.push(n)));
    let constants = rates.constants;
    report.rates = Some(rates);
    if stage == Stage::CertifyRate {
        return;
    }

    let ws = Workspace {
        transport_norm: solver.ops().transport_norm(300),
        solver,
    };
    let ops = ws.ops();
    let nonlinear = cfg.run.mode == Mode::Nonlinear;
    let (h0, clipped) = attempt!(
        "simulate",
        initial_state(ops, &cfg.profile.shape, cfg.profile.amplitude, nonlinear)
    );
    let mut series_files = Vec::new();

    if matches!(stage, Stage::Simulate | Stage::Full) {
        let eps = cfg.run.eps;
        let delta = if cfg.run.mode == Mode::Parabolic {
            compute_eps_scaled(constants.lambda_m, constants.lambda_big, constants.c_m, eps).delta_eps
        } else {
            constants.chosen_delta
        };
        let linear_mode = if eps == 1.0 { Mode::Linear } else { Mode::Parabolic };
        let label = if eps == 1.0 { "linear".to_string() } else { format!("eps_{eps}") };
        let sim = sim_config(cfg, ops, linear_mode, eps, delta);
        let (lin, mut lin_sum) = attempt!("simulate", run_series(&ws, &sim, &h0, &label));
        lin_sum.clip_events = clipped;
        attempt!("simulate", output::write_text(dir, &lin_sum.file, &series_csv(&lin)).map(|n| {
            series_files.push(n.clone());
            report.files.push(n)
        }));
        report.lambda_fit = lin_sum.fit.map(|f| f.rate);
        report.lambda_fit_band = lin_sum.fit.map(|f| f.band);
        if let Some(e) = &lin_sum.error {
            report.fail("simulate", Error::Numeric(e.clone()));
        }
        if eps == 1.0 {
            report.verdicts.extend(linear_checks(&lin, constants.lambda));
        } else if let Some(lf) = lin.lambda_fit {
            let eta = compute_eps_scaled(constants.lambda_m, constants.lambda_big, constants.c_m, eps).eta;
            report
                .verdicts
                .push(Check::new("parabolic_rate_floor", lf >= 0.8 * eta, format!("lambda_fit {lf:.6} vs 0.8 eta {:.6}", 0.8 * eta)));
        }
        report.runs.push(lin_sum);

        if nonlinear {
            let sim = sim_config(cfg, ops, Mode::Nonlinear, 1.0, delta);
            let (nl, mut nl_sum) = attempt!("simulate", run_series(&ws, &sim, &h0, "nonlinear"));
            nl_sum.clip_events = clipped;
            attempt!("simulate", output::write_text(dir, &nl_sum.file, &series_csv(&nl)).map(|n| {
                series_files.push(n.clone());
                report.files.push(n)
            }));
            if let Some(e) = &nl_sum.error {
                report.fail("simulate", Error::Numeric(e.clone()));
            }
            report.verdicts.extend(nonlinear_checks(&nl, &lin, cfg.steady.mass));
            report.runs.push(nl_sum);
        }
    }

    if matches!(stage, Stage::EpsSweep | Stage::Full) && !cfg.run.eps_list.is_empty() {
        let mut rows = sweep_table(&constants, &cfg.run.eps_list);
        let results: Vec<(Option<Series>, Option<RunSummary>, Option<String>)> = rows
            .par_iter()
            .map(|row| {
                let mode = if row.eps == 1.0 { Mode::Linear } else { Mode::Parabolic };
                let sim = sim_config(cfg, ops, mode, row.eps, row.delta_eps.min(1.99));
                match run_series(&ws, &sim, &h0, &format!("eps_{}", row.eps)) {
                    Ok((s, sum)) => (Some(s), Some(sum), None),
                    Err(e) => (None, None, Some(e.to_string())),
                }
            })
            .collect();
        for (row, (series, summary, err)) in rows.iter_mut().zip(results) {
            row.error = err.or_else(|| summary.as_ref().and_then(|s| s.error.clone()));
            if let (Some(series), Some(summary)) = (series, summary) {
                row.lambda_fit = series.lambda_fit;
                match output::write_text(dir, &summary.file, &series_csv(&series)) {
                    Ok(n) => {
                        series_files.push(n.clone());
                        report.files.push(n);
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
                report.runs.push(summary);
            }
        }
        attempt!("eps-sweep", output::write_text(dir, "eps_sweep.csv", &sweep_csv(&rows)).map(|n| report.files.push(n)));
        let (checks, threshold) = sweep_checks(&rows);
        report.verdicts.extend(checks);
        report.empirical_eps_threshold = threshold;
        report.sweep = rows;
    }

    if stage == Stage::Full && !cfg.run.diffusion_eps.is_empty() {
        let rows = attempt!(
            "diffusion-limit",
            diffusion_distances(&ws, cfg, &h0, &cfg.run.diffusion_eps, cfg.run.diffusion_time)
        );
        report.verdicts.extend(diffusion_checks(&rows));
        report.diffusion = rows;
    }

    if !series_files.is_empty() {
        if let Ok(n) = output::write_text(dir, "plot.gp", &gnuplot_script(&series_files)) {
            report.files.push(n);
        }
    }
}

/// Loads `path` and runs the pipeline; `seed` replaces the profile seed.
pub fn run_experiment(path: impl AsRef<Path>, stage: Stage, opts: &RunOptions, seed: Option<u64>) -> Result<RunReport> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.set_seed(s);
    }
    run_pipeline(&cfg, stage, opts)
}
