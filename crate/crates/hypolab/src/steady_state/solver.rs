use super::{poisson_solve_1d, Grid1D, SteadyState};
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialGuess {
    Zero,
    HalfPotential,
    Custom(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub omega: f64,
    /// Iteration after which the relaxation factor is updated by Aitken's rule.
    pub aitken_start: usize,
    pub initial: InitialGuess,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2000,
            omega: 0.5,
            aitken_start: 10,
            initial: InitialGuess::Zero,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Damped fixed point `phi <- (1 - w) phi + w P[M e^{-V-phi} / Z]` with
/// dynamic Aitken relaxation, followed by the mass-normalising shift.
pub fn solve_poisson_boltzmann(
    spec: &PotentialSpec,
    mass: f64,
    grid: &Grid1D,
    opts: &SolverOptions,
) -> Result<SteadyState> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    if !(opts.tol > 0.0) || !(opts.omega > 0.0 && opts.omega <= 1.0) {
        return Err(Error::Domain("tolerance must be positive and omega in (0, 1]".into()));
    }
    let n = grid.len();
    let mut v = Vec::with_capacity(n);
    let mut dv = Vec::with_capacity(n);
    let mut d2v = Vec::with_capacity(n);
    for x in grid.nodes() {
        let p = spec.eval(x)?;
        v.push(p.v);
        dv.push(p.dv);
        d2v.push(p.d2v);
    }

    let mut phi = match &opts.initial {
        InitialGuess::Zero => vec![0.0; n],
        InitialGuess::HalfPotential => v.iter().map(|x| 0.5 * x).collect(),
        InitialGuess::Custom(p) => {
            if p.len() != n {
                return Err(Error::Shape(format!("initial guess has {} values, grid has {n}", p.len())));
            }
            p.clone()
        }
    };
    normalise_max(&mut phi);

    let mut omega = opts.omega;
    let mut prev_r: Option<Vec<f64>> = None;
    let mut history = Vec::new();
    for it in 0..opts.max_iter {
        let rho = boltzmann(&v, &phi, mass, grid);
        let target = poisson_solve_1d(&rho, mass, grid)?.potential;
        let mut r: Vec<f64> = target.iter().zip(&phi).map(|(a, b)| a - b).collect();
        let mean = r.iter().sum::<f64>() / n as f64;
        r.iter_mut().for_each(|x| *x -= mean);
        let osc = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        history.push(osc);
        if !osc.is_finite() {
            break;
        }
        if osc <= opts.tol {
            let mut phi_star = target;
            let (e, scale) = boltzmann_raw(&v, &phi_star);
            let z = grid.integrate(&e) * scale;
            let shift = (z / mass).ln();
            phi_star.iter_mut().for_each(|p| *p += shift);
            return SteadyState::assemble(grid.clone(), &v, &dv, &d2v, phi_star, mass, spec.alpha(), it + 1);
        }
        if let Some(pr) = &prev_r {
            if it >= opts.aitken_start {
                let mut num = 0.0;
                let mut den = 0.0;
                for (a, b) in pr.iter().zip(&r) {
                    let d = b - a;
                    num += a * d;
                    den += d * d;
                }
                if den > 0.0 {
                    omega = (-omega * num / den).clamp(0.05, 1.0);
                }
            }
        }
        for (p, d) in phi.iter_mut().zip(&r) {
            *p += omega * d;
        }
        normalise_max(&mut phi);
        prev_r = Some(r);
    }
    Err(Error::IterationDiverged {
        iterations: history.len(),
        last: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

fn normalise_max(phi: &mut [f64]) {
    let top = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    phi.iter_mut().for_each(|p| *p -= top);
}

/// `exp(-(V + phi) + s)` with the shift `s` that keeps the largest entry at one.
fn boltzmann_raw(v: &[f64], phi: &[f64]) -> (Vec<f64>, f64) {
    let s = v.iter().zip(phi).map(|(a, b)| a + b).fold(f64::INFINITY, f64::min);
    let e = v.iter().zip(phi).map(|(a, b)| (-(a + b) + s).exp()).collect();
    (e, (-s).exp())
}

fn boltzmann(v: &[f64], phi: &[f64], mass: f64, grid: &Grid1D) -> Vec<f64> {
    let (e, _) = boltzmann_raw(v, phi);
    let z = grid.integrate(&e);
    e.into_iter().map(|x| mass * x / z).collect()
}
