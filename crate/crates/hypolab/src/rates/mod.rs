//! Constructive hypocoercivity constants and certified decay rates.

mod constants;
mod formulas;

use serde::{Deserialize, Serialize};

use crate::discretization::HermiteBasis;
use crate::error::{Error, Result};
use crate::macro_ops::MacroSolver;

pub use constants::{
    c_m_dense_check, estimate_c_m_direct, estimate_chain_constants, estimate_lambda_m_big, poincare_dense,
    ChainConstants, DirectNorms,
};
pub use formulas::{
    compute_decay_rate, compute_delta_star, compute_eps_scaled, discriminant, discriminant_coefficients,
    form_scan_min, matrix_criterion, optimize_delta, rate_form, EpsScaling,
};

/// How `C_M` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmMethod {
    #[default]
    DirectOperatorNorm,
    PaperChain,
}

/// How `delta` is picked inside `(0, delta_star)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicy {
    #[default]
    HalfDeltaStar,
    Optimize,
    Explicit(f64),
}

/// The four abstract constants and the certified rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypocoConstants {
    pub lambda_m: f64,
    #[serde(rename = "lambda_M")]
    pub lambda_big: f64,
    #[serde(rename = "C_M")]
    pub c_m: f64,
    pub method: CmMethod,
    pub delta_star: f64,
    pub chosen_delta: f64,
    pub lambda: f64,
    pub d: u32,
}

impl HypocoConstants {
    /// Rate algebra for given `(lambda_m, lambda_M, C_M)`.
    pub fn from_constants(lambda_m: f64, lambda_big: f64, c_m: f64, method: CmMethod, policy: DeltaPolicy) -> Result<Self> {
        let delta_star = compute_delta_star(lambda_m, lambda_big, c_m)?;
        let (chosen_delta, lambda) = match policy {
            DeltaPolicy::HalfDeltaStar => {
                let d = 0.5 * delta_star;
                (d, compute_decay_rate(lambda_m, lambda_big, c_m, d)?)
            }
            DeltaPolicy::Optimize => optimize_delta(lambda_m, lambda_big, c_m)?,
            DeltaPolicy::Explicit(d) => (d, compute_decay_rate(lambda_m, lambda_big, c_m, d)?),
        };
        Ok(Self {
            lambda_m,
            lambda_big,
            c_m,
            method,
            delta_star,
            chosen_delta,
            lambda,
            d: 1,
        })
    }

    /// `c = 1 + sqrt(2 (d + 2))`.
    pub fn nonlinear_constant(&self) -> f64 {
        1.0 + (2.0 * (self.d as f64 + 2.0)).sqrt()
    }

    pub fn eps_scaling(&self, eps: f64) -> EpsScaling {
        compute_eps_scaled(self.lambda_m, self.lambda_big, self.c_m, eps)
    }

    /// Norm-equivalence factor `(2 + delta) / (2 - delta)`.
    pub fn equivalence_factor(&self) -> f64 {
        (2.0 + self.chosen_delta) / (2.0 - self.chosen_delta)
    }
}

/// Microscopic coercivity constant of the Hermite basis: the smallest
/// nonzero Ornstein-Uhlenbeck eigenvalue among the retained modes.
pub fn lambda_m(basis: &HermiteBasis) -> f64 {
    (1..basis.len()).map(|k| k as f64).fold(f64::INFINITY, f64::min)
}

/// Everything the rate certification produces, as written to `rates.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub constants: HypocoConstants,
    /// The same algebra with the chain bound for `C_M`; an explicit `delta`
    /// is replaced by half of the chain's own `delta_star`.
    pub chain_rate: HypocoConstants,
    pub direct: DirectNorms,
    pub chain: ChainConstants,
    /// Smallest eigenvalue of `(T Pi)^*(T Pi)` on zero-average densities.
    pub macro_gap: f64,
    pub eps_scaling: Vec<EpsScaling>,
    pub scan_nonnegative: bool,
    pub scan_tight: bool,
    pub chain_dominates_direct: bool,
}

/// Estimates all constants on `solver`'s steady state and certifies a rate.
pub fn certify(solver: &MacroSolver, method: CmMethod, policy: DeltaPolicy, eps_list: &[f64]) -> Result<RateReport> {
    let ops = solver.ops();
    let lm = lambda_m(ops.basis());
    let c_star = estimate_lambda_m_big(ops.state())?;
    let direct = estimate_c_m_direct(solver)?;
    let chain = estimate_chain_constants(ops.state(), c_star)?;
    let primary_cm = match method {
        CmMethod::DirectOperatorNorm => direct.c_m,
        CmMethod::PaperChain => chain.c_m_bound,
    };
    let constants = HypocoConstants::from_constants(lm, c_star, primary_cm, method, policy)?;
    let chain_policy = match policy {
        DeltaPolicy::Explicit(_) => DeltaPolicy::HalfDeltaStar,
        p => p,
    };
    let chain_rate = HypocoConstants::from_constants(lm, c_star, chain.c_m_bound, CmMethod::PaperChain, chain_policy)?;
    let (l, d) = (constants.lambda, constants.chosen_delta);
    let scale = lm + c_star + primary_cm;
    let scan_nonnegative = form_scan_min(lm, c_star, primary_cm, d, l, 360) >= -1e-12 * scale;
    let cap_binds = l >= 2.0 * (lm - d) * (1.0 - 1e-12);
    let scan_tight = cap_binds || form_scan_min(lm, c_star, primary_cm, d, 1.05 * l, 360) < 0.0;
    if !(constants.lambda > 0.0) {
        return Err(Error::Numeric("certified rate is not positive".into()));
    }
    Ok(RateReport {
        constants,
        chain_rate,
        direct,
        macro_gap: solver.macro_gap()?,
        chain_dominates_direct: chain.c_m_bound >= direct.c_m,
        chain,
        eps_scaling: eps_list
            .iter()
            .map(|&e| compute_eps_scaled(lm, c_star, primary_cm, e))
            .collect(),
        scan_nonnegative,
        scan_tight,
    })
}
