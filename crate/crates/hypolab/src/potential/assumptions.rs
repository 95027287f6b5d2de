//! Tail checks of the confinement hypotheses on a geometric radial probe.

use serde::Serialize;

use super::{Family, PotentialSpec, PotentialValue};
use crate::error::{Error, Result};

const MARGIN: f64 = 1e-6;
const TAIL: usize = 3;
const ANNULUS_SAMPLES: usize = 129;
const SUP_SAMPLES: usize = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Fail,
    Marginal,
    Pass,
}

/// Which side of the threshold the witness must eventually sit on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Above,
    Below,
    Bounded,
}

/// Radii `r_j = r0 * 2^j`, `j = 0..levels`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProbe {
    radii: Vec<f64>,
}

impl RadialProbe {
    pub fn geometric(r0: f64, levels: usize) -> Result<Self> {
        if !(r0 > 0.0 && r0.is_finite()) || levels == 0 {
            return Err(Error::Domain("probe needs r0 > 0 and at least one level".into()));
        }
        Ok(Self {
            radii: (0..levels).map(|j| r0 * 2f64.powi(j as i32)).collect(),
        })
    }

    /// Six levels ending exactly at the domain radius.
    pub fn for_domain(radius: f64) -> Self {
        Self::geometric(radius / 32.0, 6).expect("positive radius")
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionEntry {
    pub name: String,
    pub expression: String,
    pub direction: Direction,
    pub threshold: f64,
    pub radii: Vec<f64>,
    pub witness: Vec<f64>,
    /// Secondary witness (`|V'|` for V3a, V3b, V5; the second sup-norm for V8).
    pub aux_witness: Option<Vec<f64>>,
    pub verdict: Verdict,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub mass: f64,
    pub entries: Vec<AssumptionEntry>,
    /// Minimum of `Phi = V'^2/4 - V''/2` over the outermost probe annulus.
    pub sigma_v: f64,
    /// Smallest admissible `theta` for V3b read off the probe tail.
    pub theta: f64,
    /// Smallest admissible `theta` for V5 read off the probe tail.
    pub theta_v5: f64,
    pub lambda_v: f64,
    pub v7_bound: f64,
    pub v8_sup_grad: f64,
    pub v8_sup_hess: f64,
}

impl AssumptionReport {
    pub fn entry(&self, name: &str) -> Option<&AssumptionEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn worst(&self) -> Verdict {
        self.entries.iter().map(|e| e.verdict).min().unwrap_or(Verdict::Fail)
    }

    pub fn all_pass(&self) -> bool {
        self.worst() == Verdict::Pass
    }

    pub fn failing(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.verdict != Verdict::Pass)
            .map(|e| e.name.as_str())
            .collect()
    }
}

/// Schrodinger potential `Phi = |V'|^2/4 - V''/2`.
pub fn schrodinger_potential(p: &PotentialValue) -> f64 {
    0.25 * p.dv * p.dv - 0.5 * p.d2v
}

pub fn check_confinement_assumptions(
    spec: &PotentialSpec,
    mass: f64,
    probe: &RadialProbe,
) -> Result<AssumptionReport> {
    if !(mass > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    let radii = probe.radii().to_vec();
    if radii.last().copied().unwrap_or(0.0) > spec.domain_radius() * (1.0 + 1e-12) {
        return Err(Error::Domain("probe radii exceed the domain radius".into()));
    }
    let at = |x: f64| spec.eval(x).ok();
    let pair = |r: f64| (at(r), at(-r));

    let min_pm = |f: &dyn Fn(f64, &PotentialValue) -> f64| -> Vec<f64> {
        radii
            .iter()
            .map(|&r| match pair(r) {
                (Some(a), Some(b)) => f(r, &a).min(f(-r, &b)),
                _ => f64::NAN,
            })
            .collect()
    };
    let max_pm = |f: &dyn Fn(f64, &PotentialValue) -> f64| -> Vec<f64> {
        radii
            .iter()
            .map(|&r| match pair(r) {
                (Some(a), Some(b)) => f(r, &a).max(f(-r, &b)),
                _ => f64::NAN,
            })
            .collect()
    };

    let grad = min_pm(&|_, p| p.dv.abs());

    let v1 = min_pm(&|_, p| p.v);
    let v2 = min_pm(&|x, p| {
        let l = x.abs().ln();
        if l > 0.0 {
            (p.v - mass * x.abs() / 2.0) / l
        } else {
            f64::NAN
        }
    });
    let v3a = min_pm(&|_, p| schrodinger_potential(p));
    let v3b = max_pm(&|_, p| 2.0 * p.d2v / (p.dv * p.dv));
    let v4 = min_pm(&|_, p| (mass - 2.0 * p.dv).powi(2) - 2.0 * p.d2v);
    let v5 = max_pm(&|_, p| 6.0 * p.d2v / (p.dv * p.dv));
    let v6 = max_pm(&|_, p| 0.5 * (p.dv * p.dv - p.d2v) / (p.dv * p.dv));
    let v7 = max_pm(&|_, p| (2.0 * p.d2v / p.dv).abs());

    let r_inner = radii[0];
    let (v8a, v8b): (Vec<f64>, Vec<f64>) = radii
        .iter()
        .map(|&r| running_sups(spec, r_inner, r))
        .unzip();

    let mut entries = vec![
        entry("V1", "V(x)", Direction::Above, 0.0, &radii, v1, None, true),
        entry("V2", "(V(x) - M|x|/2) / log|x|", Direction::Above, 2.0, &radii, v2, None, true),
        entry("V3a", "|V'|^2/4 - V''/2", Direction::Above, 0.0, &radii, v3a, Some(grad.clone()), true),
        entry("V3b", "2 V'' / |V'|^2 (smallest theta)", Direction::Below, 1.0, &radii, v3b, Some(grad.clone()), true),
        entry("V4", "(M - 2V')^2 - 2V''", Direction::Above, 0.0, &radii, v4, None, true),
        entry("V5", "6 V'' / |V'|^2 (smallest theta)", Direction::Below, 1.0, &radii, v5, Some(grad), true),
        entry("V6", "(|V'|^2 - V'') / (2|V'|^2)", Direction::Bounded, f64::INFINITY, &radii, v6, None, false),
        entry("V7", "|(log |V'|^2)'|", Direction::Bounded, f64::INFINITY, &radii, v7, None, false),
        entry("V8", "sup |V'|^2 e^{-V}, sup |(|V'|^2)'|^2 e^{-V}", Direction::Bounded, f64::INFINITY, &radii, v8a, Some(v8b), false),
    ];

    if let Family::Tabulated(table) = spec.family() {
        let tail_start = radii[radii.len().saturating_sub(TAIL)];
        let nodes = table.nodes();
        let mut worst_jump: f64 = 0.0;
        for i in 1..nodes.len() - 1 {
            if nodes[i].abs() >= tail_start && nodes[i].abs() <= spec.domain_radius() {
                let jump = table.curvature_jump(i).abs();
                let scale = spec.eval(nodes[i]).map(|p| p.d2v.abs()).unwrap_or(0.0).max(1e-12);
                worst_jump = worst_jump.max(jump / scale);
            }
        }
        if worst_jump > 1e-3 {
            for e in entries.iter_mut().filter(|e| e.name != "V1" && e.name != "V2") {
                if e.verdict == Verdict::Pass {
                    e.verdict = Verdict::Marginal;
                    e.note = Some(format!(
                        "curvature of the interpolant jumps by {worst_jump:.2e} (relative) on the tail"
                    ));
                }
            }
        }
    }

    let sigma_v = annulus_min_phi(spec, &radii);
    let tail_max = |name: &str| -> f64 {
        let e = entries.iter().find(|e| e.name == name).expect("entry exists");
        let w = &e.witness;
        w[w.len().saturating_sub(TAIL)..]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let theta = tail_max("V3b").max(0.0);
    let theta_v5 = tail_max("V5").max(0.0);
    let lambda_v = tail_max("V6");
    let v7_bound = tail_max("V7");
    let v8 = entries.iter().find(|e| e.name == "V8").expect("entry exists");
    let v8_sup_grad = v8.witness.last().copied().unwrap_or(f64::NAN);
    let v8_sup_hess = v8
        .aux_witness
        .as_ref()
        .and_then(|w| w.last().copied())
        .unwrap_or(f64::NAN);

    Ok(AssumptionReport {
        mass,
        entries,
        sigma_v,
        theta,
        theta_v5,
        lambda_v,
        v7_bound,
        v8_sup_grad,
        v8_sup_hess,
    })
}

#[allow(clippy::too_many_arguments)]
fn entry(
    name: &str,
    expression: &str,
    direction: Direction,
    threshold: f64,
    radii: &[f64],
    witness: Vec<f64>,
    aux: Option<Vec<f64>>,
    aux_is_gradient: bool,
) -> AssumptionEntry {
    let mut verdict = tail_verdict(&witness, direction, threshold);
    if let Some(a) = &aux {
        let aux_verdict = if aux_is_gradient {
            tail_verdict(a, Direction::Above, 0.0)
        } else {
            tail_verdict(a, Direction::Bounded, f64::INFINITY)
        };
        verdict = verdict.min(aux_verdict);
    }
    AssumptionEntry {
        name: name.to_string(),
        expression: expression.to_string(),
        direction,
        threshold,
        radii: radii.to_vec(),
        witness,
        aux_witness: aux,
        verdict,
        note: None,
    }
}

/// Applies the tail convention to the last three probe values.
pub(crate) fn tail_verdict(w: &[f64], direction: Direction, threshold: f64) -> Verdict {
    if w.len() < TAIL {
        return Verdict::Marginal;
    }
    let tail = &w[w.len() - TAIL..];
    if tail.iter().any(|v| !v.is_finite()) {
        return Verdict::Fail;
    }
    let rel = |a: f64, b: f64| 1e-12 * a.abs().max(b.abs()).max(1.0);
    match direction {
        Direction::Above => {
            if tail.iter().any(|&v| v <= threshold) {
                return Verdict::Fail;
            }
            let margin_ok = tail.iter().all(|&v| v - threshold >= MARGIN);
            let trending = tail.windows(2).all(|p| p[1] >= p[0] - rel(p[0], p[1]));
            if margin_ok && trending {
                Verdict::Pass
            } else {
                Verdict::Marginal
            }
        }
        Direction::Below => {
            if tail.iter().any(|&v| v >= threshold) {
                return Verdict::Fail;
            }
            let margin_ok = tail.iter().all(|&v| threshold - v >= MARGIN);
            let trending = tail.windows(2).all(|p| p[1] <= p[0] + rel(p[0], p[1]));
            if margin_ok && trending {
                Verdict::Pass
            } else {
                Verdict::Marginal
            }
        }
        Direction::Bounded => {
            let rel = |a: f64, b: f64| 1e-6 * a.abs().max(b.abs()).max(1.0);
            let d1 = (tail[1] - tail[0]).abs();
            let d2 = (tail[2] - tail[1]).abs();
            let shrinking = d2 <= d1 + rel(tail[1], tail[2]);
            let nonincreasing = tail[2] <= tail[1] + rel(tail[1], tail[2])
                && tail[1] <= tail[0] + rel(tail[0], tail[1]);
            if shrinking || nonincreasing {
                Verdict::Pass
            } else {
                Verdict::Marginal
            }
        }
    }
}

fn running_sups(spec: &PotentialSpec, r_inner: f64, r: f64) -> (f64, f64) {
    let mut s_grad: f64 = 0.0;
    let mut s_hess: f64 = 0.0;
    for k in 0..SUP_SAMPLES {
        let t = k as f64 / (SUP_SAMPLES - 1) as f64;
        let a = r_inner + (r - r_inner) * t;
        for x in [a, -a] {
            match spec.eval(x) {
                Ok(p) => {
                    let e = (-p.v).exp();
                    s_grad = s_grad.max(p.dv * p.dv * e);
                    s_hess = s_hess.max((2.0 * p.dv * p.d2v).powi(2) * e);
                }
                Err(_) => return (f64::NAN, f64::NAN),
            }
        }
    }
    (s_grad, s_hess)
}

fn annulus_min_phi(spec: &PotentialSpec, radii: &[f64]) -> f64 {
    let n = radii.len();
    let (a, b) = if n >= 2 { (radii[n - 2], radii[n - 1]) } else { (radii[0], radii[0]) };
    let mut m = f64::INFINITY;
    for k in 0..ANNULUS_SAMPLES {
        let r = a + (b - a) * k as f64 / (ANNULUS_SAMPLES - 1) as f64;
        for x in [r, -r] {
            match spec.eval(x) {
                Ok(p) => m = m.min(schrodinger_potential(&p)),
                Err(_) => return f64::NAN,
            }
        }
    }
    m
}
