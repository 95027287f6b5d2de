use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of the series dropped at the start and at the end of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitWindow {
    pub skip_head: f64,
    pub skip_tail: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self {
            skip_head: 0.10,
            skip_tail: 0.05,
        }
    }
}

impl FitWindow {
    pub const FULL: FitWindow = FitWindow {
        skip_head: 0.0,
        skip_tail: 0.0,
    };
}

/// Least-squares line through `(t, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub rate: f64,
    pub intercept: f64,
    /// `None` when the values are constant over the window.
    pub r_squared: Option<f64>,
    pub rate_stderr: f64,
    /// `rate -+ 1.96 stderr`.
    pub band: (f64, f64),
    pub points: usize,
}

/// Fits `value ~ exp(intercept - rate t)` on the window of `series`.
pub fn fit_decay_rate(series: &[(f64, f64)], window: FitWindow) -> Result<DecayFit> {
    if series.len() < 10 {
        return Err(Error::InsufficientData(format!("{} points, need at least 10", series.len())));
    }
    if let Some((t, v)) = series.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!("nonpositive value {v} at t = {t}")));
    }
    let n = series.len();
    let lo = (window.skip_head * n as f64).floor() as usize;
    let hi = n - (window.skip_tail * n as f64).floor() as usize;
    if hi <= lo + 2 {
        return Err(Error::InsufficientData("fit window holds fewer than three points".into()));
    }
    let pts: Vec<(f64, f64)> = series[lo..hi].iter().map(|&(t, v)| (t, v.ln())).collect();
    let m = pts.len() as f64;
    let tbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let stt: f64 = pts.iter().map(|p| (p.0 - tbar).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(Error::InsufficientData("all fit times coincide".into()));
    }
    let sty: f64 = pts.iter().map(|p| (p.0 - tbar) * (p.1 - ybar)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ybar).powi(2)).sum();
    let slope = sty / stt;
    let intercept = ybar - slope * tbar;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let scale = ybar.abs().max(1.0);
    let r_squared = (syy > 1e-24 * scale * scale * m).then(|| 1.0 - sse / syy);
    let stderr = (sse / (m - 2.0) / stt).sqrt();
    let rate = -slope;
    Ok(DecayFit {
        rate,
        intercept,
        r_squared,
        rate_stderr: stderr,
        band: (rate - 1.96 * stderr, rate + 1.96 * stderr),
        points: pts.len(),
    })
}
