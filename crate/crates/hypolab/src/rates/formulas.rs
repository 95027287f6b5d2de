use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `min{2, lambda_m, 4 lambda_m lambda_M / (4 lambda_M + C_M^2 (1 + lambda_M))}`.
pub fn compute_delta_star(lambda_m: f64, lambda_big: f64, c_m: f64) -> Result<f64> {
    if !(lambda_m > 0.0) || !(lambda_big > 0.0) {
        return Err(Error::Domain("lambda_m and lambda_M must be positive".into()));
    }
    if !(c_m >= 0.0) {
        return Err(Error::Domain("C_M must be nonnegative".into()));
    }
    let third = 4.0 * lambda_m * lambda_big / (4.0 * lambda_big + c_m * c_m * (1.0 + lambda_big));
    Ok(2.0_f64.min(lambda_m).min(third))
}

/// Coefficients `(a, b, c)` of `h(delta, lambda) = a lambda^2 + b lambda + c`.
pub fn discriminant_coefficients(lambda_m: f64, lambda_big: f64, c_m: f64, delta: f64) -> (f64, f64, f64) {
    let a0 = lambda_m - delta;
    let b0 = delta * lambda_big / (1.0 + lambda_big);
    let d2 = delta * delta;
    (d2 / 4.0 - 1.0, d2 * c_m + 2.0 * (a0 + b0), d2 * c_m * c_m - 4.0 * a0 * b0)
}

/// `h(delta, lambda) = delta^2 (C_M + lambda/2)^2
///   - 4 (lambda_m - delta - lambda/2)(delta lambda_M/(1+lambda_M) - lambda/2)`.
pub fn discriminant(lambda_m: f64, lambda_big: f64, c_m: f64, delta: f64, lambda: f64) -> f64 {
    let x = lambda_m - delta - 0.5 * lambda;
    let y = delta * lambda_big / (1.0 + lambda_big) - 0.5 * lambda;
    let z = delta * (c_m + 0.5 * lambda);
    z * z - 4.0 * x * y
}

/// The quadratic form in `(X, Y)` whose nonnegativity gives the decay rate.
pub fn rate_form(lambda_m: f64, lambda_big: f64, c_m: f64, delta: f64, lambda: f64, x: f64, y: f64) -> f64 {
    (lambda_m - delta - 0.5 * lambda) * x * x + (delta * lambda_big / (1.0 + lambda_big) - 0.5 * lambda) * y * y
        - delta * (c_m + 0.5 * lambda) * x * y
}

/// Minimum of the form over `directions` equally spaced unit vectors.
pub fn form_scan_min(lambda_m: f64, lambda_big: f64, c_m: f64, delta: f64, lambda: f64, directions: usize) -> f64 {
    (0..directions)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / directions as f64;
            rate_form(lambda_m, lambda_big, c_m, delta, lambda, t.cos(), t.sin())
        })
        .fold(f64::INFINITY, f64::min)
}

/// Matrix criterion: both diagonal entries nonnegative and nonnegative
/// determinant.
pub fn matrix_criterion(lambda_m: f64, lambda_big: f64, c_m: f64, delta: f64, lambda: f64) -> bool {
    let p = lambda_m - delta - 0.5 * lambda;
    let q = delta * lambda_big / (1.0 + lambda_big) - 0.5 * lambda;
    let r = 0.5 * delta * (c_m + 0.5 * lambda);
    p >= 0.0 && q >= 0.0 && p * q - r * r >= 0.0
}

/// Largest `lambda` such that the form stays nonnegative on `(0, lambda]`.
pub fn compute_decay_rate(lambda_m: f64, lambda_big: f64, c_m: f64, delta: f64) -> Result<f64> {
    let star = compute_delta_star(lambda_m, lambda_big, c_m)?;
    if !(delta > 0.0 && delta < star) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, {star})")));
    }
    let (a, b, c) = discriminant_coefficients(lambda_m, lambda_big, c_m, delta);
    let cap = 2.0 * (lambda_m - delta);
    let disc = b * b - 4.0 * a * c;
    let root = if disc < 0.0 {
        f64::INFINITY
    } else {
        -2.0 * c / (b + disc.sqrt())
    };
    Ok(root.min(cap))
}

/// Golden-section maximisation of `lambda(delta)` over `(0, delta_star)`.
pub fn optimize_delta(lambda_m: f64, lambda_big: f64, c_m: f64) -> Result<(f64, f64)> {
    let star = compute_delta_star(lambda_m, lambda_big, c_m)?;
    let f = |d: f64| compute_decay_rate(lambda_m, lambda_big, c_m, d).unwrap_or(0.0);
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (star * 1e-9, star * (1.0 - 1e-9));
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
        if hi - lo < 1e-13 * star {
            break;
        }
    }
    let d = 0.5 * (lo + hi);
    Ok((d, f(d)))
}

/// Constants of the parabolic scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsScaling {
    pub eps: f64,
    pub delta_eps: f64,
    pub zeta: f64,
    pub eta: f64,
    /// Small-`eps` admissibility inequality with `K = 2 zeta`.
    pub small_eps_ok: bool,
}

pub fn compute_eps_scaled(lambda_m: f64, lambda_big: f64, c_m: f64, eps: f64) -> EpsScaling {
    let c2 = c_m * c_m;
    let delta_eps = 4.0 * lambda_m * lambda_big * eps / (4.0 * lambda_big * eps * eps + c2 * (1.0 + lambda_big));
    let zeta = 2.0 * lambda_m * lambda_big / (c2 * (1.0 + lambda_big));
    let eta = lambda_m * lambda_big * lambda_big / (c2 * (1.0 + lambda_big).powi(2));
    let k = 2.0 * zeta;
    let lhs = lambda_m * lambda_m * k.powi(4) * eps.powi(4)
        + k * c_m.powi(3) * (4.0 * k * lambda_m + 3.0 * c_m * (k + 4.0)) * eps * eps
        - 2.0 * c_m.powi(6);
    EpsScaling {
        eps,
        delta_eps,
        zeta,
        eta,
        small_eps_ok: lhs < 0.0,
    }
}
