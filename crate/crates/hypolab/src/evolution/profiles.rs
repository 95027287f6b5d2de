use serde::{Deserialize, Serialize};

use super::monitors::Lattice;
use crate::discretization::{random_state, OperatorSet, PhaseState};
use crate::error::{Error, Result};

/// Initial perturbation shape; the amplitude is applied separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// `exp(-(x - x0)^2 / (2 sigma^2))` in Hermite mode `mode`.
    GaussianBump { x0: f64, sigma: f64, mode: usize },
    /// `cos(wavenumber x)` in Hermite mode `k`.
    ModeSeed { k: usize, wavenumber: f64 },
    /// Seeded smooth content in the first four Hermite modes.
    Random { seed: u64 },
}

/// Builds `h0`: the profile scaled so that its largest coefficient equals
/// `amplitude`, projected to zero average. When `nonnegative` is set the
/// state is clipped to `1 + h >= 1e-12` on the velocity lattice; the second
/// return value counts clipped lattice points.
pub fn initial_state(
    ops: &OperatorSet,
    profile: &Profile,
    amplitude: f64,
    nonnegative: bool,
) -> Result<(PhaseState, usize)> {
    let grid = &ops.state().grid;
    let mut h = match *profile {
        Profile::GaussianBump { x0, sigma, mode } => {
            if mode >= ops.k() || !(sigma > 0.0) {
                return Err(Error::Config(format!("gaussian_bump needs mode < {} and sigma > 0", ops.k())));
            }
            let mut h = ops.zeros();
            let xs = if mode % 2 == 0 { grid.nodes() } else { grid.faces() };
            h.modes[mode] = xs.iter().map(|x| (-(x - x0).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
            h
        }
        Profile::ModeSeed { k, wavenumber } => {
            if k >= ops.k() {
                return Err(Error::Config(format!("mode_seed needs k < {}", ops.k())));
            }
            let mut h = ops.zeros();
            let xs = if k % 2 == 0 { grid.nodes() } else { grid.faces() };
            h.modes[k] = xs.iter().map(|x| (wavenumber * x).cos()).collect();
            h
        }
        Profile::Random { seed } => random_state(ops, seed, 4),
    };
    ops.project_zero_average(&mut h);
    let peak = h.max_abs();
    if peak > 0.0 {
        h.scale(amplitude / peak);
    }
    let mut clipped = 0;
    if nonnegative {
        clipped = clip(ops, &mut h);
    }
    Ok((h, clipped))
}

/// Raises `1 + h` to at least `1e-12` on the lattice and projects the
/// correction back onto the Hermite modes.
fn clip(ops: &OperatorSet, h: &mut PhaseState) -> usize {
    let lat = Lattice::new(ops);
    let (val, _) = lat.values(ops, h);
    let n = ops.n();
    let k = ops.k();
    let mut count = 0;
    let mut corr = vec![vec![0.0; n]; k];
    for i in 0..n {
        for (q, v) in val[i].iter().enumerate() {
            let floor = 1e-12 - 1.0;
            if *v < floor {
                count += 1;
                let d = floor - v;
                let table = ops.basis().eval(lat.quad.nodes[q]);
                for j in 0..k {
                    corr[j][i] += lat.quad.weights[q] * d * table[j];
                }
            }
        }
    }
    if count == 0 {
        return 0;
    }
    for (j, c) in corr.iter().enumerate() {
        if j % 2 == 0 {
            h.modes[j].iter_mut().zip(c).for_each(|(a, b)| *a += b);
        } else {
            for f in 0..n - 1 {
                h.modes[j][f] += 0.5 * (c[f] + c[f + 1]);
            }
        }
    }
    ops.project_zero_average(h);
    count
}
