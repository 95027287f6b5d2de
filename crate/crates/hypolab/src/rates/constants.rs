use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::discretization::OperatorSet;
use crate::error::{Error, Result};
use crate::macro_ops::MacroSolver;
use crate::steady_state::SteadyState;

/// Smallest nonzero eigenvalue of `-(1/rho)(rho u')'` with no-flux ends,
/// by inverse iteration on the zero-average space.
pub fn estimate_lambda_m_big(state: &SteadyState) -> Result<f64> {
    let n = state.len();
    let dx = state.grid.dx();
    let wn: Vec<f64> = state.rho.iter().map(|r| dx * r).collect();
    let wf: Vec<f64> = state.rho_faces().iter().map(|r| dx * r).collect();
    let mass: f64 = wn.iter().sum();

    let project = |u: &mut Vec<f64>| {
        let avg: f64 = wn.iter().zip(u.iter()).map(|(w, x)| w * x).sum::<f64>() / mass;
        u.iter_mut().for_each(|x| *x -= avg);
    };
    let stiffness = |u: &[f64]| -> f64 {
        (0..n - 1).map(|j| wf[j] * ((u[j + 1] - u[j]) / dx).powi(2)).sum()
    };
    let massq = |u: &[f64]| -> f64 { wn.iter().zip(u).map(|(w, x)| w * x * x).sum() };
    // exact solve of D^T W_f D u = r for sum(r) = 0, up to a constant
    let solve = |r: &[f64]| -> Vec<f64> {
        let mut u = vec![0.0; n];
        let mut acc = 0.0;
        for j in 0..n - 1 {
            acc -= dx * r[j];
            u[j + 1] = u[j] - dx * acc / wf[j];
        }
        u
    };

    let x = state.grid.nodes();
    let mut u: Vec<f64> = x.iter().map(|x| x + 0.3 * x * x - 0.05 * x * x * x).collect();
    project(&mut u);
    let mut mu = stiffness(&u) / massq(&u);
    for it in 0..20_000 {
        let r: Vec<f64> = wn.iter().zip(&u).map(|(w, x)| w * x).collect();
        let mut next = solve(&r);
        project(&mut next);
        let norm = massq(&next).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numeric("inverse iteration collapsed".into()));
        }
        next.iter_mut().for_each(|v| *v /= norm);
        let new_mu = stiffness(&next);
        u = next;
        if (new_mu - mu).abs() <= 1e-8 * new_mu.abs() && it > 3 {
            return Ok(new_mu);
        }
        mu = new_mu;
    }
    Err(Error::Numeric(format!("inverse iteration stagnated at {mu}")))
}

/// Dense generalised eigenvalues of `(D^T diag(s) D, diag(wn))` on the
/// zero-average space, returned together with the eigenvectors in the
/// scaled unknown `sqrt(wn) u`, ascending and without the kernel.
fn weighted_stiffness_spectrum(wn: &[f64], face_weight: &[f64], dx: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = wn.len();
    let sq: Vec<f64> = wn.iter().map(|w| w.sqrt()).collect();
    let mut k = DMatrix::<f64>::zeros(n, n);
    for j in 0..n - 1 {
        let c = face_weight[j] / (dx * dx);
        let (a, b) = (1.0 / sq[j], 1.0 / sq[j + 1]);
        k[(j, j)] += c * a * a;
        k[(j + 1, j + 1)] += c * b * b;
        k[(j, j + 1)] -= c * a * b;
        k[(j + 1, j)] -= c * a * b;
    }
    // push the constant mode (sqrt(wn) in scaled form) to the top
    let q = DVector::from_vec(sq.clone());
    let qn = q.norm_squared();
    let shift = k.diagonal().max() * 4.0 + 1.0;
    k += &q * q.transpose() * (shift / qn);
    let eig = SymmetricEigen::new(k);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    // drop the deflated constant mode, which sits near `shift`
    let q_unit = &q / qn.sqrt();
    let kernel = idx
        .iter()
        .copied()
        .max_by(|&a, &b| {
            let ca = eig.eigenvectors.column(a).dot(&q_unit).abs();
            let cb = eig.eigenvectors.column(b).dot(&q_unit).abs();
            ca.total_cmp(&cb)
        })
        .expect("nonempty");
    let keep: Vec<usize> = idx.into_iter().filter(|&i| i != kernel).collect();
    let vals = keep.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(&keep.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

/// Best constant in `int |u'|^2 s rho >= C int |u|^2 m rho` over zero-average
/// `u`, with `s` given on the faces and `m` on the nodes.
fn weighted_poincare(state: &SteadyState, face_factor: &[f64], node_factor: &[f64]) -> f64 {
    let dx = state.grid.dx();
    let wn: Vec<f64> = state.rho.iter().map(|r| dx * r).collect();
    let wf: Vec<f64> = state
        .rho_faces()
        .iter()
        .zip(face_factor)
        .map(|(r, s)| dx * r * s)
        .collect();
    let (vals, vecs) = weighted_stiffness_spectrum(&wn, &wf, dx);
    // nu = max eig of Lambda^{-1/2} U^T diag(m) U Lambda^{-1/2}
    let inv_sqrt: Vec<f64> = vals.iter().map(|v| 1.0 / v.max(f64::MIN_POSITIVE).sqrt()).collect();
    let mut z = vecs.clone();
    for (c, s) in inv_sqrt.iter().enumerate() {
        z.column_mut(c).scale_mut(*s);
    }
    let mz = DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| node_factor[i] * z[(i, j)]);
    let gram = z.transpose() * mz;
    let gram = (&gram + gram.transpose()) * 0.5;
    let nu = SymmetricEigen::new(gram).eigenvalues.max();
    1.0 / nu
}

/// Dense counterpart of [`estimate_lambda_m_big`].
pub fn poincare_dense(state: &SteadyState) -> f64 {
    let ones_f = vec![1.0; state.len() - 1];
    let ones_n = vec![1.0; state.len()];
    weighted_poincare(state, &ones_f, &ones_n)
}

/// Constants of the explicit bound on `A T (Id - Pi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConstants {
    pub c_star: f64,
    pub c_weighted: f64,
    pub c_circ: f64,
    pub lambda_star: f64,
    /// `Lambda_star` restricted to the outer half of the grid.
    pub lambda_star_outer: f64,
    pub lambda_circ: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    /// `sup_{|x| <= R} |(W'^2)'|`.
    pub inner_gradient: f64,
    pub kappa: f64,
    pub k_claim2: f64,
    pub lambda_chain: f64,
    pub c_m_bound: f64,
    /// Same bound with the root `1 + sqrt(1 + lambda)` that the Step-4
    /// quadratic actually yields.
    pub c_m_bound_corrected: f64,
    /// Nodes where `W'` vanishes and ratios were skipped.
    pub excluded_nodes: Vec<usize>,
}

pub fn estimate_chain_constants(state: &SteadyState, c_star: f64) -> Result<ChainConstants> {
    let n = state.len();
    let x = state.grid.nodes();
    let dx = state.grid.dx();
    let r_half = 0.5 * state.grid.x_max();
    let dw = &state.dw;
    let d2w = &state.d2w;
    let rho = &state.rho;
    let integrate = |f: &dyn Fn(usize) -> f64| (0..n).map(f).sum::<f64>() * dx;

    let kappa1 = integrate(&|i| state.phi[i] * state.phi[i] * rho[i]);
    let lap_sq = integrate(&|i| d2w[i] * d2w[i] * rho[i]);
    let grad_sq = integrate(&|i| dw[i] * dw[i] * rho[i]);
    let rho_max = state.rho_max();
    let kappa2 = (lap_sq / c_star + grad_sq) * rho_max + kappa1 / (state.mass * state.mass) * lap_sq;
    let kappa3 = (0..n).map(|i| dw[i] * dw[i] * rho[i]).fold(0.0, f64::max).sqrt();
    let grad_w2 = |i: usize| 2.0 * dw[i] * d2w[i];
    let kappa4 = (0..n).map(|i| grad_w2(i).powi(2) * rho[i]).fold(0.0, f64::max).sqrt();
    let inner_gradient = (0..n)
        .filter(|&i| x[i].abs() <= r_half)
        .map(|i| grad_w2(i).abs())
        .fold(0.0, f64::max);

    let mut excluded = Vec::new();
    let mut lambda_star = f64::NEG_INFINITY;
    let mut lambda_star_outer = f64::NEG_INFINITY;
    let mut lambda_circ: f64 = 0.0;
    for i in 0..n {
        let g2 = dw[i] * dw[i];
        if g2 <= 1e-300 {
            excluded.push(i);
            continue;
        }
        let ratio = 0.5 * (g2 - d2w[i]) / g2;
        lambda_star = lambda_star.max(ratio);
        if x[i].abs() > r_half {
            lambda_star_outer = lambda_star_outer.max(ratio);
            lambda_circ = lambda_circ.max(grad_w2(i).abs() / g2);
        }
    }
    let lambda_star = lambda_star.max(0.0);
    let lambda_star_outer = lambda_star_outer.max(0.0);

    let w2: Vec<f64> = dw.iter().map(|d| d * d).collect();
    let ones_f = vec![1.0; n - 1];
    let c_weighted = weighted_poincare(state, &ones_f, &w2);
    let w2_faces: Vec<f64> = w2.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    let w4: Vec<f64> = w2.iter().map(|v| v * v).collect();
    let c_circ = weighted_poincare(state, &w2_faces, &w4);

    let k_claim2 = 1.0 + 2.0 * rho_max;
    let x1 = (k_claim2 / c_weighted).sqrt();
    let b = kappa3 + lambda_circ * x1 + 1.0 / c_circ.sqrt();
    let c = kappa4 * x1 + k_claim2 * inner_gradient;
    let kappa = (0.5 * (b + (b * b + 4.0 * c).sqrt())).powi(2);
    let lambda_chain = lambda_star * (kappa + kappa3 * kappa3);
    let root = (1.0 + lambda_chain).sqrt();
    let bound = |r: f64| (2.0 * (6.0 * (k_claim2 + 1.5) + 8.0 * r * r)).sqrt() + 0.5;
    let out = ChainConstants {
        c_star,
        c_weighted,
        c_circ,
        lambda_star,
        lambda_star_outer,
        lambda_circ,
        kappa1,
        kappa2,
        kappa3,
        kappa4,
        inner_gradient,
        kappa,
        k_claim2,
        lambda_chain,
        c_m_bound: bound(root - 1.0),
        c_m_bound_corrected: bound(root + 1.0),
        excluded_nodes: excluded,
    };
    if !out.c_m_bound.is_finite() || !out.kappa.is_finite() {
        return Err(Error::Numeric("chain constants are not finite".into()));
    }
    Ok(out)
}

/// Operator norms entering `C_M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectNorms {
    /// `|A L|` on `(Id - Pi) H`, equal to `|A|`.
    pub al: f64,
    /// `|A T (Id - Pi)|`.
    pub at_micro: f64,
    /// `sup (|A T (Id-Pi) h| + |A L h|) / |(Id - Pi) h|`.
    pub c_m: f64,
    /// The same three numbers from the power iteration alone.
    pub al_power: f64,
    pub at_micro_power: f64,
    pub c_m_power: f64,
    pub iterations: usize,
}

/// Dense matrix of a linear map in orthonormal coordinates, built column by
/// column.
fn map_matrix(
    input_sqrt_w: &[f64],
    solver: &MacroSolver,
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    gram_factor: &DMatrix<f64>,
) -> DMatrix<f64> {
    let m = input_sqrt_w.len();
    let n = solver.ops().n();
    let mut out = DMatrix::<f64>::zeros(n, m);
    let mut e = vec![0.0; m];
    let sqrt_wn: Vec<f64> = solver.ops().node_weights().iter().map(|w| w.sqrt()).collect();
    for c in 0..m {
        e[c] = 1.0 / input_sqrt_w[c];
        let u = apply(&e);
        e[c] = 0.0;
        let scaled = DVector::from_iterator(n, u.iter().zip(&sqrt_wn).map(|(a, s)| a * s));
        out.set_column(c, &(gram_factor.transpose() * scaled));
    }
    out
}

/// Top singular value of `m`: power iteration (at most `max_iter` steps,
/// stopping at a relative change below `1e-6`) and the exact dense value.
fn top_singular(m: &DMatrix<f64>, max_iter: usize) -> Result<(f64, f64, usize)> {
    let mtm = m.transpose() * m;
    let k = mtm.ncols();
    let mut x = DVector::from_fn(k, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7).sin());
    let mut est = 0.0;
    let mut used = max_iter;
    for it in 1..=max_iter {
        x /= x.norm();
        let y = &mtm * &x;
        let new = x.dot(&y);
        x = y;
        if it > 1 && (new - est).abs() <= 1e-6 * new {
            est = new;
            used = it;
            break;
        }
        est = new;
    }
    let exact = SymmetricEigen::new((&mtm + mtm.transpose()) * 0.5).eigenvalues.max();
    if !exact.is_finite() || !est.is_finite() {
        return Err(Error::Numeric("operator norm is not finite".into()));
    }
    Ok((est.max(0.0).sqrt(), exact.max(0.0).sqrt(), used))
}

/// Operator norms of `A L` and `A T (Id - Pi)`.
pub fn estimate_c_m_direct(solver: &MacroSolver) -> Result<DirectNorms> {
    let ops: &OperatorSet = solver.ops();
    let gram_l = solver.gram_factor()?;
    let sqrt_wf: Vec<f64> = ops.face_weights().iter().map(|w| w.sqrt()).collect();
    let sqrt_wn: Vec<f64> = ops.node_weights().iter().map(|w| w.sqrt()).collect();
    let a_map = map_matrix(&sqrt_wf, solver, &|c1| solver.solve_flux(c1), &gram_l);
    let b_map = map_matrix(&sqrt_wn, solver, &|c2| solver.a_t_micro(c2), &gram_l);
    let (al_power, al, i1) = top_singular(&a_map, 100)?;
    let (at_micro_power, at_micro, i2) = top_singular(&b_map, 100)?;
    Ok(DirectNorms {
        al,
        at_micro,
        c_m: al.hypot(at_micro),
        al_power,
        at_micro_power,
        c_m_power: al_power.hypot(at_micro_power),
        iterations: i1.max(i2),
    })
}

/// Largest singular values of the same two maps by dense SVD.
pub fn c_m_dense_check(solver: &MacroSolver) -> Result<(f64, f64)> {
    let ops = solver.ops();
    let gram_l = solver.gram_factor()?;
    let sqrt_wf: Vec<f64> = ops.face_weights().iter().map(|w| w.sqrt()).collect();
    let sqrt_wn: Vec<f64> = ops.node_weights().iter().map(|w| w.sqrt()).collect();
    let a_map = map_matrix(&sqrt_wf, solver, &|c1| solver.solve_flux(c1), &gram_l);
    let b_map = map_matrix(&sqrt_wn, solver, &|c2| solver.a_t_micro(c2), &gram_l);
    let top = |m: DMatrix<f64>| m.singular_values().max();
    Ok((top(a_map), top(b_map)))
}
