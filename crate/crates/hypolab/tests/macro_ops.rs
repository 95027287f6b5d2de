mod common;

use hypolab::discretization::{random_state, PhaseState};
use hypolab::macro_ops::{
    apply_tpi_star_tpi, blw_terms, elliptic_claims, DiffusionScheme, MacroSolver,
};
use hypolab::steady_state::{poisson_solve_1d, MacroField, Role};
use hypolab::Error;

fn weighted(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}

fn zero_avg(ops: &hypolab::discretization::OperatorSet, seed: u64) -> Vec<f64> {
    random_state(ops, seed, 1).modes[0].clone()
}

#[test]
fn diffusion_operator_of_zero_is_zero() {
    let ops = common::operators(2.0, 1.0, 64, 6.0, 4);
    let out = apply_tpi_star_tpi(&MacroField::zeros(64, Role::Density), &ops).unwrap();
    assert!(out.values.iter().all(|v| *v == 0.0));
}

#[test]
fn diffusion_operator_rejects_nonzero_average() {
    let ops = common::operators(2.0, 1.0, 64, 6.0, 4);
    let u = MacroField::new(vec![1.0; 64], Role::Density);
    assert!(matches!(apply_tpi_star_tpi(&u, &ops), Err(Error::Domain(_))));
}

#[test]
fn diffusion_operator_quadratic_form_matches_direct_quadrature() {
    let ops = common::operators(2.0, 1.0, 128, 6.0, 4);
    let st = ops.state();
    let h = st.grid.dx();
    for seed in 0..20 {
        let u = zero_avg(&ops, seed);
        let bu = apply_tpi_star_tpi(&MacroField::new(u.clone(), Role::Density), &ops).unwrap();
        let avg: f64 = weighted(ops.node_weights(), &bu.values, &vec![1.0; 128]);
        assert!(avg.abs() < 1e-12 * bu.values.iter().fold(1.0, |a: f64, v| a.max(v.abs())));

        // independent oracle: psi' from the whole-line Poisson representation
        let rho_u: Vec<f64> = u.iter().zip(&st.rho).map(|(a, r)| a * r).collect();
        let sol = poisson_solve_1d(&rho_u, 0.0, &st.grid).unwrap();
        let rf = st.rho_faces();
        let direct: f64 = (0..127)
            .map(|j| {
                let wp = (u[j + 1] - u[j]) / h + sol.slope[j + 1];
                wp * wp * rf[j] * h
            })
            .sum();
        let form = ops.macro_inner(&bu.values, &u);
        assert!((form - direct).abs() <= 1e-9 * direct, "{form} {direct}");
    }
}

#[test]
fn resolvent_operator_is_self_adjoint() {
    let ops = common::operators(2.0, 1.0, 96, 6.0, 4);
    for seed in 0..10 {
        let u = zero_avg(&ops, seed);
        let v = zero_avg(&ops, seed + 100);
        let apply = |x: &Vec<f64>| {
            let b = apply_tpi_star_tpi(&MacroField::new(x.clone(), Role::Density), &ops).unwrap();
            x.iter().zip(&b.values).map(|(a, b)| a + b).collect::<Vec<f64>>()
        };
        let a = ops.macro_inner(&apply(&u), &v);
        let b = ops.macro_inner(&u, &apply(&v));
        assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()));
    }
}

#[test]
fn a_vanishes_on_fluxless_states() {
    let ops = common::operators(2.0, 1.0, 64, 6.0, 6);
    let solver = MacroSolver::new(&ops).unwrap();
    let mut h = ops.zeros();
    for (i, v) in h.modes[2].iter_mut().enumerate() {
        *v = ((i as f64) * 0.3).sin();
    }
    let r = solver.apply_a(&h).unwrap();
    assert!(r.u_g.values.iter().all(|v| *v == 0.0));
    let r0 = solver.apply_a(&ops.zeros()).unwrap();
    assert!(r0.u_g.values.iter().all(|v| *v == 0.0));
}

#[test]
fn a_bounds_on_seeded_states() {
    let ops = common::operators(2.0, 1.0, 96, 6.0, 8);
    let solver = MacroSolver::new(&ops).unwrap();
    for seed in 0..40 {
        let h = random_state(&ops, 1000 + seed, 8);
        let r = solver.apply_a(&h).unwrap();
        assert!(r.defect < 1e-10);
        let avg = weighted(ops.node_weights(), &r.u_g.values, &vec![1.0; 96]);
        assert!(avg.abs() < 1e-9);
        let micro = ops.micro_norm_sq(&h).sqrt();
        let ah = ops.norm_sq(&solver.a_state(&h)).sqrt();
        let tah = ops.norm_sq(&solver.ta_state(&h)).sqrt();
        assert!(ah <= 0.5 * micro + 1e-8, "{ah} {micro}");
        assert!(tah <= micro + 1e-8, "{tah} {micro}");
    }
}

#[test]
fn a_is_the_adjoint_formula() {
    // <A h, g> = <(T Pi)^* h, (Id + B)^{-1} g> checked through the pairing
    // identity <A h, h> = <h, T Pi (Id+B)^{-1} ...> in the form
    // <A h, u> = <c_1, T Pi (Id + B)^{-1} u> for macroscopic u.
    let ops = common::operators(2.0, 1.0, 64, 6.0, 4);
    let solver = MacroSolver::new(&ops).unwrap();
    for seed in 0..10 {
        let h = random_state(&ops, seed, 4);
        let u = zero_avg(&ops, seed + 50);
        let lhs = ops.macro_inner(&solver.solve_flux(&h.modes[1]), &u);
        let v = solver.resolvent(&u);
        let tv = hypolab::macro_ops::tpi(&ops, &v);
        let rhs = weighted(ops.face_weights(), &h.modes[1], &tv);
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()), "{lhs} {rhs}");
    }
}

#[test]
fn drift_diffusion_conserves_average_and_zero() {
    let ops = common::operators(2.0, 1.0, 64, 6.0, 4);
    let solver = MacroSolver::new(&ops).unwrap();
    let zero = solver
        .solve_drift_diffusion(&MacroField::zeros(64, Role::Density), 0.5, 0.01, DiffusionScheme::Implicit)
        .unwrap();
    assert!(zero.iter().all(|f| f.values.iter().all(|v| *v == 0.0)));
    let u0 = MacroField::new(zero_avg(&ops, 3), Role::Density);
    let traj = solver.solve_drift_diffusion(&u0, 1.0, 0.01, DiffusionScheme::Implicit).unwrap();
    assert_eq!(traj.len(), 101);
    let ones = vec![1.0; 64];
    for f in &traj {
        assert!(weighted(ops.node_weights(), &f.values, &ones).abs() < 1e-9);
    }
    let norms: Vec<f64> = traj.iter().map(|f| ops.macro_inner(&f.values, &f.values)).collect();
    assert!(norms.windows(2).all(|p| p[1] <= p[0]));
}

#[test]
fn explicit_drift_diffusion_checks_step() {
    let ops = common::operators(2.0, 1.0, 64, 6.0, 4);
    let solver = MacroSolver::new(&ops).unwrap();
    let u0 = MacroField::new(zero_avg(&ops, 3), Role::Density);
    let dx = ops.dx();
    assert!(matches!(
        solver.solve_drift_diffusion(&u0, 1.0, dx * dx, DiffusionScheme::Explicit),
        Err(Error::Stability(_))
    ));
    // both schemes are first order, so their gap shrinks linearly with dt
    let gap = |dt: f64| {
        let a = solver.solve_drift_diffusion(&u0, 0.1, dt, DiffusionScheme::Explicit).unwrap();
        let b = solver.solve_drift_diffusion(&u0, 0.1, dt, DiffusionScheme::Implicit).unwrap();
        let (a, b) = (a.last().unwrap(), b.last().unwrap());
        let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
        ops.macro_inner(&diff, &diff).sqrt()
    };
    let coarse = gap(0.1 / 16.0);
    let fine = gap(0.1 / 64.0);
    assert!(coarse / fine > 3.0, "{coarse} {fine}");
}

#[test]
fn drift_diffusion_decays_at_least_at_the_poincare_rate() {
    let ops = common::operators(2.0, 1e-6, 128, 6.0, 4);
    let solver = MacroSolver::new(&ops).unwrap();
    let c_star = common::dense_poincare(ops.state());
    // first nonconstant eigenfunction of the Gaussian-weighted operator is x
    let mut u: Vec<f64> = ops.state().grid.nodes();
    let avg = weighted(ops.node_weights(), &u, &vec![1.0; 128]) / ops.mass_grid();
    u.iter_mut().for_each(|v| *v -= avg);
    let dt = 1e-3;
    let traj = solver
        .solve_drift_diffusion(&MacroField::new(u, Role::Density), 1.0, dt, DiffusionScheme::Implicit)
        .unwrap();
    let n0 = ops.macro_inner(&traj[0].values, &traj[0].values).sqrt();
    let n1 = ops.macro_inner(&traj[1000].values, &traj[1000].values).sqrt();
    let rate = (n0 / n1).ln();
    assert!(rate >= 0.95 * c_star, "{rate} {c_star}");
    assert!(solver.macro_gap().unwrap() >= c_star * (1.0 - 1e-9));
}

#[test]
fn blw_inequality_on_seeded_bumps() {
    use rand::{Rng, SeedableRng};
    let ops = common::operators(2.0, 1.0, 128, 6.0, 4);
    let x = ops.state().grid.nodes();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let c: f64 = rng.random_range(-3.0..3.0);
        let s: f64 = rng.random_range(0.3..1.0);
        let a: f64 = rng.random_range(-2.0..2.0);
        let w: Vec<f64> = x.iter().map(|x| a * (-(x - c).powi(2) / (2.0 * s * s)).exp()).collect();
        let t = blw_terms(&ops, &w);
        assert!(t.holds(1e-6), "{t:?}");
    }
}

#[test]
fn elliptic_energy_claims_on_seeded_states() {
    let ops = common::operators(2.0, 1.0, 96, 6.0, 4);
    let solver = MacroSolver::new(&ops).unwrap();
    for seed in 0..50 {
        let u = zero_avg(&ops, 500 + seed);
        let c = elliptic_claims(&solver, &u);
        assert!(c.first_holds(1e-6), "{c:?}");
        assert!(c.second_holds(1e-6), "{c:?}");
    }
}

#[test]
fn elliptic_result_fields_are_consistent() {
    let ops = common::operators(3.0, 1.0, 64, 4.0, 4);
    let solver = MacroSolver::new(&ops).unwrap();
    let h: PhaseState = random_state(&ops, 5, 4);
    let r = solver.apply_a(&h).unwrap();
    for i in 0..64 {
        assert_eq!(r.w_g.values[i], r.u_g.values[i] + r.psi_g.values[i]);
    }
    assert!(solver.condition().is_finite());
}
