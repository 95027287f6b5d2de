use super::{Grid1D, MacroField, Role};
use crate::error::{Error, Result};

/// Output of the one-dimensional Poisson inverse.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSolution {
    /// `phi` at the nodes, shifted so that its maximum is zero.
    pub potential: Vec<f64>,
    /// `phi'` at all `N + 1` faces, boundary faces included.
    pub slope: Vec<f64>,
    /// Cumulative mass `m(x) = int_{-inf}^x rho` at the same faces.
    pub cumulative: Vec<f64>,
}

impl PoissonSolution {
    pub fn potential_field(&self) -> MacroField {
        MacroField::new(self.potential.clone(), Role::Potential)
    }

    /// Slopes at the interior faces only.
    pub fn interior_slope(&self) -> &[f64] {
        &self.slope[1..self.slope.len() - 1]
    }

    /// `int |phi'|^2 dx` by the face rule.
    pub fn field_energy(&self, grid: &Grid1D) -> f64 {
        let s = &self.slope;
        let inner: f64 = s[1..s.len() - 1].iter().map(|v| v * v).sum();
        grid.dx() * (inner + 0.5 * (s[0] * s[0] + s[s.len() - 1] * s[s.len() - 1]))
    }
}

/// Solves `-phi'' = rho` on the line through the whole-line representation
/// `phi' = M/2 - m`, with `max phi = 0`.
pub fn poisson_solve_1d(rho: &[f64], total_mass: f64, grid: &Grid1D) -> Result<PoissonSolution> {
    if rho.len() != grid.len() {
        return Err(Error::Shape(format!(
            "density has {} values on a grid of {}",
            rho.len(),
            grid.len()
        )));
    }
    let found = grid.integrate(rho);
    let scale = 1f64.max(total_mass.abs()).max(grid.dx() * rho.iter().map(|r| r.abs()).sum::<f64>());
    if (found - total_mass).abs() > 1e-8 * scale {
        return Err(Error::InconsistentDensity {
            expected: total_mass,
            found,
        });
    }
    let n = grid.len();
    let dx = grid.dx();
    let mut cumulative = vec![0.0; n + 1];
    for i in 0..n {
        cumulative[i + 1] = cumulative[i] + dx * rho[i];
    }
    let slope: Vec<f64> = cumulative.iter().map(|m| 0.5 * total_mass - m).collect();
    let mut potential = vec![0.0; n];
    for i in 0..n - 1 {
        potential[i + 1] = potential[i] + dx * slope[i + 1];
    }
    let top = potential.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for p in &mut potential {
        *p -= top;
    }
    Ok(PoissonSolution {
        potential,
        slope,
        cumulative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dipole_field_energy_is_two_thirds() {
        for n in [64, 256, 1024] {
            let g = Grid1D::new(n, 4.0).unwrap();
            let rho: Vec<f64> = g
                .nodes()
                .iter()
                .map(|&x| if (-1.0..0.0).contains(&x) { 1.0 } else if (0.0..1.0).contains(&x) { -1.0 } else { 0.0 })
                .collect();
            let sol = poisson_solve_1d(&rho, 0.0, &g).unwrap();
            let h = g.dx();
            // tent of height one integrated by the face rule: 2/3 + h^2/3
            let e = sol.field_energy(&g);
            assert!((e - 2.0 / 3.0).abs() <= h * h, "n={n} e={e}");
        }
    }

    #[test]
    fn zero_density_gives_zero_potential() {
        let g = Grid1D::new(32, 2.0).unwrap();
        let sol = poisson_solve_1d(&vec![0.0; 32], 0.0, &g).unwrap();
        assert!(sol.potential.iter().all(|&p| p == 0.0));
        assert!(sol.slope.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn boundary_slopes_are_half_mass() {
        let g = Grid1D::new(128, 6.0).unwrap();
        let raw: Vec<f64> = g.nodes().iter().map(|x| (-x * x).exp()).collect();
        let z = g.integrate(&raw);
        let m = 1.7;
        let rho: Vec<f64> = raw.iter().map(|r| m * r / z).collect();
        let sol = poisson_solve_1d(&rho, m, &g).unwrap();
        assert!((sol.slope[0] - m / 2.0).abs() < 1e-14);
        assert!((sol.slope[128] + m / 2.0).abs() < 1e-12);
        assert_eq!(sol.potential.iter().copied().fold(f64::NEG_INFINITY, f64::max), 0.0);
    }

    #[test]
    fn second_difference_reproduces_density() {
        let g = Grid1D::new(64, 3.0).unwrap();
        let rho: Vec<f64> = g.nodes().iter().map(|x| x * (-x * x).exp()).collect();
        let mass = g.integrate(&rho);
        let sol = poisson_solve_1d(&rho, mass, &g).unwrap();
        let h = g.dx();
        for i in 1..63 {
            let lap = (sol.potential[i + 1] - 2.0 * sol.potential[i] + sol.potential[i - 1]) / (h * h);
            assert!((-lap - rho[i]).abs() < 1e-11);
        }
    }

    #[test]
    fn mass_mismatch_is_rejected() {
        let g = Grid1D::new(32, 2.0).unwrap();
        let rho = vec![1.0; 32];
        assert!(matches!(
            poisson_solve_1d(&rho, 1.0, &g),
            Err(Error::InconsistentDensity { .. })
        ));
    }

    #[test]
    fn pairing_with_zero_mean_density_equals_field_energy() {
        let g = Grid1D::new(100, 5.0).unwrap();
        let rho: Vec<f64> = g.nodes().iter().map(|x| (x * x * x - x) * (-x * x).exp()).collect();
        let m = g.integrate(&rho);
        let rho: Vec<f64> = rho.iter().zip(g.nodes()).map(|(r, x)| r - m * (-x * x).exp() / std::f64::consts::PI.sqrt()).collect();
        let m0 = g.integrate(&rho);
        let sol = poisson_solve_1d(&rho, m0, &g).unwrap();
        let lhs = g.integrate_product(&sol.potential, &rho);
        assert!((lhs - sol.field_energy(&g)).abs() < 1e-12);
    }
}
