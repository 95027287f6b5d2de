//! External confining potential `V` and numerical admissibility checks.

mod assumptions;
mod table;

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub use assumptions::{
    check_confinement_assumptions, AssumptionEntry, AssumptionReport, RadialProbe, Verdict,
};
pub use table::Table;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    PowerLaw { alpha: f64 },
    Tabulated(Table),
}

/// The external potential together with the truncation radius used by all
/// downstream grids.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    family: Family,
    domain_radius: f64,
}

/// `V`, `V'` and `V''` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialValue {
    pub v: f64,
    pub dv: f64,
    pub d2v: f64,
    /// Set when the curvature is singular at the origin and `d2v` holds
    /// the one-sided limit.
    pub singular_origin: bool,
}

impl PotentialSpec {
    pub fn power_law(alpha: f64, domain_radius: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("power-law exponent must be positive, got {alpha}")));
        }
        check_radius(domain_radius)?;
        Ok(Self {
            family: Family::PowerLaw { alpha },
            domain_radius,
        })
    }

    pub fn tabulated(table: Table, domain_radius: f64) -> Result<Self> {
        check_radius(domain_radius)?;
        let (lo, hi) = table.range();
        if lo > -domain_radius || hi < domain_radius {
            return Err(Error::Domain(format!(
                "table range [{lo}, {hi}] does not cover [-{domain_radius}, {domain_radius}]"
            )));
        }
        Ok(Self {
            family: Family::Tabulated(table),
            domain_radius,
        })
    }

    pub fn from_table_file(path: impl AsRef<Path>, domain_radius: f64) -> Result<Self> {
        Self::tabulated(Table::from_file(path)?, domain_radius)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    /// Exponent for the power-law family.
    pub fn alpha(&self) -> Option<f64> {
        match self.family {
            Family::PowerLaw { alpha } => Some(alpha),
            Family::Tabulated(_) => None,
        }
    }

    /// True for the admissible power-law regime `alpha > 1`.
    pub fn is_admissible_regime(&self) -> bool {
        match self.family {
            Family::PowerLaw { alpha } => alpha > 1.0,
            Family::Tabulated(_) => true,
        }
    }

    pub fn eval(&self, x: f64) -> Result<PotentialValue> {
        if !x.is_finite() {
            return Err(Error::Domain(format!("potential evaluated at non-finite x = {x}")));
        }
        match &self.family {
            Family::PowerLaw { alpha } => Ok(eval_power_law(*alpha, x)),
            Family::Tabulated(t) => {
                let (v, dv, d2v) = t.eval(x)?;
                Ok(PotentialValue {
                    v,
                    dv,
                    d2v,
                    singular_origin: false,
                })
            }
        }
    }
}

/// Free-function form of [`PotentialSpec::eval`].
pub fn eval_potential(spec: &PotentialSpec, x: f64) -> Result<PotentialValue> {
    spec.eval(x)
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("domain radius must be positive, got {r}")))
    }
}

fn eval_power_law(alpha: f64, x: f64) -> PotentialValue {
    let ax = x.abs();
    if x == 0.0 {
        let d2v = if alpha == 2.0 {
            2.0
        } else if alpha > 2.0 {
            0.0
        } else if alpha == 1.0 {
            0.0
        } else if alpha > 1.0 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        return PotentialValue {
            v: 0.0,
            dv: 0.0,
            d2v,
            singular_origin: alpha < 2.0,
        };
    }
    PotentialValue {
        v: ax.powf(alpha),
        dv: alpha * ax.powf(alpha - 1.0) * x.signum(),
        d2v: alpha * (alpha - 1.0) * ax.powf(alpha - 2.0),
        singular_origin: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(alpha: f64, x: f64) -> (f64, f64, f64) {
        let p = PotentialSpec::power_law(alpha, 10.0).unwrap().eval(x).unwrap();
        (p.v, p.dv, p.d2v)
    }

    #[test]
    fn quadratic_at_two() {
        assert_eq!(triple(2.0, 2.0), (4.0, 4.0, 2.0));
    }

    #[test]
    fn cubic_sign_handling() {
        assert_eq!(triple(3.0, -1.0), (1.0, -3.0, 6.0));
    }

    #[test]
    fn subquadratic_origin_is_flagged() {
        let p = PotentialSpec::power_law(1.5, 10.0).unwrap().eval(0.0).unwrap();
        assert_eq!((p.v, p.dv), (0.0, 0.0));
        assert!(p.singular_origin);
        assert_eq!(p.d2v, f64::INFINITY);
        let q = PotentialSpec::power_law(2.0, 10.0).unwrap().eval(0.0).unwrap();
        assert!(!q.singular_origin);
        assert_eq!(q.d2v, 2.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PotentialSpec::power_law(0.0, 1.0).is_err());
        assert!(PotentialSpec::power_law(2.0, -1.0).is_err());
        let spec = PotentialSpec::power_law(2.0, 1.0).unwrap();
        assert!(spec.eval(f64::NAN).is_err());
    }

    #[test]
    fn tabulated_must_cover_domain() {
        let xs: Vec<f64> = (0..9).map(|i| -4.0 + i as f64).collect();
        let vs = xs.iter().map(|x| x * x).collect();
        let t = Table::new(xs, vs).unwrap();
        assert!(PotentialSpec::tabulated(t.clone(), 5.0).is_err());
        let spec = PotentialSpec::tabulated(t, 4.0).unwrap();
        assert!(matches!(spec.eval(4.5), Err(Error::Domain(_))));
    }
}
