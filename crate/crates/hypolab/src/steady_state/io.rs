use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Grid1D, SteadyState};
use crate::error::{Error, Result};

const HEADER: &str = "x,rho_star,phi_star,W_star,dW_star";

/// JSON sidecar written next to `steady_state.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadySidecar {
    pub mass: f64,
    pub residual: f64,
    pub alpha: Option<f64>,
    #[serde(rename = "X_max")]
    pub x_max: f64,
    #[serde(rename = "N")]
    pub n: usize,
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_steady_state(state: &SteadyState, dir: &Path, stem: &str) -> Result<()> {
    let mut csv = String::with_capacity(state.len() * 100);
    csv.push_str(HEADER);
    csv.push('\n');
    for (i, x) in state.grid.nodes().iter().enumerate() {
        writeln!(
            csv,
            "{},{},{},{},{}",
            x, state.rho[i], state.phi[i], state.w[i], state.dw[i]
        )
        .expect("writing to a String cannot fail");
    }
    let csv_path = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;

    let side = SteadySidecar {
        mass: state.mass,
        residual: state.residual,
        alpha: state.alpha,
        x_max: state.grid.x_max(),
        n: state.len(),
    };
    let json_path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&side).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))
}

pub fn read_steady_state(dir: &Path, stem: &str) -> Result<SteadyState> {
    let json_path = dir.join(format!("{stem}.json"));
    let text = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let side: SteadySidecar = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let grid = Grid1D::new(side.n, side.x_max)?;

    let csv_path = dir.join(format!("{stem}.csv"));
    let text = std::fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(HEADER) {
        return Err(Error::Parse(format!("{}: unexpected header", csv_path.display())));
    }
    let mut cols: [Vec<f64>; 5] = Default::default();
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!("{}: row {} has {} fields", csv_path.display(), k + 2, fields.len())));
        }
        for (c, f) in cols.iter_mut().zip(fields) {
            c.push(f.parse().map_err(|e| Error::Parse(format!("row {}: {e}", k + 2)))?);
        }
    }
    let [x, rho, phi, w, dw] = cols;
    if x.len() != grid.len() {
        return Err(Error::Shape(format!("{} rows for a grid of {}", x.len(), grid.len())));
    }
    SteadyState::from_columns(grid, rho, phi, w, dw, side.mass, side.alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;
    use crate::steady_state::{solve_poisson_boltzmann, SolverOptions};

    #[test]
    fn roundtrip_is_exact() {
        let spec = PotentialSpec::power_law(2.0, 5.0).unwrap();
        let grid = Grid1D::new(64, 5.0).unwrap();
        let s = solve_poisson_boltzmann(&spec, 1.0, &grid, &SolverOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_steady_state(&s, dir.path(), "steady_state").unwrap();
        let r = read_steady_state(dir.path(), "steady_state").unwrap();
        assert_eq!(r.rho, s.rho);
        assert_eq!(r.phi, s.phi);
        assert_eq!(r.w, s.w);
        assert_eq!(r.dw, s.dw);
        assert_eq!(r.mass, s.mass);
        assert_eq!(r.residual, s.residual);
    }
}
