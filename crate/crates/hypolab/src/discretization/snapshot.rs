use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{mode_len, PhaseState};
use crate::error::{Error, Result};
use crate::steady_state::Grid1D;

/// JSON sidecar of a phase-space snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSidecar {
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "X_max")]
    pub x_max: f64,
    pub eps: f64,
    pub time: f64,
}

/// Writes `<stem>.csv` (columns `x,c0,...`) and `<stem>.json`. Odd modes are
/// written in the row of the node to their left; the last row holds zero.
pub fn write_snapshot(h: &PhaseState, grid: &Grid1D, dir: &Path, stem: &str) -> Result<()> {
    let n = grid.len();
    let k = h.n_modes();
    for (j, m) in h.modes.iter().enumerate() {
        if m.len() != mode_len(n, j) {
            return Err(Error::Shape(format!("mode {j} does not match a grid of {n}")));
        }
    }
    let mut csv = String::from("x");
    for j in 0..k {
        write!(csv, ",c{j}").expect("String write");
    }
    csv.push('\n');
    for (i, x) in grid.nodes().iter().enumerate() {
        write!(csv, "{x}").expect("String write");
        for m in &h.modes {
            let v = m.get(i).copied().unwrap_or(0.0);
            write!(csv, ",{v}").expect("String write");
        }
        csv.push('\n');
    }
    let csv_path = dir.join(format!("{stem}.csv"));
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;
    let side = SnapshotSidecar {
        k,
        n,
        x_max: grid.x_max(),
        eps: h.eps,
        time: h.time,
    };
    let json_path = dir.join(format!("{stem}.json"));
    let text = serde_json::to_string_pretty(&side).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))
}

pub fn read_snapshot(dir: &Path, stem: &str) -> Result<(PhaseState, SnapshotSidecar)> {
    let json_path = dir.join(format!("{stem}.json"));
    let text = std::fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let side: SnapshotSidecar =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let text = std::fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty snapshot".into()))?;
    if header.split(',').count() != side.k + 1 {
        return Err(Error::Parse(format!("header has wrong column count for K = {}", side.k)));
    }
    let mut modes: Vec<Vec<f64>> = vec![Vec::with_capacity(side.n); side.k];
    let mut rows = 0;
    for (r, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != side.k + 1 {
            return Err(Error::Parse(format!("row {} has {} fields", r + 2, fields.len())));
        }
        for (j, f) in fields[1..].iter().enumerate() {
            let v: f64 = f.parse().map_err(|e| Error::Parse(format!("row {}: {e}", r + 2)))?;
            if r < mode_len(side.n, j) {
                modes[j].push(v);
            }
        }
        rows += 1;
    }
    if rows != side.n {
        return Err(Error::Shape(format!("{rows} rows, sidecar says N = {}", side.n)));
    }
    let mut h = PhaseState::from_modes(modes, side.n)?;
    h.eps = side.eps;
    h.time = side.time;
    Ok((h, side))
}
