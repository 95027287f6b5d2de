use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::SweepRow;
use crate::error::{Error, Result};
use crate::evolution::Series;

pub const SERIES_HEADER: &str = "t,norm_sq,H_delta,D_delta,free_energy,fisher,psi_prime_sup,mass_defect";
pub const SWEEP_HEADER: &str = "eps,delta_eps,zeta,eta,lambda_fit";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn series_csv(series: &Series) -> String {
    let mut s = String::with_capacity(series.records.len() * 120);
    s.push_str(SERIES_HEADER);
    s.push('\n');
    for r in &series.records {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.t,
            r.norm_sq,
            r.h_delta,
            opt(r.d_delta),
            opt(r.free_energy),
            opt(r.fisher),
            r.psi_prime_sup,
            r.mass_defect
        )
        .expect("writing to a String cannot fail");
    }
    s
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from(SWEEP_HEADER);
    s.push('\n');
    for r in rows {
        writeln!(s, "{},{},{},{},{}", r.eps, r.delta_eps, r.zeta, r.eta, opt(r.lambda_fit))
            .expect("writing to a String cannot fail");
    }
    s
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<String> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(name.to_string())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    write_text(dir, name, &text)
}

/// gnuplot script drawing `H_delta` of every series on a log scale.
pub fn gnuplot_script(files: &[String]) -> String {
    let mut s = String::from(
        "# gnuplot -p plot.gp\nset datafile separator ','\nset key autotitle columnhead\nset logscale y\nset xlabel 't'\nset ylabel 'H_delta'\n",
    );
    let parts: Vec<String> = files
        .iter()
        .map(|f| format!("'{f}' using 1:3 with lines title '{}'", f.trim_end_matches(".csv")))
        .collect();
    if !parts.is_empty() {
        s.push_str("plot ");
        s.push_str(&parts.join(", \\\n     "));
        s.push('\n');
    }
    s
}
