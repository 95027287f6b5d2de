use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{Mode, Profile};
use crate::potential::PotentialSpec;
use crate::rates::{CmMethod, DeltaPolicy};

/// Experiment description read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub potential: PotentialSection,
    pub steady: SteadySection,
    pub grid: GridSection,
    pub basis: BasisSection,
    pub run: RunSection,
    pub profile: ProfileSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSection {
    PowerLaw { alpha: f64 },
    /// Two-column `x, V` file, relative to the config file.
    Table { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteadySection {
    pub mass: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n: usize,
    pub x_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    pub k: usize,
}

/// `"half_delta_star"`, `"optimize"` or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSetting {
    Value(f64),
    Named(String),
}

impl Default for DeltaSetting {
    fn default() -> Self {
        DeltaSetting::Named("half_delta_star".into())
    }
}

impl DeltaSetting {
    pub fn policy(&self) -> Result<DeltaPolicy> {
        match self {
            DeltaSetting::Value(v) => Ok(DeltaPolicy::Explicit(*v)),
            DeltaSetting::Named(s) => match s.as_str() {
                "half_delta_star" => Ok(DeltaPolicy::HalfDeltaStar),
                "optimize" => Ok(DeltaPolicy::Optimize),
                other => Err(Error::Config(format!(
                    "run.delta: expected \"half_delta_star\", \"optimize\" or a number, got \"{other}\""
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default)]
    pub eps_list: Vec<f64>,
    #[serde(default)]
    pub delta: DeltaSetting,
    #[serde(default)]
    pub cm_method: CmMethod,
    /// Time step at `eps = 1`; defaults to `cfl_fraction` times the limit.
    /// Parabolic runs scale it by `eps`.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl_fraction")]
    pub cfl_fraction: f64,
    pub t_end: f64,
    /// Steps between records; when absent, about `records` records are kept.
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default = "default_records")]
    pub records: usize,
    /// Also assemble the individual entropy-production terms.
    #[serde(default)]
    pub verbose: bool,
    /// Compare the densities at `diffusion_time` against the macroscopic
    /// flow for each of these `eps`.
    #[serde(default)]
    pub diffusion_eps: Vec<f64>,
    #[serde(default = "one")]
    pub diffusion_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSection {
    #[serde(flatten)]
    pub shape: Profile,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    2000
}
fn one() -> f64 {
    1.0
}
fn default_cfl_fraction() -> f64 {
    0.9
}
fn default_records() -> usize {
    200
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and validates `path`; table paths are resolved against the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let PotentialSection::Table { path: p } = &mut cfg.potential {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        if cfg.name.is_none() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned());
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(Error::Config(format!("{field}: {why}")));
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if let PotentialSection::PowerLaw { alpha } = self.potential {
            if !positive(alpha) {
                return bad("potential.alpha", "must be positive");
            }
        }
        if !positive(self.steady.mass) {
            return bad("steady.mass", "must be positive");
        }
        if !positive(self.steady.tol) || self.steady.max_iter == 0 {
            return bad("steady", "tol and max_iter must be positive");
        }
        if self.grid.n < 8 {
            return bad("grid.n", "needs at least 8 cells");
        }
        if !positive(self.grid.x_max) {
            return bad("grid.x_max", "must be positive");
        }
        if self.basis.k < 4 {
            return bad("basis.k", "needs at least 4 modes");
        }
        let r = &self.run;
        if !positive(r.eps) || r.eps > 1.0 {
            return bad("run.eps", "must lie in (0, 1]");
        }
        if r.eps_list.iter().any(|e| !positive(*e) || *e > 1.0) {
            return bad("run.eps_list", "entries must lie in (0, 1]");
        }
        if r.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad("run.eps_list", "must be sorted in strictly descending order");
        }
        if r.diffusion_eps.iter().any(|e| !positive(*e) || *e > 1.0) || !positive(r.diffusion_time) {
            return bad("run.diffusion_eps", "entries must lie in (0, 1] with a positive diffusion_time");
        }
        r.delta.policy()?;
        if let DeltaSetting::Value(v) = r.delta {
            if !positive(v) {
                return bad("run.delta", "must be positive");
            }
        }
        if r.dt.is_some_and(|d| !positive(d)) || !(r.cfl_fraction > 0.0 && r.cfl_fraction <= 1.0) {
            return bad("run.dt", "dt must be positive and cfl_fraction in (0, 1]");
        }
        if !positive(r.t_end) {
            return bad("run.t_end", "must be positive");
        }
        if r.record_every == Some(0) || r.records < 10 {
            return bad("run.record_every", "record_every must be positive and records at least 10");
        }
        if r.mode == Mode::Nonlinear && r.eps != 1.0 {
            return bad("run.eps", "nonlinear runs use eps = 1");
        }
        if r.mode == Mode::Linear && r.eps != 1.0 {
            return bad("run.mode", "use the parabolic mode for eps < 1");
        }
        if !positive(self.profile.amplitude) {
            return bad("profile.amplitude", "must be positive");
        }
        if let Profile::GaussianBump { sigma, mode, .. } = self.profile.shape {
            if !positive(sigma) || mode >= self.basis.k {
                return bad("profile", "gaussian_bump needs sigma > 0 and mode < basis.k");
            }
        }
        if let Profile::ModeSeed { k, .. } = self.profile.shape {
            if k >= self.basis.k {
                return bad("profile.k", "must be below basis.k");
            }
        }
        Ok(())
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec> {
        match &self.potential {
            PotentialSection::PowerLaw { alpha } => PotentialSpec::power_law(*alpha, self.grid.x_max),
            PotentialSection::Table { path } => PotentialSpec::from_table_file(path, self.grid.x_max),
        }
    }

    /// Replaces the seed of a random profile.
    pub fn set_seed(&mut self, seed: u64) {
        if let Profile::Random { seed: s } = &mut self.profile.shape {
            *s = seed;
        }
    }
}
