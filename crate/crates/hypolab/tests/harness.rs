use std::path::{Path, PathBuf};

use hypolab::harness::*;
use hypolab::rates::{CmMethod, DeltaPolicy, HypocoConstants};

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn opts(dir: &Path) -> RunOptions {
    RunOptions {
        out: dir.to_path_buf(),
        force: false,
        workers: Some(2),
    }
}

/// Plain least squares on `(t, ln v)`, written out independently.
fn ls_rate(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
    for &(t, v) in pts {
        let y = v.ln();
        st += t;
        sy += y;
        stt += t * t;
        sty += t * y;
    }
    -(n * sty - st * sy) / (n * stt - st * st)
}

#[test]
fn fit_examples() {
    let exact: Vec<(f64, f64)> = (0..100).map(|i| (0.1 * i as f64, (-0.03 * i as f64).exp())).collect();
    assert!((fit_decay_rate(&exact, FitWindow::default()).unwrap().rate - 0.3).abs() < 1e-9);

    let flat: Vec<(f64, f64)> = (0..30).map(|i| (i as f64, 1.0)).collect();
    let f = fit_decay_rate(&flat, FitWindow::default()).unwrap();
    assert_eq!(f.rate, 0.0);
    assert!(f.r_squared.is_none());

    let wobbly: Vec<(f64, f64)> = (0..200)
        .map(|i| {
            let t = 0.1 * i as f64;
            (t, (-0.3 * t).exp() * (1.0 + 0.01 * t.sin()))
        })
        .collect();
    let f = fit_decay_rate(&wobbly, FitWindow::default()).unwrap();
    assert!((f.rate - 0.3).abs() < 0.005);
    let oracle = ls_rate(&wobbly[20..190]);
    assert!((f.rate - oracle).abs() < 1e-12);
    assert!(f.band.0 <= f.rate && f.rate <= f.band.1);
}

#[test]
fn bundled_configs_parse() {
    for name in ["alpha1_linear", "alpha2_linear", "alpha2_nonlinear", "alpha2_sweep", "alpha3_linear"] {
        let cfg = ExperimentConfig::load(config_dir().join(format!("{name}.toml"))).unwrap();
        assert_eq!(cfg.name.as_deref(), Some(name));
    }
}

const BASE: &str = r#"
[potential]
family = "power_law"
alpha = 2.0
[steady]
mass = 1.0
[grid]
n = 48
x_max = 5.0
[basis]
k = 8
[run]
t_end = 4.0
delta = 0.2
[profile]
kind = "random"
seed = 3
amplitude = 0.01
"#;

#[test]
fn config_schema() {
    let cfg = ExperimentConfig::from_toml(BASE).unwrap();
    assert_eq!(cfg.run.delta.policy().unwrap(), DeltaPolicy::Explicit(0.2));
    assert_eq!(cfg.run.cm_method, CmMethod::DirectOperatorNorm);

    let named = BASE.replace("delta = 0.2", "delta = \"optimize\"");
    assert_eq!(ExperimentConfig::from_toml(&named).unwrap().run.delta.policy().unwrap(), DeltaPolicy::Optimize);

    let bad_name = BASE.replace("delta = 0.2", "delta = \"largest\"");
    assert!(ExperimentConfig::from_toml(&bad_name).is_err());

    let unknown = BASE.replace("k = 8", "k = 8\nq = 3");
    let err = ExperimentConfig::from_toml(&unknown).unwrap_err().to_string();
    assert!(err.contains('q'), "{err}");

    let unsorted = BASE.replace("t_end = 4.0", "t_end = 4.0\neps_list = [0.1, 0.3]");
    assert!(ExperimentConfig::from_toml(&unsorted).unwrap_err().to_string().contains("eps_list"));

    let negative = BASE.replace("mass = 1.0", "mass = -1.0");
    assert!(ExperimentConfig::from_toml(&negative).unwrap_err().to_string().contains("steady.mass"));

    let nonlinear_eps = BASE.replace("t_end = 4.0", "t_end = 4.0\nmode = \"nonlinear\"\neps = 0.5");
    assert!(ExperimentConfig::from_toml(&nonlinear_eps).is_err());

    let mut seeded = ExperimentConfig::from_toml(BASE).unwrap();
    seeded.set_seed(99);
    assert_eq!(seeded.profile.shape, hypolab::evolution::Profile::Random { seed: 99 });
}

#[test]
fn sweep_table_with_unit_constants() {
    let c = HypocoConstants::from_constants(1.0, 1.0, 1.0, CmMethod::DirectOperatorNorm, DeltaPolicy::HalfDeltaStar).unwrap();
    let eps = [1.0, 0.5, 0.1, 0.01];
    for (row, e) in sweep_table(&c, &eps).iter().zip(eps) {
        assert!((row.delta_eps - 4.0 * e / (4.0 * e * e + 2.0)).abs() < 1e-15);
        assert!((row.zeta - 1.0).abs() < 1e-15);
        assert!((row.eta - 0.25).abs() < 1e-15);
    }
}

#[test]
fn linear_run_and_determinism() {
    let cfg = ExperimentConfig::from_toml(BASE).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = run_pipeline(&cfg, Stage::Simulate, &opts(a.path())).unwrap();
    let rb = run_pipeline(&cfg, Stage::Simulate, &opts(b.path())).unwrap();
    assert!(ra.passed(), "{:?} {:?} {:#?}", ra.failed_stage, ra.error, ra.verdicts);
    assert!(ra.lambda_fit.unwrap() >= 0.9 * ra.rates.as_ref().unwrap().constants.lambda);
    for f in ["series_linear.csv", "steady_state.csv", "rates.json", "report.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between identical runs");
    }
    let csv = std::fs::read_to_string(a.path().join("series_linear.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), SERIES_HEADER);
    assert!(a.path().join("plot.gp").exists());
    assert_eq!(rb.files, ra.files);
}

#[test]
fn verdicts_are_recomputable_from_csv() {
    let cfg = ExperimentConfig::from_toml(BASE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(&cfg, Stage::Simulate, &opts(dir.path())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("series_linear.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect())
        .collect();
    let h: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[2])).collect();
    let refit = fit_decay_rate(&h, FitWindow::default()).unwrap();
    assert_eq!(Some(refit.rate), report.lambda_fit);
    let mono = h.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-8));
    assert_eq!(mono, report.verdict("h_delta_monotone").unwrap().passed);
}

#[test]
fn inadmissible_potential_stops_unless_forced() {
    let cfg = ExperimentConfig::load(config_dir().join("alpha1_linear.toml")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(&cfg, Stage::Simulate, &opts(dir.path())).unwrap();
    assert!(!report.passed());
    assert_eq!(report.failed_stage.as_deref(), Some("check-assumptions"));
    assert!(report.assumptions.as_ref().unwrap().entry("V4").unwrap().verdict != hypolab::potential::Verdict::Pass);
    assert!(report.rates.is_none());

    let mut forced = opts(dir.path());
    forced.force = true;
    let report = run_pipeline(&cfg, Stage::CertifyRate, &forced).unwrap();
    assert!(report.failed_stage.is_none());
    assert!(report.rates.is_some());
    assert!(!report.verdict("assumptions").unwrap().passed);
}

#[test]
fn single_eps_sweep_matches_the_plain_run() {
    let text = BASE.replace("t_end = 4.0", "t_end = 4.0\neps_list = [1.0]");
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let report = run_pipeline(&cfg, Stage::Full, &opts(dir.path())).unwrap();
    assert_eq!(report.sweep.len(), 1);
    let swept = report.sweep[0].lambda_fit.unwrap();
    let plain = report.lambda_fit.unwrap();
    assert!((swept - plain).abs() <= 0.02 * plain, "{swept} vs {plain}");
    let csv = std::fs::read_to_string(dir.path().join("eps_sweep.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), SWEEP_HEADER);
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn stages_write_their_artifacts() {
    let cfg = ExperimentConfig::from_toml(BASE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let r = run_pipeline(&cfg, Stage::SteadyState, &opts(dir.path())).unwrap();
    assert!(r.passed());
    assert!(dir.path().join("steady_state.csv").exists());
    assert!(!dir.path().join("rates.json").exists());
    assert!(r.steady.unwrap().residual < 1e-8);
}
