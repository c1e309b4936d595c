//! Batch runner: a JSON config in, CSV + manifest + summary out.
//!
//! Exit codes are 0 (all checks pass), 1 (configuration or I/O error, nothing
//! written) and 2 (a runtime check failed; artifacts are still written).

use crate::diagnostics::{
    amplitude_sweep, classify, dissipation_budget, non_enhancement_witness, sdist_check, RelaxationQuery, TrendVerdict,
};
use crate::error::Error;
use crate::floquet::{build_period_matrix, eigen_report, roughness_profile_with, unitarity_defect};
use crate::flow::{Axis, FlowSpec, Profile};
use crate::porous::{pm_dissipation_budget, pm_dissipation_residual, pm_evolve, pm_witness, PorousConfig, PorousState};
use crate::solver::{dissipation_residual, evolve, Formulation, SolverConfig, Stepper, Substepping, TrajectoryRecord};
use crate::spectral::{SpectralField, WaveIndex, FOUR_PI_SQ};
use crate::transport::{free_evolve, trace, wrap_point};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

/// Environment variable selecting verify-suite fault injections
/// (`no-dealias`, `double-dt`, comma separated).
pub const VERIFY_OVERRIDE_ENV: &str = "RELAXLAB_VERIFY_OVERRIDE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Simulate,
    Sweep,
    Floquet,
    Porous,
    Tracer,
    Verify,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Sweep => "sweep",
            Kind::Floquet => "floquet",
            Kind::Porous => "porous",
            Kind::Tracer => "tracer",
            Kind::Verify => "verify",
        }
    }
}

impl FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| format!("unknown experiment kind '{s}'"))
    }
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Initial scalar field. `mean` is added to the mean-zero part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialField {
    /// Seeded random field of unit mean-zero norm (times `norm`).
    Random {
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_band")]
        band: f64,
        #[serde(default = "one")]
        norm: f64,
        #[serde(default)]
        mean: f64,
    },
    /// `amplitude * sin(2 pi k.x)`.
    Sin {
        k: [i64; 2],
        amplitude: f64,
        #[serde(default)]
        mean: f64,
    },
    /// `amplitude * cos(2 pi k.x)`.
    Cos {
        k: [i64; 2],
        amplitude: f64,
        #[serde(default)]
        mean: f64,
    },
}

fn default_band() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

impl InitialField {
    pub fn build(&self, n_trunc: usize, default_seed: u64) -> Result<SpectralField, String> {
        let check = |k: [i64; 2]| {
            let w = WaveIndex::new(k[0], k[1]);
            if w.norm_sq() == 0 || k[0].unsigned_abs() as usize > n_trunc || k[1].unsigned_abs() as usize > n_trunc {
                Err(format!("mode {k:?} is zero or outside truncation {n_trunc}"))
            } else {
                Ok(w)
            }
        };
        let (mut f, mean) = match *self {
            InitialField::Random { seed, band, norm, mean } => {
                if !(band >= 1.0 && band <= n_trunc as f64) {
                    return Err(format!("random band {band} not in [1, n_trunc]"));
                }
                (SpectralField::random(n_trunc, seed.unwrap_or(default_seed), band).scaled(norm), mean)
            }
            InitialField::Sin { k, amplitude, mean } => (SpectralField::sin_mode(n_trunc, check(k)?, amplitude), mean),
            InitialField::Cos { k, amplitude, mean } => (SpectralField::cos_mode(n_trunc, check(k)?, amplitude), mean),
        };
        f.set_mean(mean);
        Ok(f)
    }

    pub fn describe(&self, default_seed: u64) -> String {
        match self {
            InitialField::Random { seed, band, norm, mean } => {
                format!("random(seed={}, band={band}, norm={norm}, mean={mean})", seed.unwrap_or(default_seed))
            }
            InitialField::Sin { k, amplitude, mean } => format!("{amplitude}*sin(2pi {k:?}.x) + {mean}"),
            InitialField::Cos { k, amplitude, mean } => format!("{amplitude}*cos(2pi {k:?}.x) + {mean}"),
        }
    }
}

/// Experiment description. Which fields are required depends on the kind;
/// unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub flow: Option<FlowSpec>,
    pub n_trunc: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    /// Fast-clock amplitude `A` (`A u . grad phi = Delta phi`).
    pub amplitude: Option<f64>,
    /// Slow-clock diffusivity `eps` (`u . grad phi = eps Delta phi`).
    pub epsilon: Option<f64>,
    pub amplitudes: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub tau_max: Option<f64>,
    pub q: Option<f64>,
    pub h: Option<f64>,
    pub truncations: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub initial: Option<InitialField>,
    pub record_stride: Option<usize>,
    pub dealias: Option<bool>,
    /// Fixed advection substeps per step instead of automatic subcycling.
    pub substeps: Option<usize>,
    /// Tracer start point.
    pub start: Option<[f64; 2]>,
    pub t_start: Option<f64>,
    pub output: Option<PathBuf>,
}

const DEFAULT_SEED: u64 = 42;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        1
    }
}

fn cfg_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Option<f64>,
    pub limit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    fn bound(name: &str, value: f64, cmp: &str, limit: f64) -> Self {
        let pass = match cmp {
            "<=" => value <= limit,
            ">=" => value >= limit,
            _ => unreachable!(),
        };
        Check {
            name: name.into(),
            pass,
            value: Some(value),
            limit: Some(format!("{cmp} {limit:e}")),
            detail: None,
        }
    }

    fn flag(name: &str, pass: bool, detail: Option<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            value: None,
            limit: None,
            detail,
        }
    }

    fn error(name: &str, e: &Error) -> Self {
        Check::flag(name, false, Some(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub kind: Kind,
    pub config_sha256: String,
    pub artifacts: Vec<String>,
    pub wall_time_s: f64,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }
}

/// Parse and validate a config for `kind`. Nothing is computed.
pub fn load_config(kind: Kind, text: &str) -> Result<ExperimentConfig, HarnessError> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))?;
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(cfg_err(format!("config kind '{k}' does not match command '{kind}'")));
        }
    }
    validate(kind, &cfg)?;
    Ok(cfg)
}

fn need<T: Clone>(v: &Option<T>, name: &str) -> Result<T, HarnessError> {
    v.clone().ok_or_else(|| cfg_err(format!("missing field '{name}'")))
}

fn positive(v: f64, name: &str) -> Result<(), HarnessError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(cfg_err(format!("'{name}' must be positive and finite, got {v}")))
    }
}

fn formulation(cfg: &ExperimentConfig) -> Result<Formulation, HarnessError> {
    match (cfg.amplitude, cfg.epsilon) {
        (Some(a), None) if a >= 0.0 && a.is_finite() => Ok(Formulation::Amplitude(a)),
        (None, Some(e)) if e > 0.0 && e.is_finite() => Ok(Formulation::Diffusivity(e)),
        (None, None) => Ok(Formulation::Amplitude(0.0)),
        (Some(_), Some(_)) => Err(cfg_err("give either 'amplitude' or 'epsilon', not both")),
        _ => Err(cfg_err("'amplitude' must be >= 0 and 'epsilon' > 0")),
    }
}

fn reject(cfg: &ExperimentConfig, names: &[(&str, bool)], kind: Kind) -> Result<(), HarnessError> {
    for (name, present) in names {
        if *present {
            return Err(cfg_err(format!("field '{name}' is not used by '{kind}'")));
        }
    }
    let _ = cfg;
    Ok(())
}

fn validate(kind: Kind, cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    let check_n = |n: usize| {
        if (1..=128).contains(&n) {
            Ok(())
        } else {
            Err(cfg_err(format!("'n_trunc' {n} not in [1, 128]")))
        }
    };
    if kind != Kind::Verify {
        need(&cfg.flow, "flow")?;
    }
    if let Some(s) = cfg.record_stride {
        if s == 0 {
            return Err(cfg_err("'record_stride' must be >= 1"));
        }
    }
    if let Some(s) = cfg.substeps {
        if s == 0 {
            return Err(cfg_err("'substeps' must be >= 1"));
        }
    }
    match kind {
        Kind::Simulate | Kind::Porous => {
            check_n(need(&cfg.n_trunc, "n_trunc")?)?;
            positive(need(&cfg.dt, "dt")?, "dt")?;
            positive(need(&cfg.t_end, "t_end")?, "t_end")?;
            formulation(cfg)?;
            let init = need(&cfg.initial, "initial")?;
            let phi0 = init.build(cfg.n_trunc.unwrap(), cfg.seed.unwrap_or(DEFAULT_SEED)).map_err(cfg_err)?;
            if kind == Kind::Porous {
                let q = need(&cfg.q, "q")?;
                let h = need(&cfg.h, "h")?;
                let pc = porous_config(cfg)?;
                pc.validate().map_err(|e| cfg_err(e.to_string()))?;
                reject(cfg, &[("dealias", cfg.dealias.is_some()), ("substeps", cfg.substeps.is_some())], kind)?;
                let (lo, hi) = PorousState::new(phi0).range();
                if lo < h || hi > 1.0 / h {
                    return Err(cfg_err(format!(
                        "initial range [{lo}, {hi}] leaves [h, 1/h] = [{h}, {}] (q = {q})",
                        1.0 / h
                    )));
                }
            } else {
                reject(cfg, &[("q", cfg.q.is_some()), ("h", cfg.h.is_some())], kind)?;
                solver_config(cfg)?.validate().map_err(|e| cfg_err(e.to_string()))?;
            }
        }
        Kind::Sweep => {
            check_n(need(&cfg.n_trunc, "n_trunc")?)?;
            positive(need(&cfg.dt, "dt")?, "dt")?;
            positive(need(&cfg.tau_max, "tau_max")?, "tau_max")?;
            let d = need(&cfg.delta, "delta")?;
            if !(d > 0.0 && d < 1.0) {
                return Err(cfg_err(format!("'delta' {d} not in (0, 1)")));
            }
            let amps = need(&cfg.amplitudes, "amplitudes")?;
            if amps.is_empty() || amps.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
                return Err(cfg_err("'amplitudes' must be a nonempty list of finite values >= 0"));
            }
            if amps.windows(2).any(|w| w[1] <= w[0]) {
                return Err(cfg_err("'amplitudes' must be strictly increasing"));
            }
            reject(
                cfg,
                &[
                    ("amplitude", cfg.amplitude.is_some()),
                    ("epsilon", cfg.epsilon.is_some()),
                    ("t_end", cfg.t_end.is_some()),
                ],
                kind,
            )?;
            if let Some(init) = &cfg.initial {
                let f = init.build(cfg.n_trunc.unwrap(), cfg.seed.unwrap_or(DEFAULT_SEED)).map_err(cfg_err)?;
                if (f.var_sq().sqrt() - 1.0).abs() > 1e-10 {
                    return Err(cfg_err("sweep initial field must have unit mean-zero norm"));
                }
            }
        }
        Kind::Floquet => {
            check_n(need(&cfg.n_trunc, "n_trunc")?)?;
            positive(need(&cfg.dt, "dt")?, "dt")?;
            if let Some(t) = &cfg.truncations {
                if t.len() < 2 || t.windows(2).any(|w| w[1] <= w[0]) || t.iter().any(|&n| !(1..=128).contains(&n)) {
                    return Err(cfg_err("'truncations' must be increasing, in [1, 128], with at least two entries"));
                }
            }
        }
        Kind::Tracer => {
            let s = need(&cfg.start, "start")?;
            if !(s[0].is_finite() && s[1].is_finite()) {
                return Err(cfg_err("'start' must be finite"));
            }
            positive(need(&cfg.dt, "dt")?, "dt")?;
            let t0 = cfg.t_start.unwrap_or(0.0);
            let t1 = need(&cfg.t_end, "t_end")?;
            if !(t1 > t0 && t0.is_finite() && t1.is_finite()) {
                return Err(cfg_err("'t_end' must exceed 't_start'"));
            }
        }
        Kind::Verify => {
            let used = [
                ("flow", cfg.flow.is_some()),
                ("n_trunc", cfg.n_trunc.is_some()),
                ("dt", cfg.dt.is_some()),
                ("t_end", cfg.t_end.is_some()),
                ("amplitudes", cfg.amplitudes.is_some()),
            ];
            reject(cfg, &used, kind)?;
        }
    }
    Ok(())
}

fn solver_config(cfg: &ExperimentConfig) -> Result<SolverConfig, HarnessError> {
    let mut sc = SolverConfig::new(
        need(&cfg.n_trunc, "n_trunc")?,
        need(&cfg.dt, "dt")?,
        formulation(cfg)?,
        cfg.t_end.unwrap_or(1.0),
    )
    .with_dealias(cfg.dealias.unwrap_or(true))
    .with_record_stride(cfg.record_stride.unwrap_or(1));
    if let Some(m) = cfg.substeps {
        sc = sc.with_substepping(Substepping::Fixed(m));
    }
    Ok(sc)
}

fn porous_config(cfg: &ExperimentConfig) -> Result<PorousConfig, HarnessError> {
    Ok(PorousConfig::new(
        need(&cfg.q, "q")?,
        need(&cfg.h, "h")?,
        formulation(cfg)?,
        need(&cfg.dt, "dt")?,
        need(&cfg.n_trunc, "n_trunc")?,
        need(&cfg.t_end, "t_end")?,
    )
    .with_record_stride(cfg.record_stride.unwrap_or(1)))
}

/// Hex SHA-256 of the raw config bytes.
pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Output {
    csvs: Vec<(&'static str, String)>,
    checks: Vec<Check>,
    results: serde_json::Value,
    summary: Vec<String>,
}

/// Load the config at `config_path`, run it, and write artifacts into `out`
/// (or the config's `output`, or `./out`).
pub fn run(kind: Kind, config_path: Option<&Path>, out: Option<&Path>) -> Result<RunManifest, HarnessError> {
    let bytes = match config_path {
        Some(p) => std::fs::read(p).map_err(|e| cfg_err(format!("cannot read {}: {e}", p.display())))?,
        None if kind == Kind::Verify => b"{}".to_vec(),
        None => return Err(cfg_err("--config is required")),
    };
    let text = std::str::from_utf8(&bytes).map_err(|_| cfg_err("config is not UTF-8"))?;
    let cfg = load_config(kind, text)?;
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    run_config(kind, &cfg, &config_hash(&bytes), &dir)
}

/// Run an already validated config.
pub fn run_config(kind: Kind, cfg: &ExperimentConfig, hash: &str, dir: &Path) -> Result<RunManifest, HarnessError> {
    let start = Instant::now();
    let output = match kind {
        Kind::Simulate => simulate(cfg),
        Kind::Sweep => sweep(cfg),
        Kind::Floquet => floquet(cfg),
        Kind::Porous => porous(cfg),
        Kind::Tracer => tracer(cfg),
        Kind::Verify => verify(&overrides()),
    };
    let wall = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(dir)?;
    let mut artifacts = Vec::new();
    for (name, body) in &output.csvs {
        let mut s = body.clone();
        let _ = writeln!(s, "# manifest: manifest.json config_sha256={hash}");
        std::fs::write(dir.join(name), s)?;
        artifacts.push(name.to_string());
    }
    artifacts.push("manifest.json".into());
    artifacts.push("summary.txt".into());
    let pass = output.checks.iter().all(|c| c.pass);
    let manifest = RunManifest {
        tool: "relaxlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        kind,
        config_sha256: hash.into(),
        artifacts,
        wall_time_s: wall,
        pass,
        checks: output.checks,
        results: output.results,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join("manifest.json"), json + "\n")?;
    std::fs::write(dir.join("summary.txt"), summary(&manifest, &output.summary))?;
    Ok(manifest)
}

fn summary(m: &RunManifest, lines: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "relaxlab {} {}", m.version, m.kind);
    let _ = writeln!(s, "config sha256 {}", m.config_sha256);
    let _ = writeln!(s, "wall time {:.2} s", m.wall_time_s);
    for l in lines {
        let _ = writeln!(s, "{l}");
    }
    let _ = writeln!(s);
    for c in &m.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        let mut line = format!("{status}  {}", c.name);
        if let Some(v) = c.value {
            let _ = write!(line, "  value {v:e}");
        }
        if let Some(l) = &c.limit {
            let _ = write!(line, "  limit {l}");
        }
        if let Some(d) = &c.detail {
            let _ = write!(line, "  ({d})");
        }
        let _ = writeln!(s, "{line}");
    }
    let _ = writeln!(s, "overall {}", if m.pass { "PASS" } else { "FAIL" });
    s
}

fn failed(name: &str, e: &Error, summary: Vec<String>) -> Output {
    Output {
        csvs: Vec::new(),
        checks: vec![Check::error(name, e)],
        results: serde_json::Value::Null,
        summary,
    }
}

fn trajectory_checks(traj: &TrajectoryRecord, cfg: &SolverConfig) -> Vec<Check> {
    let mut v = vec![
        Check::bound("mean_conservation", traj.mean_drift, "<=", 1e-12),
        Check::flag("monotone_l2_decay", traj.is_monotone(), None),
    ];
    if cfg.diffusivity() > 0.0 {
        v.push(Check::bound("dissipation_residual", dissipation_residual(traj, cfg), "<=", 1e-3));
        v.push(Check::bound(
            "dissipation_budget",
            dissipation_budget(traj, traj.diffusivity),
            "<=",
            1.0 + 1e-3,
        ));
    }
    v
}

fn initial(cfg: &ExperimentConfig) -> (SpectralField, String) {
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let init = cfg.initial.clone().unwrap_or(InitialField::Random {
        seed: None,
        band: default_band(),
        norm: 1.0,
        mean: 0.0,
    });
    (init.build(cfg.n_trunc.unwrap(), seed).expect("validated"), init.describe(seed))
}

fn simulate(cfg: &ExperimentConfig) -> Output {
    let flow = cfg.flow.clone().unwrap();
    let sc = solver_config(cfg).expect("validated");
    let (phi0, desc) = initial(cfg);
    let lines = vec![format!("flow {}", flow.name()), format!("initial {desc}")];
    let (traj, fin) = match evolve(&phi0, &flow, &sc) {
        Ok(r) => r,
        Err(e) => return failed("run_completed", &e, lines),
    };
    let mut lines = lines;
    lines.push(format!("records {}", traj.times.len()));
    lines.push(format!("final l2_sq {:e}", fin.l2_sq()));
    lines.push(format!("final var_sq {:e}", fin.var_sq()));
    let results = serde_json::json!({
        "final_time": traj.times.last(),
        "final_l2_sq": fin.l2_sq(),
        "final_var_sq": fin.var_sq(),
        "mean": traj.mean_value,
    });
    Output {
        csvs: vec![("decay.csv", traj.to_csv())],
        checks: trajectory_checks(&traj, &sc),
        results,
        summary: lines,
    }
}

fn sweep(cfg: &ExperimentConfig) -> Output {
    let flow = cfg.flow.clone().unwrap();
    let n = cfg.n_trunc.unwrap();
    let (phi0, desc) = initial(cfg);
    let tmpl = SolverConfig::new(n, cfg.dt.unwrap(), Formulation::Amplitude(0.0), 1.0)
        .with_dealias(cfg.dealias.unwrap_or(true))
        .with_record_stride(cfg.record_stride.unwrap_or(1));
    let lines = vec![format!("flow {}", flow.name()), format!("initial {desc}")];
    let amps = cfg.amplitudes.clone().unwrap();
    let curve = RelaxationQuery::new(flow, phi0, cfg.delta.unwrap(), cfg.tau_max.unwrap(), tmpl)
        .and_then(|q| amplitude_sweep(&q, &amps));
    let mut curve = match curve {
        Ok(c) => c,
        Err(e) => return failed("sweep_completed", &e, lines),
    };
    curve.phi0_descriptor = desc;
    let (verdict, note) = match classify(&curve) {
        Ok(v) => (v, None),
        Err(e) => (TrendVerdict::Inconclusive, Some(e.to_string())),
    };
    let mut lines = lines;
    for (a, t) in curve.amplitudes.iter().zip(curve.values()) {
        lines.push(format!("A {a:<8} tau {t:e}"));
    }
    lines.push(format!("verdict {verdict}"));
    if let Some(n) = &note {
        lines.push(format!("note {n}"));
    }
    let taus = curve.values();
    let results = serde_json::json!({
        "verdict": verdict,
        "amplitudes": curve.amplitudes,
        "taus": taus,
        "saturated": curve.taus.iter().map(|t| t.time().is_none()).collect::<Vec<_>>(),
        "delta": curve.delta,
        "tau_max": curve.tau_max,
        "note": note,
    });
    let checks = vec![Check::flag(
        "relaxation_times_bounded",
        taus.iter().all(|t| *t >= 0.0 && *t <= curve.tau_max),
        None,
    )];
    Output {
        csvs: vec![("curve.csv", curve.to_csv())],
        checks,
        results,
        summary: lines,
    }
}

fn floquet(cfg: &ExperimentConfig) -> Output {
    let flow = cfg.flow.clone().unwrap();
    let dt = cfg.dt.unwrap();
    let mut lines = vec![format!("flow {}", flow.name())];
    if let Some(tr) = &cfg.truncations {
        let r = roughness_profile_with(&flow, tr, dt, |_, _| {});
        let (profile, report) = match r {
            Ok(r) => r,
            Err(e) => return failed("eigensolve_completed", &e, lines),
        };
        for row in &profile.rows {
            lines.push(format!(
                "n_trunc {:<4} min h1/4pi^2 {:.4}  median {:.4}  defect {:.3e}",
                row.n_trunc,
                row.min_h1 / FOUR_PI_SQ,
                row.median_h1 / FOUR_PI_SQ,
                row.defect
            ));
        }
        lines.push(format!("verdict {}", profile.verdict()));
        let results = serde_json::json!({
            "verdict": profile.verdict(),
            "rows": profile.rows,
        });
        let checks = vec![Check::flag(
            "eigenvalues_finite",
            report.entries.iter().all(|e| e.abs.is_finite() && e.h1_rayleigh.is_finite()),
            None,
        )];
        return Output {
            csvs: vec![("eigen.csv", report.to_csv()), ("roughness.csv", profile.to_csv())],
            checks,
            results,
            summary: lines,
        };
    }
    let n = cfg.n_trunc.unwrap();
    let report = build_period_matrix(&flow, n, dt).and_then(|v| eigen_report(&v));
    let report = match report {
        Ok(r) => r,
        Err(e) => return failed("eigensolve_completed", &e, lines),
    };
    lines.push(format!("dim {}  unitarity defect {:.3e}", report.dim, report.defect));
    lines.push(format!("min h1/4pi^2 {:.6}", report.min_h1() / FOUR_PI_SQ));
    let results = serde_json::json!({
        "n_trunc": n,
        "dim": report.dim,
        "defect": report.defect,
        "min_h1": report.min_h1(),
        "median_h1": report.median_h1(),
    });
    let checks = vec![Check::flag(
        "eigenvalues_finite",
        report.entries.iter().all(|e| e.abs.is_finite() && e.h1_rayleigh.is_finite()),
        None,
    )];
    Output {
        csvs: vec![("eigen.csv", report.to_csv())],
        checks,
        results,
        summary: lines,
    }
}

fn porous(cfg: &ExperimentConfig) -> Output {
    let flow = cfg.flow.clone().unwrap();
    let pc = porous_config(cfg).expect("validated");
    let (phi0, desc) = initial(cfg);
    let state = PorousState::new(phi0);
    let lines = vec![
        format!("flow {}", flow.name()),
        format!("initial {desc}"),
        format!("q {}  h {}", pc.q, pc.h),
    ];
    let (tr, fin) = match pm_evolve(&state, &flow, &pc) {
        Ok(r) => r,
        Err(e) => return failed("bounds_preserved", &e, lines),
    };
    let mut lines = lines;
    let (lo, hi) = fin.range();
    lines.push(format!("records {}", tr.times.len()));
    lines.push(format!("final var_l2_sq {:e}  range [{lo}, {hi}]", fin.var_l2_sq()));
    let v0 = tr.var_l2_sq[0];
    let mut checks = vec![
        Check::flag("bounds_preserved", true, None),
        Check::flag("maximum_principle", tr.max_principle_holds(1e-6), None),
        Check::bound("mean_conservation", tr.mean_drift, "<=", 1e-10),
        Check::flag("monotone_variance", tr.var_monotone(), None),
    ];
    if pc.diffusivity() > 0.0 && v0 > 0.0 {
        checks.push(Check::bound("dissipation_residual", pm_dissipation_residual(&tr, &pc), "<=", 1e-3));
        checks.push(Check::bound("dissipation_budget", pm_dissipation_budget(&tr), "<=", 1.0 + 1e-3));
    }
    let results = serde_json::json!({
        "final_time": tr.times.last(),
        "final_var_l2_sq": fin.var_l2_sq(),
        "final_min": lo,
        "final_max": hi,
        "mean": tr.mean_value,
    });
    Output {
        csvs: vec![("decay.csv", tr.to_csv())],
        checks,
        results,
        summary: lines,
    }
}

fn tracer(cfg: &ExperimentConfig) -> Output {
    let flow = cfg.flow.clone().unwrap();
    let x0 = cfg.start.unwrap();
    let t0 = cfg.t_start.unwrap_or(0.0);
    let t1 = cfg.t_end.unwrap();
    let path = trace(&flow, x0, t0, t1, cfg.dt.unwrap());
    let div = flow
        .pieces()
        .iter()
        .map(|&p| flow.divergence_max_on_piece(t0, p, 64))
        .fold(0.0, f64::max);
    let end = path.endpoint();
    let lines = vec![
        format!("flow {}", flow.name()),
        format!("start {x0:?} at t = {t0}"),
        format!("end {end:?} at t = {t1}"),
        format!("samples {}", path.samples.len()),
    ];
    let inside = path
        .samples
        .iter()
        .all(|(t, x)| t.is_finite() && (0.0..1.0).contains(&x[0]) && (0.0..1.0).contains(&x[1]));
    let wrapped = wrap_point(x0);
    let starts_right = path.samples.first().map(|s| s.1 == wrapped).unwrap_or(false);
    let checks = vec![
        Check::flag("positions_on_torus", inside, None),
        Check::flag("starts_at_start", starts_right, None),
        Check::bound("divergence_max", div, "<=", 1e-10),
    ];
    let results = serde_json::json!({ "endpoint": end, "samples": path.samples.len() });
    Output {
        csvs: vec![("tracer.csv", path.to_csv())],
        checks,
        results,
        summary: lines,
    }
}

/// Fault injections for the verify suite.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Overrides {
    pub no_dealias: bool,
    pub double_dt: bool,
}

pub fn overrides() -> Overrides {
    let v = std::env::var(VERIFY_OVERRIDE_ENV).unwrap_or_default();
    let mut o = Overrides::default();
    for t in v.split(',').map(str::trim) {
        match t {
            "no-dealias" => o.no_dealias = true,
            "double-dt" => o.double_dt = true,
            _ => {}
        }
    }
    o
}

fn verify(o: &Overrides) -> Output {
    let checks = verify_suite(o);
    let lines = vec![
        format!("checks {}", checks.len()),
        format!("overrides no-dealias={} double-dt={}", o.no_dealias, o.double_dt),
    ];
    let results = serde_json::json!({
        "passed": checks.iter().filter(|c| c.pass).count(),
        "failed": checks.iter().filter(|c| !c.pass).count(),
    });
    Output {
        csvs: Vec::new(),
        checks,
        results,
        summary: lines,
    }
}

fn identity_defect(m: &faer::Mat<C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let want = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((m[(i, j)] - want).norm());
        }
    }
    worst
}

/// The bundled invariant suite at desk-scale settings.
pub fn verify_suite(o: &Overrides) -> Vec<Check> {
    let dealias = !o.no_dealias;
    let mut out = Vec::new();
    let sqrt2 = 2f64.sqrt();
    let cellular = FlowSpec::cellular(1.0);
    let alternating = FlowSpec::alternating_shear_default();
    let e10 = WaveIndex::new(1, 0);

    // Heat oracle.
    let phi = SpectralField::sin_mode(8, e10, sqrt2);
    let cfg = SolverConfig::new(8, 1e-4, Formulation::Amplitude(0.0), 0.1).with_dealias(dealias);
    match evolve(&phi, &FlowSpec::zero(), &cfg) {
        Ok((_, f)) => {
            let want = (-FOUR_PI_SQ * 0.1).exp();
            out.push(Check::bound("heat_exactness", (f.l2_sq().sqrt() / want - 1.0).abs(), "<=", 1e-8));
        }
        Err(e) => out.push(Check::error("heat_exactness", &e)),
    }

    // Energy identity and its companions on a cellular run.
    let phi0 = SpectralField::random(16, DEFAULT_SEED, 2.0);
    let cfg = SolverConfig::new(16, 1e-3, Formulation::Diffusivity(1e-2), 2.0).with_dealias(dealias);
    match evolve(&phi0, &cellular, &cfg) {
        Ok((traj, _)) => {
            for mut c in trajectory_checks(&traj, &cfg) {
                c.name = format!("cellular_{}", c.name);
                out.push(c);
            }
        }
        Err(e) => out.push(Check::error("cellular_dissipation_residual", &e)),
    }

    // Budget saturation on a run continued to ||phi||^2 < 1e-8.
    let cfg = SolverConfig::new(16, 1e-3, Formulation::Diffusivity(0.1), 10.0).with_dealias(dealias);
    let budget = Stepper::new(&cellular, &cfg).and_then(|mut st| st.run(&phi0, |_, f| f.l2_sq() < 1e-8));
    match budget {
        Ok((traj, f)) => {
            let b = dissipation_budget(&traj, traj.diffusivity);
            out.push(Check::bound("budget_upper", b, "<=", 1.0 + 1e-3));
            let mut c = Check::bound("budget_saturates", b, ">=", 0.99);
            if f.l2_sq() >= 1e-8 {
                c.pass = false;
                c.detail = Some(format!("run ended at l2_sq {:e}", f.l2_sq()));
            }
            out.push(c);
        }
        Err(e) => out.push(Check::error("budget_upper", &e)),
    }

    // Distance to the free evolution.
    for (name, flow) in [("sdist_cellular", &cellular), ("sdist_alternating", &alternating)] {
        match sdist_check(flow, 1e-2, &phi0, 1.0, 1e-3) {
            Ok(r) => out.push(Check::bound(name, r.worst_ratio, "<=", 1.05)),
            Err(e) => out.push(Check::error(name, &e)),
        }
    }

    // Non-enhancement witness on a shear eigenfunction.
    let shear = FlowSpec::uniform([0.0, 2.0]);
    let psi = SpectralField::sin_mode(8, e10, sqrt2);
    match non_enhancement_witness(&shear, &psi, &[1e-1, 1e-2]) {
        Ok(r) => {
            let worst = r.final_norms.iter().map(|v| (v - (-1f64).exp()).abs()).fold(0.0, f64::max);
            out.push(Check::flag("witness_pass", r.pass, None));
            out.push(Check::bound("witness_closed_form", worst, "<=", 1e-4));
        }
        Err(e) => out.push(Check::error("witness_pass", &e)),
    }

    // Enhancement trend and determinism on a small sweep.
    let sweep_csv = || -> crate::Result<(String, TrendVerdict)> {
        let tmpl = SolverConfig::new(16, 1e-3, Formulation::Amplitude(0.0), 1.0).with_dealias(dealias);
        let q = RelaxationQuery::new(alternating.clone(), phi0.clone(), 0.1, 0.1, tmpl)?;
        let curve = amplitude_sweep(&q, &[8.0, 32.0, 128.0, 512.0])?;
        Ok((curve.to_csv(), classify(&curve)?))
    };
    match (sweep_csv(), sweep_csv()) {
        (Ok((a, v)), Ok((b, _))) => {
            out.push(Check::flag("sweep_enhancing", v == TrendVerdict::Enhancing, Some(v.to_string())));
            out.push(Check::flag("sweep_deterministic", a == b, None));
        }
        (Err(e), _) | (_, Err(e)) => out.push(Check::error("sweep_enhancing", &e)),
    }

    // Period operator sanity.
    let floq = |flow: &FlowSpec, n: usize, dt: f64| build_period_matrix(flow, n, dt).map(|v| v.to_complex_dense());
    match floq(&FlowSpec::zero(), 8, 0.1) {
        Ok(m) => out.push(Check::bound("floquet_zero_identity", identity_defect(&m), "<=", 1e-12)),
        Err(e) => out.push(Check::error("floquet_zero_identity", &e)),
    }
    match floq(&FlowSpec::uniform([1.0, 0.0]).with_period(1.0), 8, 1e-2) {
        Ok(m) => out.push(Check::bound("floquet_translation_identity", identity_defect(&m), "<=", 1e-6)),
        Err(e) => out.push(Check::error("floquet_translation_identity", &e)),
    }
    let sh = FlowSpec::shear(Profile::constant(2.0), Axis::X2).with_period(0.25);
    match build_period_matrix(&sh, 8, 1e-2) {
        Ok(v) => {
            let c = v.to_complex_dense();
            let basis = v.complex_basis();
            let mut worst: f64 = 0.0;
            for (i, ki) in basis.iter().enumerate() {
                for j in 0..basis.len() {
                    let want = if i == j {
                        C64::from_polar(1.0, -std::f64::consts::PI * ki.k2 as f64)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    worst = worst.max((c[(i, j)] - want).norm());
                }
            }
            out.push(Check::bound("floquet_shear_phase", worst, "<=", 1e-8));
            out.push(Check::bound("floquet_shear_unitarity", unitarity_defect(&v), "<=", 1e-8));
        }
        Err(e) => out.push(Check::error("floquet_shear_phase", &e)),
    }

    // Free transport: translation oracle, norm on a resolved shear, and
    // composition across a switch of the alternating shear.
    let s2 = SpectralField::sin_mode(16, WaveIndex::new(0, 1), 1.0);
    let g = free_evolve(&FlowSpec::uniform([0.0, 2.0]), &s2, 0.0, 0.25, 1e-3);
    out.push(Check::bound(
        "transport_translation",
        g.axpy(1.0, &s2).map(|d| d.l2_sq().sqrt()).unwrap_or(f64::INFINITY),
        "<=",
        1e-8,
    ));
    let f = SpectralField::random(32, DEFAULT_SEED, 2.0);
    let sine = FlowSpec::shear(Profile::sine(1.0), Axis::X2);
    let g = free_evolve(&sine, &f, 0.0, 1.0, 1e-3);
    out.push(Check::bound("transport_norm_shear", (g.l2_sq() / f.l2_sq() - 1.0).abs(), "<=", 1e-3));
    let whole = free_evolve(&alternating, &f, 0.2, 0.7, 1e-3);
    let parts = free_evolve(&alternating, &free_evolve(&alternating, &f, 0.2, 0.45, 1e-3), 0.45, 0.7, 1e-3);
    out.push(Check::bound(
        "transport_composition",
        whole.sub(&parts).map(|d| d.l2_sq().sqrt()).unwrap_or(f64::INFINITY),
        "<=",
        1e-6,
    ));

    // Porous medium suite, q = 2.
    let mut pm0 = SpectralField::random(16, DEFAULT_SEED, 2.0).scaled(0.1);
    pm0.set_mean(1.0);
    let state = PorousState::new(pm0);
    let pc = PorousConfig::new(2.0, 0.5, Formulation::Amplitude(16.0), 1e-3, 16, 0.05);
    match pm_evolve(&state, &cellular, &pc) {
        Ok((tr, _)) => {
            out.push(Check::flag("porous_maximum_principle", tr.max_principle_holds(1e-6), None));
            out.push(Check::bound("porous_mean_conservation", tr.mean_drift, "<=", 1e-10));
            out.push(Check::flag("porous_monotone_variance", tr.var_monotone(), None));
            out.push(Check::bound("porous_dissipation_residual", pm_dissipation_residual(&tr, &pc), "<=", 1e-3));
        }
        Err(e) => out.push(Check::error("porous_maximum_principle", &e)),
    }
    let pwc = PorousConfig::new(2.0, 0.5, Formulation::Diffusivity(0.1), 1e-3, 8, 1.0);
    match pm_witness(&shear, &psi, &pwc, &[1e-1]) {
        Ok(r) => out.push(Check::bound(
            "porous_witness",
            r.final_norms.iter().cloned().fold(f64::INFINITY, f64::min),
            ">=",
            0.475,
        )),
        Err(e) => out.push(Check::error("porous_witness", &e)),
    }

    // Fixed substeps at the CFL edge; the double-dt override crosses it.
    let dt = if o.double_dt { 2e-3 } else { 1e-3 };
    let probe = SolverConfig::new(16, 1e-3, Formulation::Amplitude(64.0), 0.01).with_dealias(dealias);
    let cfl = Stepper::new(&cellular, &probe).and_then(|st| {
        let m = (64.0 * 1e-3 / st.substep_limit()).ceil() as usize;
        let cfg = SolverConfig::new(16, dt, Formulation::Amplitude(64.0), 0.02)
            .with_dealias(dealias)
            .with_substepping(Substepping::Fixed(m));
        evolve(&phi0, &cellular, &cfg)
    });
    match cfl {
        Ok(_) => out.push(Check::flag("cfl_fixed_substeps", true, None)),
        Err(e) => out.push(Check::error("cfl_fixed_substeps", &e)),
    }
    out
}
