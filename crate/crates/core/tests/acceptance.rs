//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use relaxlab::diagnostics::{dissipation_budget, non_enhancement_witness, sdist_check, TrendVerdict};
use relaxlab::floquet::{build_period_matrix, roughness_profile_with};
use relaxlab::flow::{Axis, Profile};
use relaxlab::harness::{run_config, ExperimentConfig, InitialField, Kind};
use relaxlab::porous::{pm_dissipation_residual, pm_evolve, pm_witness, PorousConfig, PorousState};
use relaxlab::solver::{dissipation_residual, evolve, Stepper};
use relaxlab::spectral::FOUR_PI_SQ;
use relaxlab::{FlowSpec, Formulation, SolverConfig, SpectralField, TrajectoryRecord, WaveIndex};
use num_complex::Complex64 as C64;
use std::time::Instant;

/// Lines are echoed to stderr as they finish and printed in order at the end.
struct Report {
    failures: usize,
    lines: Vec<(u32, String)>,
}

impl Report {
    fn line(&mut self, id: u32, pass: bool, secs: f64, text: String) {
        if !pass {
            self.failures += 1;
        }
        let l = format!("criterion {id:>2}: {}  [{secs:.1}s] {text}", if pass { "PASS" } else { "FAIL" });
        eprintln!("{l}");
        self.lines.push((id, l));
    }
}

/// Trajectories feeding the suite-wide mean and monotonicity criterion.
#[derive(Default)]
struct Ledger {
    worst_drift: f64,
    all_monotone: bool,
    runs: usize,
    worst_budget: f64,
}

impl Ledger {
    fn add(&mut self, t: &TrajectoryRecord) {
        if self.runs == 0 {
            self.all_monotone = true;
        }
        self.runs += 1;
        self.worst_drift = self.worst_drift.max(t.mean_drift);
        self.all_monotone &= t.is_monotone();
        if t.diffusivity > 0.0 {
            self.worst_budget = self.worst_budget.max(dissipation_budget(t, t.diffusivity));
        }
    }
}

fn unit_sine() -> SpectralField {
    SpectralField::sin_mode(8, WaveIndex::new(1, 0), 2f64.sqrt())
}

fn streamline_shear() -> FlowSpec {
    FlowSpec::shear(Profile::constant(2.0), Axis::X2)
}

fn max_dev(m: &faer::Mat<C64>, want: impl Fn(usize, usize) -> C64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - want(i, j)).norm());
        }
    }
    worst
}

fn identity(i: usize, j: usize) -> C64 {
    C64::new((i == j) as u8 as f64, 0.0)
}

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig {
        kind: Some(Kind::Sweep),
        flow: Some(FlowSpec::alternating_shear_default()),
        n_trunc: Some(32),
        dt: Some(1e-3),
        amplitudes: Some(vec![8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0]),
        delta: Some(0.1),
        tau_max: Some(0.1),
        initial: Some(InitialField::Random {
            seed: Some(42),
            band: 2.0,
            norm: 1.0,
            mean: 0.0,
        }),
        ..Default::default()
    }
}

fn main() {
    let mut rep = Report {
        failures: 0,
        lines: Vec::new(),
    };
    let mut ledger = Ledger::default();

    // 1. Heat exactness.
    let t0 = Instant::now();
    let cfg = SolverConfig::new(8, 1e-4, Formulation::Amplitude(0.0), 0.1);
    let (traj, fin) = evolve(&unit_sine(), &FlowSpec::zero(), &cfg).expect("heat run");
    ledger.add(&traj);
    let rel = (fin.l2_sq().sqrt() / (-FOUR_PI_SQ * 0.1).exp() - 1.0).abs();
    let s = t0.elapsed().as_secs_f64();
    rep.line(1, rel <= 1e-8 && s < 1.0, s, format!("relative error {rel:.2e} (<= 1e-8), runtime < 1 s"));

    // 2. Energy identity, cellular A = 64.
    let t0 = Instant::now();
    let phi32 = SpectralField::random(32, 42, 2.0);
    let cfg = SolverConfig::new(32, 1e-4, Formulation::Amplitude(64.0), 0.5);
    let (traj, _) = evolve(&phi32, &FlowSpec::cellular(1.0), &cfg).expect("cellular run");
    ledger.add(&traj);
    let res = dissipation_residual(&traj, &cfg);
    let s = t0.elapsed().as_secs_f64();
    rep.line(2, res <= 1e-3 && s < 60.0, s, format!("dissipation residual {res:.2e} (<= 1e-3), runtime < 60 s"));

    // 5 (runs). Budget saturation: heat and alternating shear run until l2_sq < 1e-8.
    let t5 = Instant::now();
    let mut saturated = Vec::new();
    let heat = SolverConfig::new(8, 1e-3, Formulation::Amplitude(0.0), 1.0);
    let alt = SolverConfig::new(32, 1e-3, Formulation::Amplitude(256.0), 1.0);
    for (flow, cfg, phi) in [
        (FlowSpec::zero(), heat, unit_sine()),
        (FlowSpec::alternating_shear_default(), alt, phi32.clone()),
    ] {
        let mut st = Stepper::new(&flow, &cfg).expect("stepper");
        let (traj, fin) = st.run(&phi, |_, f| f.l2_sq() < 1e-8).expect("budget run");
        ledger.add(&traj);
        saturated.push((fin.l2_sq(), dissipation_budget(&traj, traj.diffusivity)));
    }
    let s5_runs = t5.elapsed().as_secs_f64();

    // 4. Distance to the free evolution.
    let t0 = Instant::now();
    let mut ok4 = true;
    let mut text4 = Vec::new();
    for (name, flow) in [("cellular", FlowSpec::cellular(1.0)), ("alternating", FlowSpec::alternating_shear_default())] {
        let a = sdist_check(&flow, 1e-2, &phi32, 1.0, 1e-3).expect("sdist");
        let b = sdist_check(&flow, 1e-3, &phi32, 1.0, 1e-3).expect("sdist");
        let ratio = a.lhs.last().unwrap() / b.lhs.last().unwrap();
        ok4 &= a.pass && b.pass && (5.0..=20.0).contains(&ratio);
        text4.push(format!(
            "{name}: worst lhs/rhs {:.3} / {:.3} (<= 1.05), lhs ratio {ratio:.2} (in [5, 20])",
            a.worst_ratio, b.worst_ratio
        ));
    }
    let s = t0.elapsed().as_secs_f64();
    rep.line(4, ok4 && s < 120.0, s, text4.join("; "));

    // 5. Dissipation budget.
    let sat_ok = saturated.iter().all(|(l2, b)| *l2 < 1e-8 && *b >= 0.99 && *b <= 1.0 + 1e-3);
    let ok5 = ledger.worst_budget <= 1.0 + 1e-3 && sat_ok;
    let sat_txt: Vec<String> = saturated.iter().map(|(l2, b)| format!("{b:.6} at l2_sq {l2:.1e}")).collect();
    rep.line(
        5,
        ok5,
        s5_runs,
        format!(
            "max ratio {:.6} over {} runs (<= 1.001); saturated runs {} (>= 0.99)",
            ledger.worst_budget,
            ledger.runs,
            sat_txt.join(", ")
        ),
    );

    // 6. Non-enhancement witness.
    let t0 = Instant::now();
    let psi = SpectralField::sin_mode(16, WaveIndex::new(1, 0), 2f64.sqrt());
    let w = non_enhancement_witness(&streamline_shear(), &psi, &[1e-1, 1e-2, 1e-3]).expect("witness");
    let e1 = (-1f64).exp();
    let dev = w.final_norms.iter().map(|v| (v - e1).abs()).fold(0.0, f64::max);
    let ok6 = w.final_norms.iter().all(|v| *v >= 0.25) && dev <= 1e-4 && (w.tau - 1.0 / FOUR_PI_SQ).abs() < 1e-12;
    let s = t0.elapsed().as_secs_f64();
    rep.line(
        6,
        ok6 && s < 60.0,
        s,
        format!("final norms {:?} (>= 0.25), |norm - e^-1| {dev:.1e} (<= 1e-4)", w.final_norms),
    );

    // 7. Enhancement trend, through the batch harness.
    let t0 = Instant::now();
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg7 = sweep_config();
    let m = run_config(Kind::Sweep, &cfg7, "acceptance", &dir.path().join("a")).expect("sweep run");
    let taus: Vec<f64> = serde_json::from_value(m.results["taus"].clone()).unwrap();
    let verdict = m.results["verdict"].as_str().unwrap_or("").to_string();
    let ok7 = verdict == TrendVerdict::Enhancing.to_string() && taus[6] <= 0.25 * taus[0];
    let s = t0.elapsed().as_secs_f64();
    rep.line(
        7,
        ok7 && s < 600.0,
        s,
        format!("verdict {verdict}, tau(512)/tau(8) = {:.3} (<= 0.25)", taus[6] / taus[0]),
    );

    // 3. Mean conservation and monotone decay, over every trajectory above.
    rep.line(
        3,
        ledger.worst_drift <= 1e-12 && ledger.all_monotone,
        0.0,
        format!(
            "{} runs: max mean drift {:.1e} (<= 1e-12), monotone {}",
            ledger.runs, ledger.worst_drift, ledger.all_monotone
        ),
    );

    // 8. Floquet sanity at n_trunc = 16.
    let t0 = Instant::now();
    let v0 = build_period_matrix(&FlowSpec::zero(), 16, 0.1).unwrap().to_complex_dense();
    let d0 = max_dev(&v0, identity);
    let v1 = build_period_matrix(&FlowSpec::uniform([1.0, 0.0]).with_period(1.0), 16, 1e-3).unwrap().to_complex_dense();
    let d1 = max_dev(&v1, identity);
    let sh = build_period_matrix(&streamline_shear().with_period(0.25), 16, 1e-3).unwrap();
    let basis = sh.complex_basis();
    let d2 = max_dev(&sh.to_complex_dense(), |i, j| {
        if i == j {
            C64::from_polar(1.0, -2.0 * std::f64::consts::PI * basis[i].k2 as f64 * 0.5)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let s = t0.elapsed().as_secs_f64();
    rep.line(
        8,
        d0 <= 1e-12 && d1 <= 1e-6 && d2 <= 1e-8,
        s,
        format!("|V0 - I| {d0:.1e} (<= 1e-12), |V(1,0) - I| {d1:.1e} (<= 1e-6), shear phase {d2:.1e} (<= 1e-8)"),
    );

    // 9. Roughness dichotomy; N = 64 capped at 48.
    let t0 = Instant::now();
    let truncs = [8, 16, 32, 48];
    let mut text9 = Vec::new();
    let mut ok9 = true;
    for (name, flow, smooth) in [
        ("sine shear", FlowSpec::shear(Profile::sine(1.0), Axis::X2), true),
        ("cellular", FlowSpec::cellular(1.0), true),
        ("alternating", FlowSpec::alternating_shear_default(), false),
    ] {
        let f0 = Instant::now();
        let (p, _) = roughness_profile_with(&flow, &truncs, 1e-3, |_, _| {}).expect("roughness");
        let v: Vec<f64> = p.rows.iter().map(|r| r.min_h1 / FOUR_PI_SQ).collect();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mins: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
        if smooth {
            let spread = hi / lo - 1.0;
            ok9 &= spread < 0.10;
            text9.push(format!(
                "{name}: min h1/4pi^2 [{}], spread {:.1}% (< 10%) [{:.0}s]",
                mins.join(", "),
                100.0 * spread,
                f0.elapsed().as_secs_f64()
            ));
        } else {
            let g = p.growth(16, 48).unwrap();
            ok9 &= g >= 2.0;
            text9.push(format!(
                "{name}: min h1/4pi^2 [{}], growth 16->48 {g:.2} (>= 2) [{:.0}s]",
                mins.join(", "),
                f0.elapsed().as_secs_f64()
            ));
        }
    }
    let s = t0.elapsed().as_secs_f64();
    rep.line(9, ok9 && s < 900.0, s, text9.join("; "));

    // 10. Porous medium, q = 2.
    let t0 = Instant::now();
    let mut f = SpectralField::random(32, 42, 2.0).scaled(0.15);
    f.set_mean(1.0);
    let state = PorousState::new(f.clone());
    let alt = FlowSpec::alternating_shear_default();
    let pc = PorousConfig::new(2.0, 0.5, Formulation::Amplitude(256.0), 1e-3, 32, 0.02);
    let (bounds_ok, drift, pres, mp) = match pm_evolve(&state, &alt, &pc) {
        Ok((tr, _)) => (true, tr.mean_drift, pm_dissipation_residual(&tr, &pc), tr.max_principle_holds(1e-6)),
        Err(_) => (false, f64::NAN, f64::NAN, false),
    };
    let q1 = PorousConfig::new(1.0 + 1e-6, 0.5, Formulation::Amplitude(64.0), 1e-3, 16, 0.02);
    let mut f16 = SpectralField::random(16, 42, 2.0).scaled(0.15);
    f16.set_mean(1.0);
    let (_, pm_fin) = pm_evolve(&PorousState::new(f16.clone()), &alt, &q1).expect("q -> 1 run");
    let lin = SolverConfig::new(16, 1e-3, Formulation::Amplitude(64.0), 0.02);
    let (_, lin_fin) = evolve(&f16.mean_removed(), &alt, &lin).expect("linear run");
    let pm_var = pm_fin.field.mean_removed();
    let q_rel = pm_var.sub(&lin_fin).unwrap().l2_sq().sqrt() / lin_fin.l2_sq().sqrt();
    let wc = PorousConfig::new(2.0, 0.5, Formulation::Diffusivity(0.1), 1e-3, 16, 1.0);
    let pw = pm_witness(&streamline_shear(), &psi, &wc, &[1e-1, 1e-2]).expect("porous witness");
    let ok10 = bounds_ok && mp && drift <= 1e-10 && pres <= 1e-3 && q_rel <= 1e-3 && pw.pass;
    let s = t0.elapsed().as_secs_f64();
    rep.line(
        10,
        ok10 && s < 600.0,
        s,
        format!(
            "no BoundsViolation {bounds_ok}, max principle {mp}, mean drift {drift:.1e} (<= 1e-10), residual {pres:.2e} (<= 1e-3), q->1 rel {q_rel:.1e} (<= 1e-3), witness norms {:?} (>= 0.475)",
            pw.final_norms
        ),
    );

    // 11. Determinism of criterion 7's artifact.
    let t0 = Instant::now();
    run_config(Kind::Sweep, &cfg7, "acceptance", &dir.path().join("b")).expect("sweep rerun");
    let a = std::fs::read(dir.path().join("a/curve.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/curve.csv")).unwrap();
    let s = t0.elapsed().as_secs_f64();
    rep.line(11, a == b && !a.is_empty(), s, format!("curve.csv identical across runs ({} bytes)", a.len()));

    rep.lines.sort_by_key(|l| l.0);
    for (_, l) in &rep.lines {
        println!("{l}");
    }
    if rep.failures > 0 {
        println!("{} criteria failed", rep.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
