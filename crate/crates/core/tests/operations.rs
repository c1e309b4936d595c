//! Operation-level examples with independent oracles.

use relaxlab::diagnostics::{
    amplitude_sweep, dissipation_budget, non_enhancement_witness, relaxation_time, sdist_check, RelaxationQuery,
};
use relaxlab::floquet::{averaged_h1, build_period_matrix, eigen_report, rage_average, roughness_profile, unitarity_defect};
use relaxlab::flow::{cellular_stream_mode, drifted_frame, Axis, Profile};
use relaxlab::porous::{
    pm_dissipation_residual, pm_evolve, pm_relaxation_time, pm_witness, PorousConfig, PorousState,
};
use relaxlab::solver::{dissipation_residual, evolve, step, Stepper};
use relaxlab::spectral::FOUR_PI_SQ;
use relaxlab::transport::{evaluate_at, flow_map, free_evolve, period_reduce};
use relaxlab::{FlowSpec, Formulation, SolverConfig, SpectralField, WaveIndex};

fn sine_x1(n: usize) -> SpectralField {
    SpectralField::sin_mode(n, WaveIndex::new(1, 0), 2f64.sqrt())
}

fn streamline_shear() -> FlowSpec {
    FlowSpec::shear(Profile::constant(2.0), Axis::X2)
}

fn perturbed_drift() -> FlowSpec {
    serde_json::from_str(
        r#"{"kind": "stream_series", "params": {"mean": [1.0, 1.0], "terms": [
            {"k": [1, 1], "amp": [0.05, -0.05]},
            {"k": [1, -1], "amp": [0.05, 0.05]}]}}"#,
    )
    .unwrap()
}

fn points(count: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut r = relaxlab::rng::SplitMix64::new(seed);
    (0..count).map(|_| [r.next_f64(), r.next_f64()]).collect()
}

#[test]
fn inner_matches_grid_quadrature() {
    let f = SpectralField::random(6, 1, 6.0);
    let mut g = SpectralField::random(6, 2, 6.0);
    g.set_mean(0.3);
    let r = 13;
    let (gf, gg) = (f.to_grid(r).unwrap(), g.to_grid(r).unwrap());
    let q: f64 = gf.values().iter().zip(gg.values()).map(|(a, b)| a * b).sum::<f64>() / (r * r) as f64;
    let z = f.inner(&g).unwrap();
    assert!((z.re - q).abs() < 1e-10 && z.im.abs() < 1e-12);
}

#[test]
fn drifted_frame_of_perturbed_drift() {
    let v = perturbed_drift();
    let u = drifted_frame(&v, 64).unwrap();
    let p = u.period().unwrap();
    assert!((p - 1.0).abs() < 1e-12);
    let vbar = v.spatial_mean(0.0, 64);
    for t in [0.0, 0.5 * p, 0.3] {
        let m = u.spatial_mean(t, 64);
        assert!(m[0].abs() < 1e-12 && (m[1] - vbar[1]).abs() < 1e-12);
        assert!(u.stream_function(t, 64).is_ok(), "t = {t}");
        for x in points(20, 9) {
            let a = u.velocity_at(x, t);
            let w = v.velocity_at([x[0] + vbar[0] * t, x[1]], t);
            assert!((a[0] - (w[0] - vbar[0])).abs() < 1e-12 && (a[1] - w[1]).abs() < 1e-12);
        }
    }
}

#[test]
fn alternating_shear_divergence_at_switch() {
    let u = FlowSpec::alternating_shear_default();
    for t in [0.5 - 1e-9, 0.5, 0.5 + 1e-9, 1.0 - 1e-9] {
        assert!(u.divergence_max(t, 64) <= 1e-8);
    }
}

#[test]
fn free_evolve_respects_period_reduction() {
    let u = FlowSpec::alternating_shear_default();
    let f = SpectralField::random(8, 5, 3.0);
    let (s, t) = (2.3, 2.6);
    let (s2, t2) = period_reduce(s, t, 1.0);
    let a = free_evolve(&u, &f, s, t, 1e-2);
    let b = free_evolve(&u, &f, s2, t2, 1e-2);
    assert!(a.sub(&b).unwrap().l2_sq().sqrt() < 1e-10);
}

#[test]
fn pointwise_transport_and_envelope() {
    let f = SpectralField::random(32, 42, 2.0);
    for (flow, s, t) in [
        (FlowSpec::shear(Profile::sine(1.0), Axis::X2), 0.0, 0.5),
        (FlowSpec::alternating_shear_default(), 0.2, 0.7),
    ] {
        let g = free_evolve(&flow, &f, s, t, 1e-3);
        let xs = points(50, 11);
        let moved: Vec<[f64; 2]> = xs.iter().map(|&x| flow_map(&flow, x, s, t, 1e-3)).collect();
        let before = evaluate_at(&f, &xs);
        let after = evaluate_at(&g, &moved);
        let worst = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "pointwise {worst}");
        let b = flow.flow_bounds(64).envelope(t - s);
        assert!(g.sobolev_norm_sq(1).sqrt() <= b * f.sobolev_norm_sq(1).sqrt() * 1.01);
        assert!((g.l2_sq() / f.l2_sq() - 1.0).abs() < 1e-3);
    }
}

#[test]
fn one_cellular_step_decays_and_keeps_mean() {
    let mut f = SpectralField::random(16, 8, 3.0);
    f.set_mean(0.7);
    let cfg = SolverConfig::new(16, 1e-3, Formulation::Amplitude(32.0), 1.0);
    let g = step(&f, &FlowSpec::cellular(1.0), &cfg, 0.0).unwrap();
    assert!(g.l2_sq() < f.l2_sq());
    assert!((g.mean() - 0.7).abs() < 1e-15);
}

#[test]
fn stronger_alternating_shear_relaxes_further() {
    let f = SpectralField::random(16, 42, 2.0);
    let run = |a: f64| {
        let cfg = SolverConfig::new(16, 1e-3, Formulation::Amplitude(a), 0.03);
        evolve(&f, &FlowSpec::alternating_shear_default(), &cfg).unwrap().1.l2_sq()
    };
    assert!(run(256.0) < run(16.0));
}

#[test]
fn heat_residual_is_tiny() {
    let cfg = SolverConfig::new(8, 1e-4, Formulation::Amplitude(0.0), 0.05);
    let (traj, _) = evolve(&sine_x1(8), &FlowSpec::zero(), &cfg).unwrap();
    assert!(dissipation_residual(&traj, &cfg) <= 1e-6);
}

#[test]
fn aliasing_breaks_the_energy_identity() {
    let phi = SpectralField::random(16, 42, 2.0);
    let residual = |dealias: bool| {
        let cfg = SolverConfig::new(16, 1e-3, Formulation::Diffusivity(1e-2), 2.0).with_dealias(dealias);
        let (traj, _) = evolve(&phi, &FlowSpec::cellular(1.0), &cfg).unwrap();
        dissipation_residual(&traj, &cfg)
    };
    let (on, off) = (residual(true), residual(false));
    assert!(on <= 1e-3 && off >= 10.0 * on, "{on} vs {off}");
}

#[test]
fn shear_period_matrix() {
    let v = build_period_matrix(&streamline_shear().with_period(0.25), 16, 1e-3).unwrap();
    assert!(unitarity_defect(&v) <= 1e-6);
    let r = eigen_report(&v).unwrap();
    assert!((r.min_h1() - FOUR_PI_SQ).abs() < 1e-8);
    let id = eigen_report(&build_period_matrix(&FlowSpec::zero(), 6, 0.1).unwrap()).unwrap();
    assert!(id.min_h1() <= FOUR_PI_SQ * (1.0 + 1e-6));
}

#[test]
fn smooth_flows_have_flat_roughness() {
    for flow in [streamline_shear(), FlowSpec::zero()] {
        let p = roughness_profile(&flow, &[8, 16, 32], 1e-2).unwrap();
        for r in &p.rows {
            assert!((r.min_h1 - FOUR_PI_SQ).abs() < 1e-6 * FOUR_PI_SQ, "{r:?}");
        }
    }
}

#[test]
fn alternating_roughness_grows() {
    let p = roughness_profile(&FlowSpec::alternating_shear_default(), &[16, 32], 1e-3).unwrap();
    assert!(p.rows[1].min_h1 > p.rows[0].min_h1);
}

#[test]
fn rage_averages() {
    let low = sine_x1(8);
    assert!((rage_average(&FlowSpec::zero(), &low, 4, 1.0, 0.1) - 1.0).abs() < 1e-12);
    assert!((averaged_h1(&FlowSpec::zero(), &low, 4, 1.0, 0.1) - FOUR_PI_SQ).abs() < 1e-9);
    for t in [1.0, 3.0] {
        assert!((rage_average(&streamline_shear(), &low, 4, t, 0.05) - 1.0).abs() < 1e-9);
        assert!((averaged_h1(&streamline_shear(), &low, 4, t, 0.05) - FOUR_PI_SQ).abs() < 1e-6);
    }
    let f = SpectralField::random(8, 42, 2.0);
    let alt = FlowSpec::alternating_shear_default();
    let r: Vec<f64> = [10.0, 25.0, 50.0].iter().map(|&t| rage_average(&alt, &f, 4, t, 0.05)).collect();
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
}

#[test]
fn filtration_growth_of_averaged_h1() {
    let alt = FlowSpec::alternating_shear_default();
    let f16 = SpectralField::random(16, 42, 2.0);
    let f32 = f16.retruncate(32);
    let a = averaged_h1(&alt, &f16, 10_000, 50.0, 0.1);
    let b = averaged_h1(&alt, &f32, 10_000, 50.0, 0.1);
    assert!(b > a, "{a} vs {b}");
}

#[test]
fn streamline_data_gives_flat_curves() {
    let tmpl = SolverConfig::new(8, 1e-3, Formulation::Amplitude(0.0), 1.0);
    for flow in [FlowSpec::zero(), streamline_shear()] {
        let q = RelaxationQuery::new(flow, sine_x1(8), 0.2, 1.0, tmpl.clone()).unwrap();
        let c = amplitude_sweep(&q, &[0.0, 10.0, 100.0]).unwrap().values();
        assert!(c.iter().all(|t| (t - c[0]).abs() < 1e-4), "{c:?}");
    }
    let f = SpectralField::random(16, 42, 2.0);
    let q = RelaxationQuery::new(FlowSpec::alternating_shear_default(), f, 0.1, 0.1, tmpl.clone()).unwrap();
    let q = RelaxationQuery {
        template: SolverConfig::new(16, 1e-3, Formulation::Amplitude(0.0), 1.0),
        ..q
    };
    assert!(relaxation_time(&q, 512.0).unwrap().or_max(0.1) < relaxation_time(&q, 8.0).unwrap().or_max(0.1));
}

#[test]
fn sdist_small_epsilon_cellular() {
    let r = sdist_check(&FlowSpec::cellular(1.0), 1e-3, &SpectralField::random(16, 42, 2.0), 1.0, 1e-3).unwrap();
    assert!(r.pass);
}

#[test]
fn heat_saturates_the_budget() {
    let cfg = SolverConfig::new(8, 1e-3, Formulation::Amplitude(0.0), 1.0);
    let zero = FlowSpec::zero();
    let mut st = Stepper::new(&zero, &cfg).unwrap();
    let (traj, fin) = st.run(&sine_x1(8), |_, f| f.l2_sq() < 1e-8).unwrap();
    assert!(fin.l2_sq() < 1e-8);
    assert!((dissipation_budget(&traj, 1.0) - 1.0).abs() < 1e-3);
}

#[test]
fn cellular_stream_function_witness() {
    let psi = cellular_stream_mode(16);
    let flow = FlowSpec::cellular(1.0);
    let r = non_enhancement_witness(&flow, &psi, &[1e-1, 1e-2, 1e-3]).unwrap();
    assert!(r.final_norms.iter().all(|v| *v >= 0.25), "{:?}", r.final_norms);
    let cfg = PorousConfig::new(2.0, 0.5, Formulation::Diffusivity(1e-2), 1e-3, 16, 1.0);
    assert!(pm_witness(&flow, &psi, &cfg, &[1e-2]).unwrap().pass);
}

fn porous_heat_data(n: usize) -> PorousState {
    let mut f = SpectralField::sin_mode(n, WaveIndex::new(1, 0), 0.25);
    f.set_mean(1.0);
    PorousState::new(f)
}

#[test]
fn porous_heat_bracket() {
    let s = porous_heat_data(16);
    let cfg = PorousConfig::new(2.0, 0.5, Formulation::Amplitude(0.0), 1e-4, 16, 0.01);
    let (tr, fin) = pm_evolve(&s, &FlowSpec::zero(), &cfg).unwrap();
    assert!(tr.var_monotone());
    let rate = -(fin.var_l2_sq().sqrt() / s.var_l2_sq().sqrt()).ln() / 0.01;
    assert!(rate >= 2.0 * FOUR_PI_SQ * 0.75 && rate <= 2.0 * FOUR_PI_SQ * 1.25, "{}", rate / FOUR_PI_SQ);
    let delta = 0.05;
    let v0 = s.var_l2_sq().sqrt();
    let long = PorousConfig::new(2.0, 0.5, Formulation::Amplitude(0.0), 1e-4, 16, 0.1);
    let tau = pm_relaxation_time(&FlowSpec::zero(), &long, &s, delta).unwrap().time().unwrap();
    let lo = (v0 / delta).ln() / (2.0 * FOUR_PI_SQ * 1.25);
    let hi = (v0 / delta).ln() / (2.0 * FOUR_PI_SQ * 0.75);
    assert!(tau >= lo && tau <= hi, "{tau} not in [{lo}, {hi}]");
}

#[test]
fn porous_residuals() {
    let cfg = PorousConfig::new(2.0, 0.5, Formulation::Amplitude(0.0), 1e-5, 32, 2e-3);
    let (tr, _) = pm_evolve(&porous_heat_data(32), &FlowSpec::zero(), &cfg).unwrap();
    assert!(pm_dissipation_residual(&tr, &cfg) <= 1e-3);
    let cfg3 = PorousConfig::new(3.0, 0.5, Formulation::Amplitude(0.0), 1e-4, 16, 5e-3);
    let (tr3, _) = pm_evolve(&porous_heat_data(16), &FlowSpec::zero(), &cfg3).unwrap();
    assert!(pm_dissipation_residual(&tr3, &cfg3) <= 1e-3);
}

#[test]
fn porous_amplitude_ordering() {
    let mut f = SpectralField::random(16, 42, 2.0).scaled(0.15);
    f.set_mean(1.0);
    let s = PorousState::new(f);
    let alt = FlowSpec::alternating_shear_default();
    let var_at = |a: f64| {
        let cfg = PorousConfig::new(2.0, 0.5, Formulation::Amplitude(a), 1e-3, 16, 0.01);
        pm_evolve(&s, &alt, &cfg).unwrap().1.var_l2_sq()
    };
    assert!(var_at(256.0) < var_at(16.0));
    let taus: Vec<f64> = [16.0, 32.0, 64.0, 128.0, 256.0]
        .iter()
        .map(|&a| {
            let cfg = PorousConfig::new(2.0, 0.5, Formulation::Amplitude(a), 1e-3, 16, 0.2);
            pm_relaxation_time(&alt, &cfg, &s, 0.015).unwrap().or_max(0.2)
        })
        .collect();
    assert!(taus.windows(2).all(|w| w[1] <= 1.05 * w[0]), "{taus:?}");
}
