//! Energy identity `d/dt ||phi||^2 = -2 ||phi||_1^2` on a cellular-flow run.

use relaxlab::solver::{decay_lemma_ratio, dissipation_residual, evolve};
use relaxlab::{FlowSpec, Formulation, SolverConfig, SpectralField};
use std::time::Instant;

fn main() {
    let n = 32;
    let phi0 = SpectralField::random(n, 42, 2.0);
    let cfg = SolverConfig::new(n, 1e-4, Formulation::Amplitude(64.0), 0.5).with_record_stride(10);
    let start = Instant::now();
    let (traj, _) = evolve(&phi0, &FlowSpec::cellular(1.0), &cfg).expect("run");
    println!("wall time      {:.1}s", start.elapsed().as_secs_f64());
    println!("records        {}", traj.times.len());
    println!("final l2_sq    {:e}", traj.l2_sq.last().unwrap());
    println!("max residual   {:e}", dissipation_residual(&traj, &cfg));
    println!("mean drift     {:e}", traj.mean_drift);
    println!("monotone       {}", traj.is_monotone());
    println!("decay ratio    {:.6}", decay_lemma_ratio(&traj, 4.0 * std::f64::consts::PI.powi(2)));
}
