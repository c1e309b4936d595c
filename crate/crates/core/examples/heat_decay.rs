//! Pure diffusion of a single Fourier mode against `exp(-4 pi^2 |k|^2 t)`.

use relaxlab::solver::evolve;
use relaxlab::spectral::FOUR_PI_SQ;
use relaxlab::{FlowSpec, Formulation, SolverConfig, SpectralField, WaveIndex};

fn main() {
    let phi0 = SpectralField::sin_mode(8, WaveIndex::new(1, 0), 2f64.sqrt());
    let cfg = SolverConfig::new(8, 1e-4, Formulation::Amplitude(0.0), 0.1).with_record_stride(100);
    let (traj, fin) = evolve(&phi0, &FlowSpec::zero(), &cfg).expect("heat run");
    for (t, l2) in traj.times.iter().zip(&traj.l2_sq) {
        println!("t {t:.3}  ||phi|| {:.12}  exact {:.12}", l2.sqrt(), (-FOUR_PI_SQ * t).exp());
    }
    let err = fin.l2_sq().sqrt() / (-FOUR_PI_SQ * 0.1).exp() - 1.0;
    println!("relative error at t = 0.1: {err:e}");
}
