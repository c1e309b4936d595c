//! Relaxation time versus amplitude for the alternating shear.

use relaxlab::diagnostics::{amplitude_sweep, classify, RelaxationQuery};
use relaxlab::{FlowSpec, Formulation, SolverConfig, SpectralField};

fn main() {
    let n = 32;
    let phi0 = SpectralField::random(n, 42, 2.0);
    let tmpl = SolverConfig::new(n, 1e-3, Formulation::Amplitude(0.0), 1.0);
    let q = RelaxationQuery::new(FlowSpec::alternating_shear_default(), phi0, 0.1, 0.1, tmpl).expect("query");
    let amps = [8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0];
    let curve = amplitude_sweep(&q, &amps).expect("sweep");
    print!("{}", curve.to_csv());
    println!("verdict {}", classify(&curve).expect("classify"));
}
