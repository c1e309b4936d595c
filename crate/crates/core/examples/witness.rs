//! Non-enhancement: an H1 eigenfunction of the period operator decays no
//! faster than diffusion alone, for the linear and the porous-medium equation.

use relaxlab::diagnostics::non_enhancement_witness;
use relaxlab::flow::{Axis, Profile};
use relaxlab::porous::{pm_witness, PorousConfig};
use relaxlab::{FlowSpec, Formulation, SpectralField, WaveIndex};

fn main() {
    let flow = FlowSpec::shear(Profile::constant(2.0), Axis::X2);
    let psi = SpectralField::sin_mode(8, WaveIndex::new(1, 0), 2f64.sqrt());
    let eps = [1e-1, 1e-2, 1e-3];
    let r = non_enhancement_witness(&flow, &psi, &eps).expect("witness");
    println!("linear: tau {:.6}  B1 {:.3}", r.tau, r.b1);
    for (e, v) in eps.iter().zip(&r.final_norms) {
        println!("  eps {e:e}: ||phi(tau/eps)|| {v:.8} (exp(-1) = {:.8})", (-1f64).exp());
    }
    let cfg = PorousConfig::new(2.0, 0.5, Formulation::Diffusivity(0.1), 1e-3, 16, 1.0);
    let p = pm_witness(&flow, &psi, &cfg, &eps[..2]).expect("porous witness");
    println!("porous q=2: h {:.4}  tau {:.4e}  pass {}", p.h, p.tau, p.pass);
    for (e, v) in eps.iter().zip(&p.final_norms) {
        println!("  eps {e:e}: ||phi - mean|| {v:.6}");
    }
}
