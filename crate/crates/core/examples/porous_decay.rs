//! Porous-medium equation `A u . grad phi = Delta phi^2` from data in [h, 1/h].

use relaxlab::porous::{pm_dissipation_residual, pm_evolve, PorousConfig, PorousState};
use relaxlab::{FlowSpec, Formulation, SpectralField};

fn main() {
    let mut f = SpectralField::random(16, 42, 2.0).scaled(0.15);
    f.set_mean(1.0);
    let s = PorousState::new(f);
    println!("initial range {:?}", s.range());
    for a in [0.0, 16.0, 64.0] {
        let cfg = PorousConfig::new(2.0, 0.5, Formulation::Amplitude(a), 1e-3, 16, 0.05);
        let (tr, fin) = pm_evolve(&s, &FlowSpec::cellular(1.0), &cfg).expect("porous run");
        println!(
            "A {a:>4}: var {:.3e}  range [{:.4}, {:.4}]  residual {:.1e}  max principle {}",
            fin.var_l2_sq(),
            fin.range().0,
            fin.range().1,
            pm_dissipation_residual(&tr, &cfg),
            tr.max_principle_holds(1e-6)
        );
    }
}
