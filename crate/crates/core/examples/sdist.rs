//! Distance between the diffusive and the free evolution against its bound.

use relaxlab::diagnostics::sdist_check;
use relaxlab::{FlowSpec, SpectralField};

fn main() {
    let phi0 = SpectralField::random(16, 42, 2.0);
    for (name, flow) in [("cellular", FlowSpec::cellular(1.0)), ("alternating", FlowSpec::alternating_shear_default())] {
        for eps in [1e-2, 1e-3] {
            let r = sdist_check(&flow, eps, &phi0, 1.0, 1e-3).expect("sdist");
            println!(
                "{name:<12} eps {eps:e}: lhs(1) {:.3e}  rhs(1) {:.3e}  worst ratio {:.3}  {}",
                r.lhs.last().unwrap(),
                r.rhs.last().unwrap(),
                r.worst_ratio,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
    }
}
