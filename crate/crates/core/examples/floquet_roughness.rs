//! H1 roughness of period-operator eigenvectors under truncation refinement.
//!
//! A shear keeps an H1 eigenfunction (flat minimum); the alternating shear
//! does not (the minimum grows with the truncation).

use relaxlab::floquet::roughness_profile;
use relaxlab::flow::{Axis, Profile};
use relaxlab::spectral::FOUR_PI_SQ;
use relaxlab::FlowSpec;

fn main() {
    let flows = [
        ("sine shear", FlowSpec::shear(Profile::sine(1.0), Axis::X2)),
        ("alternating shear", FlowSpec::alternating_shear_default()),
    ];
    for (name, flow) in &flows {
        let p = roughness_profile(flow, &[8, 12, 16], 1e-3).expect("profile");
        println!("{name}: {}", p.verdict());
        for r in &p.rows {
            println!("  n_trunc {:>3}  min h1/4pi^2 {:>9.3}  defect {:.2e}", r.n_trunc, r.min_h1 / FOUR_PI_SQ, r.defect);
        }
    }
}
