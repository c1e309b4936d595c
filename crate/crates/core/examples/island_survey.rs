//! The unit-amplitude alternating sine shear keeps a regular island around
//! the period-2 orbit (1/4, 1/4) <-> (3/4, 3/4), and its period operator has
//! smooth eigenvectors there; at amplitude 1.5 the island is gone.

use relaxlab::floquet::roughness_profile;
use relaxlab::flow::Profile;
use relaxlab::spectral::FOUR_PI_SQ;
use relaxlab::transport::flow_map;
use relaxlab::FlowSpec;

fn main() {
    for amp in [1.0, 1.5] {
        let flow = FlowSpec::alternating_shear(Profile::sine(amp), Profile::sine(amp), 0.5, 1.0).expect("flow");
        // Spread of a small disc around (1/4, 1/4) after 20 periods.
        let mut spread: f64 = 0.0;
        for j in 0..16 {
            let a = j as f64 * std::f64::consts::TAU / 16.0;
            let x = [0.25 + 0.02 * a.cos(), 0.25 + 0.02 * a.sin()];
            let y = flow_map(&flow, x, 0.0, 20.0, 1e-3);
            let d = |v: f64| (v - 0.25 - (v - 0.25).round()).abs();
            spread = spread.max(d(y[0]).hypot(d(y[1])));
        }
        let p = roughness_profile(&flow, &[8, 12, 16], 1e-3).expect("profile");
        let mins: Vec<String> = p.rows.iter().map(|r| format!("{:.2}", r.min_h1 / FOUR_PI_SQ)).collect();
        let growth = p.growth(8, 16).unwrap();
        println!("amplitude {amp}: disc spread {spread:.3}, min h1/4pi^2 [{}], growth 8->16 {growth:.2}", mins.join(", "));
    }
}
