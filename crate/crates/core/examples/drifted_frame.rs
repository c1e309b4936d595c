//! Frame change `u(x,t) = v(x + b t) - b` turning a stationary flow with
//! irrational mean drift into a time-periodic one with Hamiltonian slices.

use relaxlab::flow::drifted_frame;
use relaxlab::FlowSpec;

fn main() {
    let v: FlowSpec = serde_json::from_str(
        r#"{"kind": "stream_series", "params": {"mean": [1.0, 1.4142135623730951],
            "terms": [{"k": [1, 1], "amp": [0.1, -0.1]}]}}"#,
    )
    .expect("flow");
    println!("base mean {:?}", v.spatial_mean(0.0, 64));
    match v.stream_function(0.0, 64) {
        Ok(_) => println!("base flow has a stream function"),
        Err(e) => println!("base flow: {e}"),
    }
    let u = drifted_frame(&v, 64).expect("drifted frame");
    println!("drifted period {:?}, mean {:?}", u.period(), u.spatial_mean(0.0, 64));
    for t in [0.0, 0.25, 0.5] {
        let h = u.stream_function(t, 64).expect("slice stream function");
        println!("t {t}: alpha {:.6}, defect {:.2e}, div {:.1e}", h.alpha, h.defect, u.divergence_max(t, 64));
    }
}
