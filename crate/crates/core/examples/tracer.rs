//! Particle paths in the cellular flow: a stagnation point, and a closed
//! orbit that returns to its start.

use relaxlab::transport::trace;
use relaxlab::FlowSpec;

fn main() {
    let flow = FlowSpec::cellular(1.0);
    let fixed = trace(&flow, [0.0, 0.0], 0.0, 1.0, 1e-3);
    println!("from the corner: {:?}", fixed.endpoint());
    let path = trace(&flow, [0.25, 0.1], 0.0, 2.0, 1e-3);
    let (mut closest, mut when) = (f64::INFINITY, 0.0);
    for (t, x) in path.samples.iter().skip(100) {
        let d = (x[0] - 0.25).hypot(x[1] - 0.1);
        if d < closest {
            closest = d;
            when = *t;
        }
    }
    println!("orbit through (0.25, 0.1) returns within {closest:.2e} at t = {when:.3}");
    print!("{}", path.to_csv().lines().take(5).collect::<Vec<_>>().join("\n"));
    println!();
}
