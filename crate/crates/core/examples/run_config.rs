//! Drive the batch harness from code: run a config and read its manifest.

use relaxlab::harness::{run, Kind};
use std::path::Path;

fn main() {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/heat.json");
    let out = std::env::temp_dir().join("relaxlab-run-config");
    let m = run(Kind::Simulate, Some(&cfg), Some(&out)).expect("run");
    println!("artifacts in {}: {:?}", out.display(), m.artifacts);
    for c in &m.checks {
        println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
}
