//! The self-check suite, once clean and once with a sign flipped in the
//! photon equation.
//!
//!     cargo run --release --example validation

use qdlaser::experiment::run_validate;
use qdlaser::quantized::Mutation;
use qdlaser::RunConfig;

fn main() {
    let cfg = RunConfig::default();
    let clean = run_validate(&cfg, None, |c| println!("{c}"));
    println!("all passed: {}\n", clean.all_passed());

    let broken = run_validate(&cfg, Some(Mutation::PhotonTransferSign), |_| {});
    for c in broken.checks.iter().filter(|c| !c.passed) {
        println!("with the corrupted photon equation: {c}");
    }
}
