//! Turn-on of the high-gain device: relaxation oscillations die out more
//! slowly with the mirror.
//!
//!     cargo run --release --example transient

use qdlaser::experiment::{envelope_decay_time, high_gain_config, overshoot, run_transient};
use qdlaser::RunConfig;

fn main() -> qdlaser::Result<()> {
    let cfg = high_gain_config(&RunConfig::default());
    for feedback in [false, true] {
        let trace = run_transient(&cfg, feedback)?;
        let series: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.t, r.n_ph)).collect();
        let decay = envelope_decay_time(&series)?;
        let n: Vec<f64> = series.iter().map(|s| s.1).collect();
        println!(
            "feedback {:<5} envelope decay {:>7.1} ps  overshoot {:.3}  final g2 {:.3}",
            feedback,
            decay / 1000.0,
            overshoot(&n),
            trace.last().and_then(|r| r.g2).unwrap_or(f64::NAN)
        );
        for r in trace.records.iter().step_by(50) {
            println!("    {:>6.0} ps  n_ph {:.4e}", r.t / 1000.0, r.n_ph);
        }
    }
    Ok(())
}
