//! Steady state of the quantized model at one pump, with and without the
//! mirror.
//!
//!     cargo run --release --example steady_state -- [pump_fs] [n_modes]

use qdlaser::experiment::quantized_steady;
use qdlaser::RunConfig;

fn main() -> qdlaser::Result<()> {
    let mut args = std::env::args().skip(1);
    let pump: f64 = args.next().map_or(1e-4, |s| s.parse().expect("pump rate in 1/fs"));
    let n_modes: usize = args.next().map_or(64, |s| s.parse().expect("mode count"));
    let mut cfg = RunConfig::default();
    cfg.settings.n_modes = n_modes;

    for feedback in [false, true] {
        let start = std::time::Instant::now();
        let trace = quantized_steady(&cfg, pump, feedback)?;
        let last = trace.last().expect("at least one record");
        println!(
            "feedback {:<5} n_ph {:.5e}  g2 {}  f_c {:.4}  f_v {:.4}  t {:.0} ps  [{}]  {:.1} s",
            feedback,
            last.n_ph,
            last.g2.map_or("-".into(), |g| format!("{g:.4}")),
            last.f_c,
            last.f_v,
            last.t / 1000.0,
            trace.termination.as_str(),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
