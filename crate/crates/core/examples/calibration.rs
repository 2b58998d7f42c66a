//! A single photon leaking into the free-space continuum decays at 2κ.
//!
//!     cargo run --release --example calibration

use qdlaser::experiment::{calibrate_free_space, CalibrationSetup};
use qdlaser::SimulationParameters;

fn main() -> qdlaser::Result<()> {
    let p = SimulationParameters::default();
    let r = calibrate_free_space(&p, &CalibrationSetup::default())?;
    println!("G0 = {:.5e} /fs", r.g0);
    println!(
        "fitted decay {:.5e} /fs, 2 kappa {:.5e} /fs ({:.2}% off)",
        r.fitted_rate,
        r.target_rate,
        100.0 * r.relative_error
    );
    println!(
        "fit over {:.1}..{:.1} ps, grid recurrence at {:.1} ps",
        r.fit_window.0 / 1000.0,
        r.fit_window.1 / 1000.0,
        r.recurrence_time / 1000.0
    );
    for (t, n) in r.series.iter().step_by(50) {
        println!("  {:>6.1} ps  n_ph {:.5}  exp(-2κt) {:.5}", t / 1000.0, n, (-r.target_rate * t).exp());
    }
    Ok(())
}
