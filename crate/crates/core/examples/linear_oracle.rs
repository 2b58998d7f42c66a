//! Without light–matter coupling the photon part of the quantized model is
//! linear; its matrix exponential is an independent reference for the
//! Runge–Kutta trajectory.
//!
//!     cargo run --release --example linear_oracle

use qdlaser::experiment::validate::{oracle_deviation, photon_subsystem_generator};
use qdlaser::grid::{Geometry, ModeGrid};
use qdlaser::SimulationParameters;

fn main() -> qdlaser::Result<()> {
    let p = SimulationParameters::default();
    let (pc, grid) = ModeGrid::calibrated(&p, 8, 40.0 * p.kappa, Geometry::mirror_for(&p))?;
    let a = photon_subsystem_generator(&pc, &grid);
    println!("generator: {}×{}", a.nrows(), a.ncols());
    for h in [50.0, 20.0, 10.0] {
        let d = oracle_deviation(&p, 8, 5.0, h, None)?;
        println!("RK4 step {h:>4} fs: max |RK4 − exp(At) y0| = {d:.3e}");
    }
    Ok(())
}
