//! The discretized external continuum for free space and for a mirror,
//! with the coupling amplitude fixed by the cavity loss.
//!
//!     cargo run --example mode_grid

use qdlaser::grid::{Geometry, ModeGrid};
use qdlaser::SimulationParameters;

fn main() -> qdlaser::Result<()> {
    let p = SimulationParameters::default();
    let n_q = 16;
    let bandwidth = 40.0 * p.kappa;

    let (cal, free) = ModeGrid::calibrated(&p, n_q, bandwidth, Geometry::FreeSpace)?;
    println!(
        "free space: {} modes, spacing {:.3e} /fs, density of states {:.1} fs, G0 {:.4e} /fs",
        free.len(),
        free.mode_spacing,
        free.density_of_states,
        cal.g0
    );
    println!("recurrence time {:.1} ps", free.recurrence_time() / 1000.0);

    let (_, mirror) = ModeGrid::calibrated(&p, n_q, bandwidth, Geometry::mirror_for(&p))?;
    println!("\n  detuning (/ps)   |G_q| free    |G_q| mirror");
    for q in 0..n_q {
        println!(
            "  {:>+13.4}   {:.4e}    {:.4e}",
            mirror.detunings[q] * 1000.0,
            free.couplings[q].norm(),
            mirror.couplings[q].norm()
        );
    }
    // the mirror only redistributes the coupling: the average of |G_q|² stays roughly the same
    let mean_sq = |g: &ModeGrid| g.couplings.iter().map(|c| c.norm_sqr()).sum::<f64>() / g.len() as f64;
    println!("\nmean |G|²: free {:.4e}, mirror {:.4e}", mean_sq(&free), mean_sq(&mirror));
    Ok(())
}
