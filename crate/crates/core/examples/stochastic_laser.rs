//! Stochastic delay model: averaged photon number and g²(0) from an
//! ensemble of noisy trajectories.
//!
//!     cargo run --release --example stochastic_laser -- [pump_fs]

use qdlaser::semiclassical::{run_ensemble, EnsembleOptions, SemiclassicalModel};
use qdlaser::SimulationParameters;

fn main() -> qdlaser::Result<()> {
    let pump: f64 = std::env::args()
        .nth(1)
        .map_or(1e-4, |s| s.parse().expect("pump rate in 1/fs"));
    let p = SimulationParameters {
        tau_p_inv: pump,
        ..SimulationParameters::default()
    };
    let h = 10.0;
    let opts = EnsembleOptions {
        h,
        seeds: 4,
        master_seed: 7,
        discard: 5.0 * p.tau_delay,
        average: 20.0 * p.tau_delay,
        stride: 10,
    };
    for feedback in [false, true] {
        let model = SemiclassicalModel::new(&p, h, feedback);
        let r = run_ensemble(&model, &opts)?;
        println!(
            "feedback {:<5} <|c|²> {:.5e}  g2 {:.6} ± {:.1e}",
            feedback, r.n_ph, r.g2, r.g2_stderr
        );
        for (k, e) in r.per_seed.iter().enumerate() {
            println!("    realization {k}: g2 {:.6} ± {:.1e}", e.g2, e.stderr);
        }
    }

    // a single trajectory, deterministic limit, to see the carriers settle
    let model = SemiclassicalModel::new(&p, h, true).deterministic();
    let mut s = model.init(qdlaser::semiclassical::realization_rng(0, 0))?;
    s.c_field = num_complex::Complex64::new(1.0, 0.0);
    model.run(&mut s, (10.0 * p.tau_delay / h) as u64, |_| {})?;
    let [fc, fv, fce, fve] = s.occupations();
    println!("\nnoise-free run after 10 delays: |c|² {:.5e}, f_c {fc:.4}, f_v {fv:.4}, f_ce {fce:.4}, f_ve {fve:.4}", s.intensity());
    Ok(())
}
