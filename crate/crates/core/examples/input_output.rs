//! A small input–output sweep of both models with and without feedback,
//! written as CSV with a manifest.
//!
//!     cargo run --release --example input_output -- [out_dir]

use std::path::PathBuf;

use qdlaser::experiment::{run_input_output, ModelKind, RunManifest, SweepCsvWriter, SweepPlan};
use qdlaser::RunConfig;

fn main() -> qdlaser::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "io_example".into()));
    std::fs::create_dir_all(&out).map_err(|e| qdlaser::Error::Io {
        path: out.clone(),
        source: e,
    })?;
    let mut cfg = RunConfig::default();
    cfg.settings.n_modes = 32;
    cfg.settings.sc_seeds = 4;
    cfg.settings.sc_average = 20.0 * cfg.params.tau_delay;
    let plan = SweepPlan {
        models: vec![ModelKind::Quantized, ModelKind::Semiclassical],
        // the mirror needs more modes than this; see the steady_state example
        feedback: vec![false],
        pumps: vec![3e-6, 1e-5, 3e-5, 1e-4],
        record_wall_time: true,
    };
    let mut manifest = RunManifest::new("sweep", &cfg, Some(&plan), &plan.feedback)?;
    let mut csv = SweepCsvWriter::create(out.join("sweep.csv"))?;
    let table = run_input_output(&cfg, &plan, |row| {
        println!(
            "{:.1e} {:<13} n_ph {:.4e} g2 {}",
            row.pump_fs_inv,
            row.model,
            row.n_ph,
            row.g2.map_or("-".into(), |g| format!("{g:.4}"))
        );
        csv.write(row).expect("write row");
    })?;
    for m in [ModelKind::Quantized, ModelKind::Semiclassical] {
        if let Some(t) = table.threshold_estimate(m, false) {
            println!("{m} threshold near {t:.2e} /fs");
        }
    }
    manifest.finish(&out, &["sweep.csv"])?;
    manifest.write(out.join("manifest.toml"))?;
    println!("wrote {}", out.display());
    Ok(())
}
