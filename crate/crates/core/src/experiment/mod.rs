//! Experiments built on the two models: input–output sweeps, turn-on
//! transients, grid calibration and the self-check suite.

pub mod calibrate;
pub mod output;
pub mod sweep;
pub mod transient;
pub mod validate;

pub use sweep::{
    feedback_label, point_seed, quantized_options, quantized_steady, run_input_output, semiclassical_options,
    threshold_estimate, ModelKind, SweepPlan, SweepRow, SweepTable,
};
pub use transient::{envelope_decay_time, high_gain_config, overshoot, run_transient};
pub use calibrate::{calibrate_free_space, CalibrationReport, CalibrationSetup};
pub use validate::{run_validate, CheckResult, ValidationReport};
pub use output::{
    is_manifest, read_sweep_csv, sha256_file, sweep_content_digest, sweep_csv_bytes, write_calibration_csv,
    write_transient_csv, RunManifest, SweepCsvWriter, SWEEP_HEADER,
};
