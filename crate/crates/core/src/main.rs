use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qdlaser::experiment::{
    calibrate_free_space, envelope_decay_time, high_gain_config, is_manifest, overshoot, run_input_output,
    run_transient, run_validate, write_calibration_csv, write_transient_csv, CalibrationSetup, ModelKind,
    RunManifest, SweepCsvWriter, SweepPlan,
};
use qdlaser::quantized::Mutation;
use qdlaser::{Error, RunConfig};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "qdlaser", version, about = "Quantum-dot microcavity laser with optical self-feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Steady photon number and g2(0) against pump.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Write zero wall times so that reruns give byte-identical tables.
        #[arg(long)]
        no_wall_time: bool,
    },
    /// Turn-on transient of the quantized model.
    Transient {
        #[command(flatten)]
        common: Common,
        /// Use the high-gain device (1.8e6 dots, beta 1e-3, S 0.65, 32 modes).
        #[arg(long)]
        high_gain: bool,
        /// Horizon in ps; defaults to 800 (high gain) or 1500.
        #[arg(long)]
        horizon_ps: Option<f64>,
        /// Sampling interval of the written series, ps.
        #[arg(long, default_value_t = 1.0)]
        record_ps: f64,
    },
    /// Free-space decay check of the cavity–continuum coupling.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 128)]
        n_modes: usize,
        /// External bandwidth in units of kappa.
        #[arg(long, default_value_t = 160.0)]
        bandwidth_factor: f64,
    },
    /// Run the self-check suite.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Corrupt one term of the quantized equations to exercise the checks.
        #[arg(long, value_enum)]
        mutate: Option<MutateArg>,
    },
}

#[derive(Args)]
struct Common {
    /// Config file (TOML) or a run manifest to repeat.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = ModelArg::Both)]
    model: ModelArg,
    #[arg(long, value_enum, default_value_t = FeedbackArg::Both)]
    feedback: FeedbackArg,
    /// key=value, applied on top of the config file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum ModelArg {
    Quantized,
    Semiclassical,
    Both,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FeedbackArg {
    On,
    Off,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum MutateArg {
    PhotonTransfer,
    CarrierGain,
}

impl ModelArg {
    fn models(self) -> Vec<ModelKind> {
        match self {
            ModelArg::Quantized => vec![ModelKind::Quantized],
            ModelArg::Semiclassical => vec![ModelKind::Semiclassical],
            ModelArg::Both => vec![ModelKind::Quantized, ModelKind::Semiclassical],
        }
    }
}

impl FeedbackArg {
    fn settings(self) -> Vec<bool> {
        match self {
            FeedbackArg::On => vec![true],
            FeedbackArg::Off => vec![false],
            FeedbackArg::Both => vec![false, true],
        }
    }
}

enum Failure {
    Usage(String),
    Runtime(Error),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

/// Config plus, for a manifest, the recorded sweep plan.
fn load_input(common: &Common) -> Result<(RunConfig, Option<RunManifest>), Failure> {
    let usage = |e: Error| Failure::Usage(e.to_string());
    let (mut cfg, manifest) = match &common.config {
        None => (RunConfig::parse_with_overrides("", &common.overrides).map_err(usage)?, None),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            if is_manifest(&text) {
                if !common.overrides.is_empty() {
                    return Err(Failure::Usage("--override cannot be combined with a run manifest".into()));
                }
                let m = RunManifest::load(path).map_err(usage)?;
                (m.config().map_err(usage)?, Some(m))
            } else {
                (RunConfig::parse_with_overrides(&text, &common.overrides).map_err(usage)?, None)
            }
        }
    };
    if let Some(seed) = common.seed {
        cfg.settings.seed = seed;
    }
    Ok((cfg, manifest))
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(Error::Io {
        path: dir.to_path_buf(),
        source: e,
    }))
}

fn sweep(common: &Common, no_wall_time: bool) -> Result<(), Failure> {
    let (cfg, manifest) = load_input(common)?;
    let plan = match manifest.as_ref().map(|m| m.plan()).transpose()?.flatten() {
        Some(p) => p,
        None => SweepPlan {
            models: common.model.models(),
            feedback: common.feedback.settings(),
            pumps: cfg.settings.pump_grid(),
            record_wall_time: !no_wall_time,
        },
    };
    prepare_out(&common.out)?;
    let mut manifest = RunManifest::new("sweep", &cfg, Some(&plan), &plan.feedback)?;
    let mut writer = SweepCsvWriter::create(common.out.join("sweep.csv"))?;
    let mut write_err = None;
    let table = run_input_output(&cfg, &plan, |row| {
        eprintln!(
            "pump {:.4e} {:<13} feedback {:<3} n_ph {:.5e} g2 {} [{}]",
            row.pump_fs_inv,
            row.model,
            if row.feedback { "on" } else { "off" },
            row.n_ph,
            row.g2.map_or("-".into(), |g| format!("{g:.5}")),
            row.terminated
        );
        if let Err(e) = writer.write(row) {
            write_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = write_err {
        return Err(e.into());
    }
    for &m in &plan.models {
        for &fb in &plan.feedback {
            if let Some(t) = table.threshold_estimate(m, fb) {
                println!("threshold {m} feedback {}: {t:.4e} /fs", if fb { "on" } else { "off" });
            }
        }
    }
    manifest.finish(&common.out, &["sweep.csv"])?;
    manifest
        .digests
        .insert("table_content".into(), qdlaser::experiment::sweep_content_digest(&table.rows));
    manifest.write(common.out.join("manifest.toml"))?;
    Ok(())
}

fn transient(common: &Common, high_gain: bool, horizon_ps: Option<f64>, record_ps: f64) -> Result<(), Failure> {
    let (base, manifest) = load_input(common)?;
    let from_manifest = manifest.is_some();
    let mut cfg = if high_gain && !from_manifest {
        high_gain_config(&base)
    } else {
        base
    };
    if !from_manifest {
        cfg.settings.t_max = horizon_ps.unwrap_or(if high_gain { 800.0 } else { 1500.0 }) * 1000.0;
        if !(record_ps > 0.0) {
            return Err(Failure::Usage("--record-ps must be positive".into()));
        }
        cfg.settings.sample_stride = ((record_ps * 1000.0 / cfg.settings.dt).round() as usize).max(1);
    }
    let feedback = match &manifest {
        Some(m) => m.feedback()?,
        None => common.feedback.settings(),
    };
    prepare_out(&common.out)?;
    let mut m = RunManifest::new("transient", &cfg, None, &feedback)?;
    let traces = feedback
        .iter()
        .map(|&fb| run_transient(&cfg, fb).map(|t| (fb, t)))
        .collect::<Result<Vec<_>, _>>()?;
    for (fb, t) in &traces {
        let n: Vec<(f64, f64)> = t.records.iter().map(|r| (r.t, r.n_ph)).collect();
        let decay = envelope_decay_time(&n)
            .map(|d| format!("{:.1} ps", d / 1000.0))
            .unwrap_or_else(|e| format!("n/a ({e})"));
        let last = t.last();
        println!(
            "feedback {}: envelope decay {decay}, overshoot {:.4}, final n_ph {:.5e}, g2 {} [{}]",
            if *fb { "on" } else { "off" },
            overshoot(&n.iter().map(|x| x.1).collect::<Vec<_>>()),
            last.map_or(f64::NAN, |r| r.n_ph),
            last.and_then(|r| r.g2).map_or("-".into(), |g| format!("{g:.4}")),
            t.termination.as_str()
        );
    }
    let refs: Vec<(bool, &qdlaser::integrate::Trace)> = traces.iter().map(|(fb, t)| (*fb, t)).collect();
    write_transient_csv(common.out.join("transient.csv"), &refs)?;
    m.finish(&common.out, &["transient.csv"])?;
    m.write(common.out.join("manifest.toml"))?;
    Ok(())
}

fn calibrate(common: &Common, n_modes: usize, bandwidth_factor: f64) -> Result<(), Failure> {
    let (cfg, _) = load_input(common)?;
    prepare_out(&common.out)?;
    let mut m = RunManifest::new("calibrate", &cfg, None, &[false])?;
    let setup = CalibrationSetup {
        n_modes,
        bandwidth_factor,
        dt: cfg.settings.dt,
    };
    let r = calibrate_free_space(&cfg.params, &setup)?;
    write_calibration_csv(common.out.join("calibration.csv"), &r)?;
    m.finish(&common.out, &["calibration.csv"])?;
    m.write(common.out.join("manifest.toml"))?;
    println!(
        "G0 {:.6e} /fs, fitted decay {:.6e} /fs, 2 kappa {:.6e} /fs, relative error {:.3e}, recurrence {:.1} ps",
        r.g0,
        r.fitted_rate,
        r.target_rate,
        r.relative_error,
        r.recurrence_time / 1000.0
    );
    if r.relative_error > 0.02 {
        return Err(Failure::Check("fitted decay rate is more than 2% from 2 kappa".into()));
    }
    Ok(())
}

fn validate(common: &Common, mutate: Option<MutateArg>) -> Result<(), Failure> {
    let (cfg, _) = load_input(common)?;
    let mutation = mutate.map(|m| match m {
        MutateArg::PhotonTransfer => Mutation::PhotonTransferSign,
        MutateArg::CarrierGain => Mutation::CarrierGainSign,
    });
    let report = run_validate(&cfg, mutation, |c| println!("{c}"));
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {failed} failed", report.checks.len());
    prepare_out(&common.out)?;
    let path = common.out.join("validate.txt");
    std::fs::write(&path, format!("{report}\n")).map_err(|e| Error::Io { path, source: e })?;
    if failed > 0 {
        return Err(Failure::Check(format!("{failed} checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let common = match &cli.command {
        Command::Sweep { common, .. }
        | Command::Transient { common, .. }
        | Command::Calibrate { common, .. }
        | Command::Validate { common, .. } => common,
    };
    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    let result = match &cli.command {
        Command::Sweep { common, no_wall_time } => sweep(common, *no_wall_time),
        Command::Transient {
            common,
            high_gain,
            horizon_ps,
            record_ps,
        } => transient(common, *high_gain, *horizon_ps, *record_ps),
        Command::Calibrate {
            common,
            n_modes,
            bandwidth_factor,
        } => calibrate(common, *n_modes, *bandwidth_factor),
        Command::Validate { common, mutate } => validate(common, *mutate),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
