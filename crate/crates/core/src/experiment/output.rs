//! CSV tables and run manifests.
//!
//! Every table is written with a fixed header. Numbers use the shortest
//! representation that parses back to the same `f64`, so a file is a
//! function of the computed values only. Missing values are empty fields.
//!
//! The manifest is a TOML document next to the tables. Besides the
//! human-readable config it stores the resolved parameters in internal
//! units, which is what a rerun reads back, so that no unit conversion
//! can perturb the last bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::integrate::Trace;
use crate::params::{ConfigFile, RunConfig, RunSettings, SimulationParameters};

use super::calibrate::CalibrationReport;
use super::sweep::{feedback_label, ModelKind, SweepPlan, SweepRow, SweepTable};

pub const SWEEP_HEADER: [&str; 8] = [
    "pump_fs_inv",
    "model",
    "feedback",
    "n_ph",
    "g2",
    "g2_stderr",
    "terminated",
    "wall_s",
];

pub const TRANSIENT_HEADER: [&str; 9] = ["t_fs", "feedback", "n_ph", "g2", "f_c", "f_v", "f_ce", "f_ve", "n_ext"];

pub const CALIBRATION_HEADER: [&str; 2] = ["t_fs", "n_ph"];

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

fn sweep_record(r: &SweepRow) -> [String; 8] {
    [
        r.pump_fs_inv.to_string(),
        r.model.to_string(),
        feedback_label(r.feedback).to_string(),
        r.n_ph.to_string(),
        opt(r.g2),
        opt(r.g2_stderr),
        r.terminated.clone(),
        r.wall_s.to_string(),
    ]
}

/// Writes sweep rows one at a time, flushing after each so that an
/// interrupted sweep leaves a valid partial table.
pub struct SweepCsvWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl SweepCsvWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut inner = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
        inner.write_record(SWEEP_HEADER).map_err(|e| csv_err(&path, e))?;
        inner.flush().map_err(|e| Error::io(&path, e))?;
        Ok(Self { path, inner })
    }

    pub fn write(&mut self, row: &SweepRow) -> Result<()> {
        self.inner.write_record(sweep_record(row)).map_err(|e| csv_err(&self.path, e))?;
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// The sweep table as CSV bytes.
pub fn sweep_csv_bytes(rows: &[SweepRow]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(sweep_record(r)).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Digest of the table with every wall time set to zero: equal for two runs
/// that computed the same numbers.
pub fn sweep_content_digest(rows: &[SweepRow]) -> String {
    let zeroed: Vec<SweepRow> = rows
        .iter()
        .map(|r| SweepRow {
            wall_s: 0.0,
            ..r.clone()
        })
        .collect();
    sha256_hex(&sweep_csv_bytes(&zeroed))
}

/// Reads a sweep table written by [`SweepCsvWriter`] or [`sweep_csv_bytes`].
pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<SweepTable> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().ne(SWEEP_HEADER) {
        return Err(Error::Parse(format!("{}: unexpected header", path.display())));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Parse(format!("{}: bad number `{s}`", path.display())))
    };
    let opt_num = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    let mut table = SweepTable::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        table.rows.push(SweepRow {
            pump_fs_inv: num(field(0))?,
            model: field(1).parse()?,
            feedback: match field(2) {
                "on" => true,
                "off" => false,
                other => return Err(Error::Parse(format!("bad feedback `{other}`"))),
            },
            n_ph: num(field(3))?,
            g2: opt_num(field(4))?,
            g2_stderr: opt_num(field(5))?,
            terminated: field(6).to_string(),
            wall_s: num(field(7))?,
        });
    }
    Ok(table)
}

/// Time series of one or more quantized runs, tagged by feedback setting.
pub fn write_transient_csv(path: impl AsRef<Path>, runs: &[(bool, &Trace)]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(TRANSIENT_HEADER).map_err(|e| csv_err(path, e))?;
    for (fb, trace) in runs {
        for r in &trace.records {
            w.write_record([
                r.t.to_string(),
                feedback_label(*fb).to_string(),
                r.n_ph.to_string(),
                opt(r.g2),
                r.f_c.to_string(),
                r.f_v.to_string(),
                r.f_ce.to_string(),
                r.f_ve.to_string(),
                r.n_ext.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_calibration_csv(path: impl AsRef<Path>, report: &CalibrationReport) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(CALIBRATION_HEADER).map_err(|e| csv_err(path, e))?;
    for (t, n) in &report.series {
        w.write_record([t.to_string(), n.to_string()]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn unix_time() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub command: String,
    pub software: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
    pub threads: usize,
    pub models: Vec<String>,
    pub feedback: Vec<String>,
    pub pumps_fs_inv: Vec<f64>,
    pub record_wall_time: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub feedback: String,
    pub geometry: String,
    pub n_modes: usize,
    pub bandwidth_fs_inv: f64,
    pub mode_spacing_fs_inv: f64,
    pub recurrence_time_fs: f64,
    pub g0_fs_inv: f64,
    pub kappa_ext_fs_inv: f64,
}

impl GridInfo {
    pub fn describe(cfg: &RunConfig, feedback: bool) -> Result<Self> {
        let (p, grid) = ModeGrid::from_config(cfg, feedback)?;
        Ok(Self {
            feedback: feedback_label(feedback).into(),
            geometry: match grid.geometry {
                crate::grid::Geometry::FreeSpace => "free_space".into(),
                crate::grid::Geometry::Mirror { length } => format!("mirror at {length} um"),
            },
            n_modes: grid.len(),
            bandwidth_fs_inv: grid.mode_spacing * grid.len() as f64,
            mode_spacing_fs_inv: grid.mode_spacing,
            recurrence_time_fs: grid.recurrence_time(),
            g0_fs_inv: p.g0,
            kappa_ext_fs_inv: p.kappa_ext,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub params: SimulationParameters,
    pub settings: RunSettings,
}

/// Everything needed to repeat a run, plus digests of what it wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run: RunInfo,
    pub config: ConfigFile,
    pub resolved: Resolved,
    pub grid: Vec<GridInfo>,
    /// File name → SHA-256, plus `table_content` for sweeps.
    pub digests: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig, plan: Option<&SweepPlan>, feedback: &[bool]) -> Result<Self> {
        let quantized = plan.is_none_or(|p| p.models.contains(&ModelKind::Quantized));
        let grid = if quantized {
            feedback
                .iter()
                .map(|&fb| GridInfo::describe(cfg, fb))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(Self {
            run: RunInfo {
                command: command.into(),
                software: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
                started_unix_s: unix_time(),
                finished_unix_s: 0.0,
                threads: rayon::current_num_threads(),
                models: plan
                    .map(|p| p.models.iter().map(|m| m.to_string()).collect())
                    .unwrap_or_default(),
                feedback: feedback.iter().map(|&f| feedback_label(f).to_string()).collect(),
                pumps_fs_inv: plan.map(|p| p.pumps.clone()).unwrap_or_default(),
                record_wall_time: plan.is_none_or(|p| p.record_wall_time),
            },
            config: cfg.to_file(),
            resolved: Resolved {
                params: cfg.params.clone(),
                settings: cfg.settings.clone(),
            },
            grid,
            digests: BTreeMap::new(),
        })
    }

    /// Stamps the end time and digests each output file in `dir`.
    pub fn finish(&mut self, dir: &Path, files: &[&str]) -> Result<()> {
        self.run.finished_unix_s = unix_time();
        for f in files {
            self.digests.insert((*f).to_string(), sha256_file(dir.join(f))?);
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(format!("manifest: {e}")))
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = self.to_toml()?;
        let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// The exact configuration of the recorded run.
    pub fn config(&self) -> Result<RunConfig> {
        let cfg = RunConfig {
            params: self.resolved.params.clone(),
            settings: self.resolved.settings.clone(),
        };
        cfg.params.validate()?;
        Ok(cfg)
    }

    /// The recorded sweep plan, if this was a sweep.
    pub fn plan(&self) -> Result<Option<SweepPlan>> {
        if self.run.command != "sweep" {
            return Ok(None);
        }
        Ok(Some(SweepPlan {
            models: self.run.models.iter().map(|m| m.parse()).collect::<Result<_>>()?,
            feedback: self.feedback()?,
            pumps: self.run.pumps_fs_inv.clone(),
            record_wall_time: self.run.record_wall_time,
        }))
    }

    pub fn feedback(&self) -> Result<Vec<bool>> {
        self.run
            .feedback
            .iter()
            .map(|f| match f.as_str() {
                "on" => Ok(true),
                "off" => Ok(false),
                other => Err(Error::Parse(format!("bad feedback `{other}` in manifest"))),
            })
            .collect()
    }
}

/// True when the TOML text is a run manifest rather than a config file.
pub fn is_manifest(text: &str) -> bool {
    text.parse::<toml::Table>()
        .map(|t| t.contains_key("run") && t.contains_key("resolved"))
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(pump: f64, model: ModelKind, fb: bool) -> SweepRow {
        SweepRow {
            pump_fs_inv: pump,
            model,
            feedback: fb,
            n_ph: 12.5,
            g2: if model == ModelKind::Quantized { Some(1.25) } else { Some(1.0001) },
            g2_stderr: (model == ModelKind::Semiclassical).then_some(3e-4),
            terminated: "steady_state".into(),
            wall_s: 0.5,
        }
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let bytes = sweep_csv_bytes(&[]);
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "pump_fs_inv,model,feedback,n_ph,g2,g2_stderr,terminated,wall_s\n"
        );
    }

    #[test]
    fn csv_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let rows = vec![
            row(1.0 / 3.0, ModelKind::Quantized, false),
            row(1.0 / 3.0, ModelKind::Semiclassical, true),
            SweepRow {
                g2: None,
                n_ph: f64::NAN,
                terminated: "invariant_violation".into(),
                ..row(0.1, ModelKind::Quantized, true)
            },
        ];
        let mut w = SweepCsvWriter::create(&path).unwrap();
        for r in &rows {
            w.write(r).unwrap();
        }
        drop(w);
        assert_eq!(std::fs::read(&path).unwrap(), sweep_csv_bytes(&rows));
        let back = read_sweep_csv(&path).unwrap();
        assert_eq!(back.rows[0], rows[0]);
        assert_eq!(back.rows[1], rows[1]);
        assert!(back.rows[2].n_ph.is_nan() && back.rows[2].g2.is_none());
    }

    #[test]
    fn content_digest_ignores_wall_time() {
        let a = vec![row(1e-4, ModelKind::Quantized, true)];
        let mut b = a.clone();
        b[0].wall_s = 99.0;
        assert_eq!(sweep_content_digest(&a), sweep_content_digest(&b));
        b[0].n_ph += 1e-12;
        assert_ne!(sweep_content_digest(&a), sweep_content_digest(&b));
    }

    #[test]
    fn manifest_restores_the_exact_config() {
        let mut cfg = RunConfig::default();
        cfg.params.tau_p_inv = 1.0 / 7.0 * 1e-4;
        cfg.settings.n_modes = 16;
        let plan = SweepPlan {
            models: vec![ModelKind::Semiclassical],
            feedback: vec![true],
            pumps: vec![1e-5, 1e-4],
            record_wall_time: false,
        };
        let m = RunManifest::new("sweep", &cfg, Some(&plan), &plan.feedback).unwrap();
        let text = m.to_toml().unwrap();
        assert!(is_manifest(&text));
        assert!(!is_manifest(&cfg.to_toml()));
        let back: RunManifest = toml::from_str(&text).unwrap();
        assert_eq!(back.config().unwrap(), cfg);
        assert_eq!(back.plan().unwrap().unwrap(), plan);
    }

    #[test]
    fn missing_output_directory_names_the_path() {
        let err = SweepCsvWriter::create("/nonexistent-dir/x.csv").err().unwrap();
        assert!(format!("{err}").contains("/nonexistent-dir/x.csv"));
    }
}
