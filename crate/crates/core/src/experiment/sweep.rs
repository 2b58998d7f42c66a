//! Input–output curves: steady photon number and g²(0) against pump.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::integrate::{integrate_to_steady, IntegrationOptions, Termination, Trace};
use crate::params::RunConfig;
use crate::quantized::{init_state, QuantizedObserver, QuantizedRhs};
use crate::semiclassical::{run_ensemble, EnsembleOptions, SemiclassicalModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Quantized,
    Semiclassical,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Quantized => "quantized",
            ModelKind::Semiclassical => "semiclassical",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantized" => Ok(ModelKind::Quantized),
            "semiclassical" => Ok(ModelKind::Semiclassical),
            other => Err(Error::Parse(format!("unknown model `{other}`"))),
        }
    }
}

pub fn feedback_label(on: bool) -> &'static str {
    if on {
        "on"
    } else {
        "off"
    }
}

/// One line of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub pump_fs_inv: f64,
    pub model: ModelKind,
    pub feedback: bool,
    pub n_ph: f64,
    pub g2: Option<f64>,
    /// Only the stochastic model has a sampling error.
    pub g2_stderr: Option<f64>,
    pub terminated: String,
    pub wall_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Rows of one (model, feedback) curve, in pump order.
    pub fn curve(&self, model: ModelKind, feedback: bool) -> Vec<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.model == model && r.feedback == feedback)
            .collect()
    }

    /// Pump at which d ln n_ph / d ln pump peaks on the given curve, taken at
    /// the geometric midpoint of the steepest interval.
    pub fn threshold_estimate(&self, model: ModelKind, feedback: bool) -> Option<f64> {
        threshold_estimate(
            &self
                .curve(model, feedback)
                .iter()
                .map(|r| (r.pump_fs_inv, r.n_ph))
                .collect::<Vec<_>>(),
        )
    }
}

/// Threshold marker of an input–output curve given as (pump, n_ph) pairs.
pub fn threshold_estimate(curve: &[(f64, f64)]) -> Option<f64> {
    curve
        .windows(2)
        .filter(|w| w[0].0 > 0.0 && w[1].0 > w[0].0 && w[0].1 > 0.0 && w[1].1 > 0.0)
        .map(|w| {
            let slope = (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln();
            (slope, (w[0].0 * w[1].0).sqrt())
        })
        .filter(|(s, _)| s.is_finite())
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, p)| p)
}

/// Which curves a sweep computes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub models: Vec<ModelKind>,
    pub feedback: Vec<bool>,
    pub pumps: Vec<f64>,
    /// Record wall-clock times; off makes the CSV byte-reproducible.
    pub record_wall_time: bool,
}

impl SweepPlan {
    pub fn full(cfg: &RunConfig) -> Self {
        Self {
            models: vec![ModelKind::Quantized, ModelKind::Semiclassical],
            feedback: vec![false, true],
            pumps: cfg.settings.pump_grid(),
            record_wall_time: true,
        }
    }

    fn jobs(&self) -> Vec<(f64, ModelKind, bool)> {
        let mut jobs = Vec::new();
        for &pump in &self.pumps {
            for &m in &self.models {
                for &fb in &self.feedback {
                    jobs.push((pump, m, fb));
                }
            }
        }
        jobs
    }
}

/// Integration options of a quantized steady-state run.
pub fn quantized_options(cfg: &RunConfig) -> IntegrationOptions {
    let s = &cfg.settings;
    IntegrationOptions {
        h: s.dt,
        t_max: s.t_max,
        eps_ss: s.steady_eps,
        window: s.steady_window,
        stride: s.sample_stride,
        tol: 1e-6,
    }
}

/// Integrates the quantized model from the cold cavity to steady state.
pub fn quantized_steady(cfg: &RunConfig, pump: f64, feedback: bool) -> Result<Trace> {
    let mut cfg = cfg.clone();
    cfg.params.tau_p_inv = pump;
    let (p, grid) = ModeGrid::from_config(&cfg, feedback)?;
    let mut rhs = QuantizedRhs::new(&p, &grid);
    let mut obs = QuantizedObserver::new(&p, &grid);
    let y0 = init_state(&p, &grid).pack();
    let (_, trace) = integrate_to_steady(&mut rhs, &y0, &quantized_options(&cfg), |t, y| obs.record(t, y))?;
    Ok(trace)
}

/// Master seed of one stochastic sweep point, a function of the run seed
/// and the row key only.
pub fn point_seed(seed: u64, pump: f64, feedback: bool) -> u64 {
    // splitmix64 finaliser over the combined key
    let mut z = seed ^ pump.to_bits().rotate_left(17) ^ (feedback as u64).wrapping_mul(0xA076_1D64_78BD_642F);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn semiclassical_options(cfg: &RunConfig, pump: f64, feedback: bool) -> EnsembleOptions {
    let s = &cfg.settings;
    EnsembleOptions {
        h: s.sc_dt,
        seeds: s.sc_seeds,
        master_seed: point_seed(s.seed, pump, feedback),
        discard: s.sc_discard,
        average: s.sc_average,
        // 100 fs at the default step, far below 1/κ
        stride: 10,
    }
}

fn run_point(cfg: &RunConfig, pump: f64, model: ModelKind, feedback: bool, wall: bool) -> SweepRow {
    let start = Instant::now();
    let mut row = SweepRow {
        pump_fs_inv: pump,
        model,
        feedback,
        n_ph: f64::NAN,
        g2: None,
        g2_stderr: None,
        terminated: String::new(),
        wall_s: 0.0,
    };
    match model {
        ModelKind::Quantized => match quantized_steady(cfg, pump, feedback) {
            Ok(trace) => {
                row.terminated = trace.termination.as_str().to_string();
                if trace.termination != Termination::InvariantViolation {
                    if let Some(last) = trace.last() {
                        row.n_ph = last.n_ph;
                        row.g2 = last.g2;
                    }
                }
            }
            Err(e) => row.terminated = format!("error: {e}"),
        },
        ModelKind::Semiclassical => {
            let mut p = cfg.params.clone();
            p.tau_p_inv = pump;
            let m = SemiclassicalModel::new(&p, cfg.settings.sc_dt, feedback);
            match run_ensemble(&m, &semiclassical_options(cfg, pump, feedback)) {
                Ok(r) => {
                    row.n_ph = r.n_ph;
                    row.g2 = Some(r.g2);
                    row.g2_stderr = Some(r.g2_stderr);
                    row.terminated = "averaged".into();
                }
                Err(Error::InvariantViolation { .. }) => row.terminated = Termination::InvariantViolation.as_str().into(),
                Err(e) => row.terminated = format!("error: {e}"),
            }
        }
    }
    if wall {
        row.wall_s = start.elapsed().as_secs_f64();
    }
    row
}

/// Runs every (pump, model, feedback) point of the plan.
///
/// Points run in parallel batches of the pool size; `on_row` sees the rows
/// in table order (pump, then model, then feedback) as soon as a batch is
/// done, so a partial sweep is still usable. A failed point is reported in
/// its row and does not stop the sweep.
pub fn run_input_output(cfg: &RunConfig, plan: &SweepPlan, mut on_row: impl FnMut(&SweepRow)) -> Result<SweepTable> {
    cfg.params.validate()?;
    let mut pumps = plan.pumps.clone();
    pumps.dedup();
    if pumps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parse("pump grid must be strictly increasing".into()));
    }
    let jobs = plan.jobs();
    let batch = rayon::current_num_threads().max(1);
    let mut table = SweepTable::default();
    for chunk in jobs.chunks(batch) {
        let rows: Vec<SweepRow> = chunk
            .par_iter()
            .map(|&(pump, m, fb)| run_point(cfg, pump, m, fb, plan.record_wall_time))
            .collect();
        for r in rows {
            on_row(&r);
            table.rows.push(r);
        }
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_the_steepest_interval() {
        // n = pump below 1, n = 100 * pump above 2: all the rise is between 1 and 2
        let curve = [(0.25, 0.25), (0.5, 0.5), (1.0, 1.0), (2.0, 200.0), (4.0, 400.0)];
        let t = threshold_estimate(&curve).unwrap();
        assert!((t - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(threshold_estimate(&[(1.0, 1.0)]), None);
    }

    #[test]
    fn point_seeds_depend_on_the_whole_key() {
        let a = point_seed(1, 1e-4, true);
        assert_eq!(a, point_seed(1, 1e-4, true));
        assert_ne!(a, point_seed(1, 1e-4, false));
        assert_ne!(a, point_seed(2, 1e-4, true));
        assert_ne!(a, point_seed(1, 1.0001e-4, true));
    }

    #[test]
    fn model_names_round_trip() {
        for m in [ModelKind::Quantized, ModelKind::Semiclassical] {
            assert_eq!(m.as_str().parse::<ModelKind>().unwrap(), m);
        }
        assert!("classical".parse::<ModelKind>().is_err());
    }

    #[test]
    fn jobs_are_in_table_order() {
        let plan = SweepPlan {
            models: vec![ModelKind::Quantized, ModelKind::Semiclassical],
            feedback: vec![false, true],
            pumps: vec![1.0, 2.0],
            record_wall_time: false,
        };
        let jobs = plan.jobs();
        assert_eq!(jobs.len(), 8);
        assert_eq!(jobs[0], (1.0, ModelKind::Quantized, false));
        assert_eq!(jobs[3], (1.0, ModelKind::Semiclassical, true));
        assert_eq!(jobs[4].0, 2.0);
    }
}
