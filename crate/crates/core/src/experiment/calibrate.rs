//! Free-space decay check of the coupling calibration.
//!
//! A single photon in the cavity, no light–matter coupling and no external
//! damping: the only loss is the coupling to the discretized continuum, and
//! with |G0| from [`calibrate_g0`](crate::grid::calibrate_g0) the photon
//! number must decay at 2κ until the grid recurrence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Geometry, ModeGrid};
use crate::integrate::{integrate_fixed, IntegrationOptions};
use crate::params::SimulationParameters;
use crate::quantized::{QuantizedObserver, QuantizedRhs, QuantizedState};

use super::transient::least_squares_slope;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSetup {
    pub n_modes: usize,
    /// External bandwidth in units of κ.
    pub bandwidth_factor: f64,
    pub dt: f64,
}

impl Default for CalibrationSetup {
    /// Wide enough that the cavity line is flat on the grid, with the fit
    /// window still shorter than the recurrence time 2π/Δω = 5/κ.
    fn default() -> Self {
        Self {
            n_modes: 128,
            bandwidth_factor: 160.0,
            dt: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub g0: f64,
    pub target_rate: f64,
    pub fitted_rate: f64,
    pub relative_error: f64,
    pub recurrence_time: f64,
    /// Fit interval, fs.
    pub fit_window: (f64, f64),
    /// (t, n_ph) samples.
    pub series: Vec<(f64, f64)>,
}

pub fn calibrate_free_space(params: &SimulationParameters, setup: &CalibrationSetup) -> Result<CalibrationReport> {
    let mut p = params.clone();
    p.m_coupling = 0.0;
    p.kappa_ext = 0.0;
    p.tau_p_inv = 0.0;
    let (p, grid) = ModeGrid::calibrated(&p, setup.n_modes, setup.bandwidth_factor * p.kappa, Geometry::FreeSpace)?;
    let recurrence = grid.recurrence_time();
    // skip the initial non-Markovian transient of a few 1/bandwidth
    let t_start = 0.5 / p.kappa;
    let t_end = (3.0 / p.kappa).min(0.8 * recurrence);
    if t_end <= 2.0 * t_start {
        return Err(Error::Grid(format!(
            "recurrence time {recurrence:.0} fs leaves no room for a decay fit"
        )));
    }

    let mut s0 = QuantizedState::ground(grid.len());
    s0.n_ph = 1.0;
    let mut rhs = QuantizedRhs::new(&p, &grid);
    let mut obs = QuantizedObserver::new(&p, &grid);
    let stride = ((100.0 / setup.dt).round() as usize).max(1);
    let opts = IntegrationOptions {
        h: setup.dt,
        t_max: t_end,
        eps_ss: 1e-6,
        window: 10.0 * stride as f64 * setup.dt,
        stride,
        tol: 1e-6,
    };
    let (_, trace) = integrate_fixed(&mut rhs, &s0.pack(), &opts, |t, y| obs.record(t, y))?;
    if let Some(d) = trace.diagnostic {
        return Err(Error::InvariantViolation { t: f64::NAN, what: d });
    }
    let series: Vec<(f64, f64)> = trace.records.iter().map(|r| (r.t, r.n_ph)).collect();
    let fit: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, n)| *t >= t_start && *t <= t_end && *n > 0.0)
        .map(|&(t, n)| (t, n.ln()))
        .collect();
    if fit.len() < 3 {
        return Err(Error::Statistics("too few samples in the fit window".into()));
    }
    let fitted_rate = -least_squares_slope(&fit);
    let target_rate = 2.0 * p.kappa;
    Ok(CalibrationReport {
        g0: p.g0,
        target_rate,
        fitted_rate,
        relative_error: (fitted_rate - target_rate).abs() / target_rate,
        recurrence_time: recurrence,
        fit_window: (t_start, t_end),
        series,
    })
}
