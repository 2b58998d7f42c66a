//! Turn-on transients of the quantized model and their analysis.

use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::integrate::{integrate_fixed, IntegrationOptions, Trace};
use crate::params::RunConfig;
use crate::quantized::{init_state, QuantizedObserver, QuantizedRhs};

/// The high-gain device: many more dots, a larger β and a stronger mirror.
///
/// The photon-carrier coupling is not quoted for this device. With the
/// default |M| and 1.8e6 dots the modal gain is so large that the laser
/// turns on in a single spike, so |M| is lowered until damped relaxation
/// oscillations appear. Mode count, step and horizon are reduced to keep
/// the run at desk scale.
pub fn high_gain_config(base: &RunConfig) -> RunConfig {
    let mut cfg = base.clone();
    let p = &mut cfg.params;
    p.n_qd = 1.8e6;
    p.beta = 1e-3;
    p.feedback_strength = 0.65;
    p.kappa_ext = -(0.65f64).ln() / p.tau_delay;
    p.m_coupling = HIGH_GAIN_M;
    p.tau_p_inv = HIGH_GAIN_PUMP;
    let s = &mut cfg.settings;
    s.n_modes = 32;
    s.dt = 10.0;
    s.t_max = 800_000.0;
    s.sample_stride = 100;
    cfg
}

/// |M| of the high-gain device, fs⁻¹.
pub const HIGH_GAIN_M: f64 = 5e-7;
/// Pump of the high-gain transient, fs⁻¹.
pub const HIGH_GAIN_PUMP: f64 = 3e-5;

/// Integrates the quantized model from the unexcited device over the
/// configured horizon, recording every `sample_stride` steps.
pub fn run_transient(cfg: &RunConfig, feedback: bool) -> Result<Trace> {
    let (p, grid) = ModeGrid::from_config(cfg, feedback)?;
    let mut rhs = QuantizedRhs::new(&p, &grid);
    let mut obs = QuantizedObserver::new(&p, &grid);
    let s = &cfg.settings;
    let opts = IntegrationOptions {
        h: s.dt,
        t_max: s.t_max,
        eps_ss: s.steady_eps,
        // only used for the stride clamp
        window: s.steady_window.max(10.0 * s.dt * s.sample_stride as f64),
        stride: s.sample_stride,
        tol: 1e-6,
    };
    let y0 = init_state(&p, &grid).pack();
    let (_, trace) = integrate_fixed(&mut rhs, &y0, &opts, |t, y| obs.record(t, y))?;
    Ok(trace)
}

/// Decay time of the oscillation envelope of `(t, x)`.
///
/// The stationary value is the mean of the last quarter of the series. The
/// local extrema of the deviation from it, from the first maximum on, are
/// fitted with ln|x − x_∞| = a − t/T by least squares. Returns infinity when
/// the envelope does not shrink, and an error when fewer than three extrema
/// exist.
pub fn envelope_decay_time(series: &[(f64, f64)]) -> Result<f64> {
    if series.len() < 8 {
        return Err(Error::Statistics("series too short for an envelope fit".into()));
    }
    let tail = &series[series.len() * 3 / 4..];
    let x_inf = tail.iter().map(|s| s.1).sum::<f64>() / tail.len() as f64;
    let first_peak = (1..series.len() - 1)
        .find(|&i| series[i].1 >= series[i - 1].1 && series[i].1 > series[i + 1].1)
        .ok_or_else(|| Error::Statistics("no maximum in series".into()))?;
    let points: Vec<(f64, f64)> = (first_peak.max(1)..series.len() - 1)
        .filter(|&i| {
            let (a, b, c) = (series[i - 1].1, series[i].1, series[i + 1].1);
            (b >= a && b > c) || (b <= a && b < c)
        })
        .map(|i| (series[i].0, (series[i].1 - x_inf).abs()))
        .filter(|&(_, d)| d > 0.0)
        .map(|(t, d)| (t, d.ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::Statistics(format!("only {} extrema to fit", points.len())));
    }
    let slope = least_squares_slope(&points);
    Ok(if slope < 0.0 { -1.0 / slope } else { f64::INFINITY })
}

/// Slope of the least-squares line through `points`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mt = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sty: f64 = points.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let stt: f64 = points.iter().map(|p| (p.0 - mt).powi(2)).sum();
    sty / stt
}

/// Relative overshoot of a rising signal over its final value:
/// (max x − x_final)/x_final, zero for a monotone rise.
pub fn overshoot(series: &[f64]) -> f64 {
    let Some(&last) = series.last() else { return 0.0 };
    let peak = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if last <= 0.0 {
        return 0.0;
    }
    ((peak - last) / last).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn damped(tau: f64, offset: f64) -> Vec<(f64, f64)> {
        (0..4000)
            .map(|i| {
                let t = i as f64;
                (t, offset + (-t / tau).exp() * (0.05 * t).cos())
            })
            .collect()
    }

    #[test]
    fn envelope_of_a_damped_cosine() {
        for tau in [200.0, 500.0] {
            let fit = envelope_decay_time(&damped(tau, 3.0)).unwrap();
            assert!((fit / tau - 1.0).abs() < 0.05, "{fit} vs {tau}");
        }
    }

    #[test]
    fn undamped_oscillation_has_infinite_decay_time() {
        let s: Vec<_> = (0..4000).map(|i| (i as f64, 2.0 + (0.05 * i as f64).sin())).collect();
        let t = envelope_decay_time(&s).unwrap();
        assert!(t > 1e5);
    }

    #[test]
    fn monotone_rise_has_no_overshoot_and_no_envelope() {
        let s: Vec<_> = (0..100).map(|i| (i as f64, 1.0 - (-(i as f64) / 10.0).exp())).collect();
        assert_eq!(overshoot(&s.iter().map(|p| p.1).collect::<Vec<_>>()), 0.0);
        assert!(envelope_decay_time(&s).is_err());
        assert!((overshoot(&[0.0, 2.0, 1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn least_squares_recovers_a_line() {
        let pts: Vec<_> = (0..10).map(|i| (i as f64, 3.0 - 0.5 * i as f64)).collect();
        assert!((least_squares_slope(&pts) + 0.5).abs() < 1e-14);
    }
}
