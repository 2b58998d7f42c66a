//! Stochastic delay model: classical cavity field with a delayed
//! re-injection term, a classical polarization, four carrier levels and
//! Gaussian spontaneous-emission noise.

use std::collections::VecDeque;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SimulationParameters;
use crate::quantized::carrier_kinetics;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub c_field: Complex64,
    pub p_cl: Complex64,
    pub f_c: f64,
    pub f_v: f64,
    pub f_ce: f64,
    pub f_ve: f64,
}

impl Drift {
    pub fn norm(&self) -> f64 {
        [
            self.c_field.norm(),
            self.p_cl.norm(),
            self.f_c.abs(),
            self.f_v.abs(),
            self.f_ce.abs(),
            self.f_ve.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Deterministic right-hand side.
///
/// The field sees the delayed re-injection κ S e^{−iφ} c(t−τ); `feedback`
/// off drops it. Stimulated emission uses M* in the polarization source so
/// that, with M = i|M|, an inverted ensemble amplifies the field; the
/// carrier exchange 2 Im(M p c*) is the one that makes N_QD f^c + |c|²
/// change only through losses, pump and spontaneous emission.
pub fn drift_lk(
    c_field: Complex64,
    p_cl: Complex64,
    occupations: [f64; 4],
    delayed_field: Complex64,
    params: &SimulationParameters,
    feedback: bool,
) -> Drift {
    let [f_c, f_v, f_ce, f_ve] = occupations;
    let m = params.m_complex();
    let mut dc = -params.kappa * c_field + Complex64::i() * params.n_qd * m * p_cl;
    if feedback {
        let rot = Complex64::from_polar(1.0, -params.feedback_phase);
        dc += params.kappa * params.feedback_strength * rot * delayed_field;
    }
    let dp = -Complex64::i() * m.conj() * (f_c - f_v) * c_field - params.gamma_pd * p_cl;
    let exchange = 2.0 * (m * p_cl * c_field.conj()).im;
    let [kc, kv, kce, kve] = carrier_kinetics(f_c, f_v, f_ce, f_ve, 1.0, params);
    Drift {
        c_field: dc,
        p_cl: dp,
        f_c: exchange + kc,
        f_v: -exchange + kv,
        f_ce: kce,
        f_ve: kve,
    }
}

/// sqrt(β N_QD f^c (1 − f^v) τ_sp,g⁻¹), in fs^{-1/2}.
pub fn noise_amplitude(f_c: f64, f_v: f64, params: &SimulationParameters) -> Result<f64> {
    let radicand = params.beta * params.n_qd * f_c * (1.0 - f_v) * params.tau_sp_g_inv;
    if radicand < 0.0 || !radicand.is_finite() {
        return Err(Error::InvariantViolation {
            t: f64::NAN,
            what: format!("negative noise radicand {radicand:e} (f_c = {f_c}, f_v = {f_v})"),
        });
    }
    Ok(radicand.sqrt())
}

/// ξ = (g₁ + i g₂)/√(2h): ⟨ξ_n ξ*_m⟩ = δ_nm/h, independent quadratures.
pub fn sample_noise<R: Rng + ?Sized>(rng: &mut R, h: f64) -> Complex64 {
    let g1: f64 = rng.sample(StandardNormal);
    let g2: f64 = rng.sample(StandardNormal);
    Complex64::new(g1, g2) * (FRAC_1_SQRT_2 / h.sqrt())
}

/// Per-realization random stream derived from (master seed, index).
pub fn realization_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone)]
pub struct SemiclassicalState {
    pub c_field: Complex64,
    pub p_cl: Complex64,
    pub f_c: f64,
    pub f_v: f64,
    pub f_ce: f64,
    pub f_ve: f64,
    /// c over [t−τ, t]; front is c(t−τ), back is c(t).
    history: VecDeque<Complex64>,
    rng: ChaCha8Rng,
    t: f64,
}

impl SemiclassicalState {
    /// Dark cavity, full valence levels, zero field history.
    pub fn new(params: &SimulationParameters, h: f64, rng: ChaCha8Rng) -> Result<Self> {
        let len = history_len(params.tau_delay, h)?;
        Ok(Self {
            c_field: Complex64::new(0.0, 0.0),
            p_cl: Complex64::new(0.0, 0.0),
            f_c: 0.0,
            f_v: 1.0,
            f_ce: 0.0,
            f_ve: 1.0,
            history: VecDeque::from(vec![Complex64::new(0.0, 0.0); len]),
            rng,
            t: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn occupations(&self) -> [f64; 4] {
        [self.f_c, self.f_v, self.f_ce, self.f_ve]
    }

    pub fn intensity(&self) -> f64 {
        self.c_field.norm_sqr()
    }

    pub fn history(&self) -> &VecDeque<Complex64> {
        &self.history
    }

    pub fn delayed_field(&self) -> Complex64 {
        self.history[0]
    }

    /// Replaces the present field and its whole past (the last history entry
    /// becomes the present field).
    pub fn set_field_history(&mut self, history: impl IntoIterator<Item = Complex64>) -> Result<()> {
        let v: VecDeque<Complex64> = history.into_iter().collect();
        if v.len() != self.history.len() {
            return Err(Error::HistoryUnderflow {
                len: v.len(),
                needed: self.history.len(),
            });
        }
        self.c_field = *v.back().expect("history is never empty");
        self.history = v;
        Ok(())
    }

    pub fn rotate_phase(&mut self, theta: f64) {
        let r = Complex64::from_polar(1.0, theta);
        self.c_field *= r;
        self.p_cl *= r;
        self.history.iter_mut().for_each(|c| *c *= r);
    }
}

fn history_len(tau: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) {
        return Err(Error::OutOfRange {
            key: "sc_dt",
            value: h,
            reason: "step must be positive",
        });
    }
    let ratio = tau / h;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-9 * ratio.max(1.0) || n < 1.0 {
        return Err(Error::OutOfRange {
            key: "sc_dt",
            value: h,
            reason: "the delay must be a positive integer number of steps",
        });
    }
    Ok(n as usize + 1)
}

/// Euler–Maruyama integrator for one realization.
#[derive(Debug, Clone)]
pub struct SemiclassicalModel {
    pub params: SimulationParameters,
    pub h: f64,
    pub feedback: bool,
    /// Multiplies the noise amplitude; 0 gives the deterministic limit.
    pub noise_scale: f64,
    /// Soft bound on the occupations.
    pub tol: f64,
}

impl SemiclassicalModel {
    pub fn new(params: &SimulationParameters, h: f64, feedback: bool) -> Self {
        Self {
            params: params.clone(),
            h,
            feedback,
            noise_scale: 1.0,
            tol: 1e-6,
        }
    }

    pub fn deterministic(mut self) -> Self {
        self.noise_scale = 0.0;
        self
    }

    pub fn init(&self, rng: ChaCha8Rng) -> Result<SemiclassicalState> {
        SemiclassicalState::new(&self.params, self.h, rng)
    }

    pub fn drift(&self, s: &SemiclassicalState) -> Drift {
        drift_lk(
            s.c_field,
            s.p_cl,
            s.occupations(),
            s.delayed_field(),
            &self.params,
            self.feedback,
        )
    }

    /// Advances by h using the supplied noise sample ξ.
    pub fn step_with_noise(&self, s: &mut SemiclassicalState, xi: Complex64) -> Result<()> {
        let h = self.h;
        let d = self.drift(s);
        let amp = self.noise_scale * noise_amplitude(s.f_c.clamp(0.0, 1.0), s.f_v.clamp(0.0, 1.0), &self.params)?;
        s.c_field += h * d.c_field + amp * xi * h;
        s.p_cl += h * d.p_cl;
        s.f_c += h * d.f_c;
        s.f_v += h * d.f_v;
        s.f_ce += h * d.f_ce;
        s.f_ve += h * d.f_ve;
        s.t += h;
        s.history.pop_front();
        s.history.push_back(s.c_field);
        for (name, v) in [("f_c", s.f_c), ("f_v", s.f_v), ("f_ce", s.f_ce), ("f_ve", s.f_ve)] {
            if !v.is_finite() || v < -self.tol || v > 1.0 + self.tol {
                return Err(Error::InvariantViolation {
                    t: s.t,
                    what: format!("{name} = {v:e} left [0, 1]"),
                });
            }
        }
        if !s.c_field.re.is_finite() || !s.c_field.im.is_finite() {
            return Err(Error::InvariantViolation {
                t: s.t,
                what: "non-finite field".into(),
            });
        }
        Ok(())
    }

    pub fn step(&self, s: &mut SemiclassicalState) -> Result<()> {
        let xi = if self.noise_scale == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            sample_noise(&mut s.rng, self.h)
        };
        self.step_with_noise(s, xi)
    }

    /// Runs `steps` steps, calling `record` after each.
    pub fn run(
        &self,
        s: &mut SemiclassicalState,
        steps: u64,
        mut record: impl FnMut(&SemiclassicalState),
    ) -> Result<()> {
        for _ in 0..steps {
            self.step(s)?;
            record(s);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Estimate {
    pub g2: f64,
    pub stderr: f64,
    pub mean_intensity: f64,
}

/// Time-averaged g²(0) = ⟨I²⟩_t/⟨I⟩_t² of an intensity series after dropping
/// the first `discard` samples, with a moving-block bootstrap standard error.
pub fn g2_time_average(series: &[f64], discard: usize, block_len: usize, seed: u64) -> Result<G2Estimate> {
    const RESAMPLES: usize = 200;
    let kept = series.get(discard..).unwrap_or(&[]);
    if kept.is_empty() {
        return Err(Error::Statistics("no samples left after the discard".into()));
    }
    let ratio = |xs: &mut dyn Iterator<Item = f64>| {
        let (mut s1, mut s2, mut n) = (0.0, 0.0, 0usize);
        for x in xs {
            s1 += x;
            s2 += x * x;
            n += 1;
        }
        let m1 = s1 / n as f64;
        (s2 / n as f64 / (m1 * m1), m1)
    };
    let (g2, mean) = ratio(&mut kept.iter().copied());
    if !(mean > 0.0) {
        return Err(Error::Statistics("zero mean intensity".into()));
    }
    let b = block_len.clamp(1, kept.len());
    let n_blocks = kept.len().div_ceil(b);
    let starts = kept.len() - b + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reps = Vec::with_capacity(RESAMPLES);
    for _ in 0..RESAMPLES {
        let picks: Vec<usize> = (0..n_blocks).map(|_| rng.gen_range(0..starts)).collect();
        let mut it = picks.iter().flat_map(|&s| kept[s..s + b].iter().copied());
        reps.push(ratio(&mut it).0);
    }
    let m = reps.iter().sum::<f64>() / RESAMPLES as f64;
    let var = reps.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (RESAMPLES - 1) as f64;
    Ok(G2Estimate {
        g2,
        stderr: var.sqrt(),
        mean_intensity: mean,
    })
}

/// Settings of the averaged stochastic run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleOptions {
    pub h: f64,
    pub seeds: usize,
    pub master_seed: u64,
    pub discard: f64,
    pub average: f64,
    /// Record every `stride` steps.
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    /// Mean photon number ⟨|c|²⟩ over time and realizations.
    pub n_ph: f64,
    pub g2: f64,
    /// Standard error of the ensemble-mean g², the larger of the
    /// seed-to-seed spread and the combined bootstrap errors.
    pub g2_stderr: f64,
    pub per_seed: Vec<G2Estimate>,
}

/// Runs `opts.seeds` independent realizations in parallel and averages them.
pub fn run_ensemble(model: &SemiclassicalModel, opts: &EnsembleOptions) -> Result<EnsembleResult> {
    if opts.seeds == 0 {
        return Err(Error::OutOfRange {
            key: "sc_seeds",
            value: 0.0,
            reason: "need at least one realization",
        });
    }
    let h = model.h;
    let stride = opts.stride.max(1);
    let discard_steps = (opts.discard / h).round() as u64;
    let average_steps = (opts.average / h).round() as u64;
    let block = ((model.params.tau_delay / h).round() as usize / stride).max(1);
    let per_seed: Vec<G2Estimate> = (0..opts.seeds)
        .into_par_iter()
        .map(|k| -> Result<G2Estimate> {
            let mut s = model.init(realization_rng(opts.master_seed, k as u64))?;
            model.run(&mut s, discard_steps, |_| {})?;
            let mut series = Vec::with_capacity((average_steps / stride as u64) as usize + 1);
            let mut i = 0usize;
            model.run(&mut s, average_steps, |st| {
                i += 1;
                if i.is_multiple_of(stride) {
                    series.push(st.intensity());
                }
            })?;
            g2_time_average(&series, 0, block, opts.master_seed ^ (k as u64).wrapping_mul(0x9E37_79B9))
        })
        .collect::<Result<_>>()?;
    let r = per_seed.len() as f64;
    let g2 = per_seed.iter().map(|e| e.g2).sum::<f64>() / r;
    let n_ph = per_seed.iter().map(|e| e.mean_intensity).sum::<f64>() / r;
    let boot = per_seed.iter().map(|e| e.stderr * e.stderr).sum::<f64>().sqrt() / r;
    let spread = if per_seed.len() > 1 {
        let var = per_seed.iter().map(|e| (e.g2 - g2).powi(2)).sum::<f64>() / (r - 1.0);
        (var / r).sqrt()
    } else {
        0.0
    };
    Ok(EnsembleResult {
        n_ph,
        g2,
        g2_stderr: boot.max(spread),
        per_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> Complex64 {
        Complex64::new(0.0, 0.0)
    }

    #[test]
    fn dark_cavity_drift_is_carriers_only() {
        let p = SimulationParameters {
            tau_p_inv: 1e-4,
            ..SimulationParameters::default()
        };
        let d = drift_lk(z(), z(), [0.2, 0.7, 0.4, 0.5], z(), &p, true);
        assert_eq!((d.c_field, d.p_cl), (z(), z()));
        let k = carrier_kinetics(0.2, 0.7, 0.4, 0.5, 1.0, &p);
        assert_eq!([d.f_c, d.f_v, d.f_ce, d.f_ve], k);
    }

    #[test]
    fn feedback_off_drops_the_delay_term() {
        let p = SimulationParameters::default();
        let c = Complex64::new(0.3, -0.2);
        let pc = Complex64::new(1e-3, 2e-3);
        let d = drift_lk(c, pc, [0.5; 4], Complex64::new(5.0, 5.0), &p, false);
        let expected = -p.kappa * c + Complex64::i() * p.n_qd * p.m_complex() * pc;
        assert!((d.c_field - expected).norm() < 1e-18);
    }

    #[test]
    fn perfect_feedback_cancels_loss() {
        let p = SimulationParameters {
            feedback_strength: 1.0,
            kappa_ext: 0.0,
            ..SimulationParameters::default()
        };
        let c = Complex64::new(0.7, 0.1);
        let d = drift_lk(c, z(), [0.5; 4], c, &p, true);
        assert!(d.c_field.norm() < 1e-20);
    }

    #[test]
    fn inverted_medium_amplifies() {
        let p = SimulationParameters::default();
        let c = Complex64::new(1.0, 0.0);
        // adiabatic polarization for full inversion
        let pc = -Complex64::i() * p.m_complex().conj() * c / p.gamma_pd;
        let d = drift_lk(c, pc, [1.0, 0.0, 0.0, 1.0], z(), &p, false);
        let gain = (d.c_field * c.conj()).re + p.kappa;
        assert!((gain - 0.5 * p.modal_gain()).abs() < 1e-12 * p.modal_gain());
        // the carriers pay for the photons
        let photon_rate = 2.0 * (d.c_field * c.conj()).re + 2.0 * p.kappa;
        let carrier_rate = p.n_qd * (d.f_c + p.tau_sp_g_inv);
        assert!((photon_rate + carrier_rate).abs() < 1e-12 * photon_rate.abs());
    }

    #[test]
    fn noise_amplitude_values() {
        let p = SimulationParameters::default();
        assert_eq!(noise_amplitude(0.0, 0.3, &p).unwrap(), 0.0);
        assert_eq!(noise_amplitude(0.7, 1.0, &p).unwrap(), 0.0);
        assert!((noise_amplitude(1.0, 0.0, &p).unwrap() - 2e-3).abs() < 1e-15);
        assert!(noise_amplitude(-0.5, 0.0, &p).is_err());
    }

    #[test]
    fn noise_moments() {
        let mut rng = realization_rng(7, 0);
        let h = 10.0;
        let n = 1_000_000;
        let (mut sum, mut sq) = (z(), 0.0);
        for _ in 0..n {
            let xi = sample_noise(&mut rng, h);
            sum += xi;
            sq += xi.norm_sqr();
        }
        let sigma = (1.0 / h).sqrt();
        assert!((sum / n as f64).norm() < 4.0 * sigma / (n as f64).sqrt());
        assert!((sq / n as f64 * h - 1.0).abs() < 0.01);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let draw = |s, k| {
            let mut r = realization_rng(s, k);
            (0..8).map(|_| sample_noise(&mut r, 1.0)).collect::<Vec<_>>()
        };
        assert_eq!(draw(3, 0), draw(3, 0));
        assert_ne!(draw(3, 0), draw(3, 1));
        assert_ne!(draw(3, 0), draw(4, 0));
    }

    #[test]
    fn g2_reference_series() {
        let e = g2_time_average(&vec![2.5; 2000], 0, 10, 1).unwrap();
        assert_eq!(e.g2, 1.0);
        assert_eq!(e.stderr, 0.0);
        let alt: Vec<f64> = (0..2000).map(|i| if i % 2 == 0 { 0.0 } else { 3.0 }).collect();
        assert!((g2_time_average(&alt, 0, 10, 1).unwrap().g2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn thermal_samples_give_two() {
        let mut rng = realization_rng(9, 0);
        let series: Vec<f64> = (0..20_000).map(|_| sample_noise(&mut rng, 1.0).norm_sqr()).collect();
        let e = g2_time_average(&series, 0, 1, 2).unwrap();
        assert!((e.g2 - 2.0).abs() < 3.0 * e.stderr, "{e:?}");
    }

    #[test]
    fn g2_is_scale_invariant_and_checks_input() {
        let s: Vec<f64> = (0..3000).map(|i| 1.0 + (i as f64 * 0.01).sin().powi(2)).collect();
        let scaled: Vec<f64> = s.iter().map(|x| 123.0 * x).collect();
        let a = g2_time_average(&s, 100, 50, 1).unwrap();
        let b = g2_time_average(&scaled, 100, 50, 1).unwrap();
        assert!((a.g2 - b.g2).abs() < 1e-12);
        assert!(g2_time_average(&s, 3000, 50, 1).is_err());
        assert!(g2_time_average(&[0.0; 100], 0, 5, 1).is_err());
    }

    #[test]
    fn history_requires_whole_steps() {
        let p = SimulationParameters::default();
        assert_eq!(history_len(p.tau_delay, 10.0).unwrap(), 9001);
        assert!(history_len(p.tau_delay, 7.0).is_err());
        let s = SemiclassicalState::new(&p, 10.0, realization_rng(1, 0)).unwrap();
        assert_eq!(s.history().len(), 9001);
    }

    #[test]
    fn delayed_field_is_exactly_tau_old() {
        let p = SimulationParameters {
            tau_delay: 100.0,
            kappa_ext: 0.5f64.ln().abs() / 100.0,
            ..SimulationParameters::default()
        };
        let model = SemiclassicalModel::new(&p, 10.0, true);
        let mut s = model.init(realization_rng(1, 0)).unwrap();
        let mut fields = vec![s.c_field];
        for _ in 0..30 {
            model.step(&mut s).unwrap();
            fields.push(s.c_field);
        }
        assert_eq!(s.delayed_field(), fields[fields.len() - 11]);
    }

    #[test]
    fn global_phase_rotates_the_trajectory() {
        let p = SimulationParameters {
            tau_p_inv: 3e-4,
            tau_delay: 2000.0,
            kappa_ext: 0.5f64.ln().abs() / 2000.0,
            ..SimulationParameters::default()
        };
        let model = SemiclassicalModel::new(&p, 10.0, true);
        let theta = 0.83;
        let rot = Complex64::from_polar(1.0, theta);
        let mut a = model.init(realization_rng(1, 0)).unwrap();
        let mut noise = realization_rng(5, 0);
        for _ in 0..500 {
            let xi = sample_noise(&mut noise, 10.0);
            model.step_with_noise(&mut a, xi).unwrap();
        }
        let mut b = a.clone();
        b.rotate_phase(theta);
        for _ in 0..3000 {
            let xi = sample_noise(&mut noise, 10.0);
            model.step_with_noise(&mut a, xi).unwrap();
            model.step_with_noise(&mut b, xi * rot).unwrap();
        }
        assert!((a.c_field * rot - b.c_field).norm() <= 1e-12 * a.c_field.norm());
        assert!((a.f_c - b.f_c).abs() < 1e-12);
    }

    #[test]
    fn deterministic_limits() {
        let mut p = SimulationParameters {
            tau_p_inv: 1e-6,
            ..SimulationParameters::default()
        };
        let model = SemiclassicalModel::new(&p, 10.0, false).deterministic();
        let mut s = model.init(realization_rng(1, 0)).unwrap();
        s.c_field = Complex64::new(1.0, 0.0);
        model.run(&mut s, 200_000, |_| {}).unwrap();
        assert!(s.intensity() < 1e-6, "below threshold the field should die out");

        p.tau_p_inv = 1e-3;
        let model = SemiclassicalModel::new(&p, 10.0, false).deterministic();
        let mut s = model.init(realization_rng(1, 0)).unwrap();
        s.c_field = Complex64::new(1.0, 0.0);
        model.run(&mut s, 3_000_000, |_| {}).unwrap();
        assert!(s.intensity() > 10.0);
        assert!(model.drift(&s).norm() < 1e-10, "drift {:e}", model.drift(&s).norm());
    }
}
