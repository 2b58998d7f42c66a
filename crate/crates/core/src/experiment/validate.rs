//! The self-check suite behind `qdlaser validate`.
//!
//! Each check measures one number and compares it with a tolerance; the
//! report lists them all, a failed check never stops the others.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::grid::{Geometry, ModeGrid};
use crate::integrate::{integrate_fixed, linear_propagator_oracle, IntegrationOptions, Rk4};
use crate::layout::{MatField, Scalar, StateLayout, VecField};
use crate::params::{RunConfig, SimulationParameters};
use crate::quantized::{
    random_invariant_state, structure_residual_flat, Mutation, QuantizedObserver, QuantizedRhs, QuantizedState,
};
use crate::semiclassical::{realization_rng, run_ensemble, sample_noise, EnsembleOptions, SemiclassicalModel};

use super::calibrate::{calibrate_free_space, CalibrationSetup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<24} measured {:.3e}  tolerance {:.3e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.tolerance,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        write!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

/// `measured ≤ tolerance`, with NaN counting as a failure.
fn at_most(name: &str, measured: f64, tolerance: f64, detail: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: measured <= tolerance,
        measured,
        tolerance,
        detail,
    }
}

fn failed(name: &str, tolerance: f64, e: impl fmt::Display) -> CheckResult {
    CheckResult {
        name: name.into(),
        passed: false,
        measured: f64::NAN,
        tolerance,
        detail: format!("error: {e}"),
    }
}

/// Runs every check. `mutation` corrupts one term of the quantized
/// right-hand side everywhere it is used, to show the suite notices.
///
/// `on_check` sees each result as soon as it is available.
pub fn run_validate(
    cfg: &RunConfig,
    mutation: Option<Mutation>,
    mut on_check: impl FnMut(&CheckResult),
) -> ValidationReport {
    let seed = cfg.settings.seed;
    let checks: [&dyn Fn() -> CheckResult; 10] = [
        &|| check_structure(seed, mutation),
        &|| check_conservation(seed, mutation),
        &|| check_conservation_drift(&cfg.params, mutation),
        &|| check_oracle(&cfg.params, mutation),
        &|| check_calibration(&cfg.params),
        &|| check_noise_mean(seed),
        &|| check_noise_power(seed),
        &|| check_ornstein_uhlenbeck(seed),
        &|| check_rk4_order(),
        &|| check_determinism(cfg),
    ];
    let mut report = ValidationReport::default();
    for check in checks {
        let r = check();
        on_check(&r);
        report.checks.push(r);
    }
    report
}

/// Parameters with every rate of order one, so that no term of the
/// right-hand side hides below rounding of another.
pub fn unit_scale_params() -> SimulationParameters {
    SimulationParameters {
        n_qd: 3.0,
        beta: 0.2,
        kappa: 0.4,
        kappa_h: 0.3,
        kappa_ext: 0.25,
        gamma_pd: 0.7,
        tau_rel_c_inv: 0.9,
        tau_rel_v_inv: 1.1,
        tau_sp_e_inv: 0.35,
        tau_sp_g_inv: 0.45,
        tau_p_inv: 0.6,
        m_coupling: 0.8,
        ..SimulationParameters::default()
    }
}

fn random_rhs(p: &SimulationParameters, n: usize, rng: &mut ChaCha8Rng, mutation: Option<Mutation>) -> Result<QuantizedRhs> {
    let mut grid = ModeGrid::build(n, 3.0, Geometry::FreeSpace, p)?;
    for g in grid.couplings.iter_mut() {
        *g = Complex64::new(0.0, rng.gen_range(-1.0..1.0));
    }
    let mut rhs = QuantizedRhs::new(p, &grid);
    rhs.set_mutation(mutation);
    Ok(rhs)
}

fn check_structure(seed: u64, mutation: Option<Mutation>) -> CheckResult {
    const NAME: &str = "structure";
    const TOL: f64 = 1e-13;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let n = 2 + trial % 6;
        let mut rhs = match random_rhs(&unit_scale_params(), n, &mut rng, mutation) {
            Ok(r) => r,
            Err(e) => return failed(NAME, TOL, e),
        };
        let y = random_invariant_state(n, &mut rng);
        let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
        rhs.eval(&y, &mut dy);
        worst = worst.max(structure_residual_flat(rhs.layout(), &dy));
    }
    at_most(NAME, worst, TOL, "relative Hermiticity/symmetry residual of d/dt, 50 random states".into())
}

/// Relative residual of d/dt[N(f_c + f_ce) + n_ph + Σ n_qq] for a right-hand
/// side without any loss, pump or spontaneous channel.
fn closed_excitation_residual(p: &SimulationParameters, l: StateLayout, dy: &[Complex64]) -> f64 {
    let n = l.n_q;
    let o = l.mat_offset(MatField::NQQ);
    let parts = [
        p.n_qd * dy[Scalar::FC as usize].re,
        p.n_qd * dy[Scalar::FCE as usize].re,
        dy[Scalar::NPh as usize].re,
    ]
    .into_iter()
    .chain((0..n).map(|q| dy[o + q * n + q].re));
    let (sum, scale) = parts.fold((0.0, 0.0), |(s, a), x| (s + x, a + f64::abs(x)));
    if scale == 0.0 {
        0.0
    } else {
        sum.abs() / scale
    }
}

fn without_losses(p: &SimulationParameters) -> SimulationParameters {
    SimulationParameters {
        kappa_ext: 0.0,
        kappa_h: 0.0,
        tau_sp_e_inv: 0.0,
        tau_sp_g_inv: 0.0,
        tau_p_inv: 0.0,
        ..p.clone()
    }
}

fn check_conservation(seed: u64, mutation: Option<Mutation>) -> CheckResult {
    const NAME: &str = "conservation";
    const TOL: f64 = 1e-13;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let p = without_losses(&unit_scale_params());
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let n = 2 + trial % 5;
        let mut rhs = match random_rhs(&p, n, &mut rng, mutation) {
            Ok(r) => r,
            Err(e) => return failed(NAME, TOL, e),
        };
        let y = random_invariant_state(n, &mut rng);
        let mut dy = vec![Complex64::new(0.0, 0.0); y.len()];
        rhs.eval(&y, &mut dy);
        worst = worst.max(closed_excitation_residual(&p, rhs.layout(), &dy));
    }
    at_most(NAME, worst, TOL, "relative, lossless right-hand side, 100 random states".into())
}

fn total_excitation(p: &SimulationParameters, y: &[Complex64], n: usize) -> f64 {
    let l = StateLayout::new(n);
    let o = l.mat_offset(MatField::NQQ);
    p.n_qd * (y[Scalar::FC as usize].re + y[Scalar::FCE as usize].re)
        + y[Scalar::NPh as usize].re
        + (0..n).map(|q| y[o + q * n + q].re).sum::<f64>()
}

fn check_conservation_drift(params: &SimulationParameters, mutation: Option<Mutation>) -> CheckResult {
    const NAME: &str = "conservation_drift";
    const TOL: f64 = 1e-9;
    let n = 16;
    let p = without_losses(params);
    let grid = match ModeGrid::calibrated(&p, n, 40.0 * p.kappa, Geometry::mirror_for(&p)) {
        Ok((_, g)) => g,
        Err(e) => return failed(NAME, TOL, e),
    };
    // inverted dots and a seeded cavity, so gain and outcoupling both act
    let mut s = QuantizedState::ground(n);
    s.f_c = 0.8;
    s.f_v = 0.2;
    s.n_ph = 10.0;
    let mut y = s.pack();
    let mut rhs = QuantizedRhs::new(&p, &grid);
    rhs.set_mutation(mutation);
    let e0 = total_excitation(&p, &y, n);
    let h = 10.0;
    let mut rk = Rk4::new(y.len());
    let mut next = y.clone();
    for i in 0..1000 {
        if let Err(e) = rk.step(&mut rhs, i as f64 * h, &y, h, &mut next) {
            return failed(NAME, TOL, e);
        }
        std::mem::swap(&mut y, &mut next);
    }
    let e1 = total_excitation(&p, &y, n);
    at_most(NAME, ((e1 - e0) / e0).abs(), TOL, format!("relative change over 10 ps, excitation {e0:.6e}"))
}

/// Generator of the photon subsystem at M = 0 over
/// z = (n_ph, ⟨d†_q c⟩, ⟨d†_q c⟩*, ⟨d†_q d_q′⟩).
///
/// With M = 0 these close among themselves:
///   ṅ_ph = 2 Im Σ_q G*_q n_q0,
///   ṅ_q0 = −(κ_ext − iΔ_q) n_q0 − i G_q n_ph + i Σ_q′ G_q′ n_qq′,
///   ṅ_qq′ = −(2κ_ext − i(Δ_q − Δ_q′)) n_qq′ + i G*_q′ n_q0 − i G_q n*_q′0,
/// and the conjugated amplitudes are carried as variables of their own so
/// the system is linear over ℂ.
pub fn photon_subsystem_generator(p: &SimulationParameters, grid: &ModeGrid) -> DMatrix<Complex64> {
    let n = grid.len();
    let dim = 1 + 2 * n + n * n;
    let i = Complex64::i();
    let a_idx = |q: usize| 1 + q;
    let c_idx = |q: usize| 1 + n + q;
    let m_idx = |q: usize, r: usize| 1 + 2 * n + q * n + r;
    let g = &grid.couplings;
    let d = &grid.detunings;
    let ke = Complex64::new(p.kappa_ext, 0.0);
    let mut a = DMatrix::<Complex64>::zeros(dim, dim);
    for q in 0..n {
        // 2 Im(x) = −i x + i x*
        a[(0, a_idx(q))] += -i * g[q].conj();
        a[(0, c_idx(q))] += i * g[q];

        a[(a_idx(q), a_idx(q))] += -(ke - i * d[q]);
        a[(a_idx(q), 0)] += -i * g[q];
        a[(c_idx(q), c_idx(q))] += -(ke + i * d[q]);
        a[(c_idx(q), 0)] += i * g[q].conj();
        for r in 0..n {
            a[(a_idx(q), m_idx(q, r))] += i * g[r];
            // (n_qr)* = n_rq
            a[(c_idx(q), m_idx(r, q))] += -i * g[r].conj();

            a[(m_idx(q, r), m_idx(q, r))] += -(2.0 * ke - i * (d[q] - d[r]));
            a[(m_idx(q, r), a_idx(q))] += i * g[r].conj();
            a[(m_idx(q, r), c_idx(r))] += -i * g[q];
        }
    }
    a
}

/// Max abs difference between the M = 0 quantized trajectory and the
/// matrix-exponential propagation of its photon subsystem.
pub fn oracle_deviation(
    params: &SimulationParameters,
    n_q: usize,
    lifetimes: f64,
    h: f64,
    mutation: Option<Mutation>,
) -> Result<f64> {
    let mut p = params.clone();
    p.m_coupling = 0.0;
    let (p, grid) = ModeGrid::calibrated(&p, n_q, 40.0 * p.kappa, Geometry::mirror_for(&p))?;
    let t_end = lifetimes / p.kappa;
    let mut s = QuantizedState::ground(n_q);
    s.n_ph = 1.0;
    let mut rhs = QuantizedRhs::new(&p, &grid);
    rhs.set_mutation(mutation);
    let l = rhs.layout();
    let steps = (t_end / h).round() as usize;
    let mut y = s.pack();
    let mut next = y.clone();
    let mut rk = Rk4::new(y.len());
    for k in 0..steps {
        rk.step(&mut rhs, k as f64 * h, &y, h, &mut next)?;
        std::mem::swap(&mut y, &mut next);
    }
    let a = photon_subsystem_generator(&p, &grid);
    let mut z0 = DVector::<Complex64>::zeros(a.nrows());
    z0[0] = Complex64::new(1.0, 0.0);
    let z = linear_propagator_oracle(&a, &z0, steps as f64 * h)?;

    let nq0 = &y[l.vec_range(VecField::NQ0)];
    let nqq = &y[l.mat_range(MatField::NQQ)];
    let mut worst = (z[0] - y[Scalar::NPh as usize]).norm();
    for q in 0..n_q {
        worst = worst.max((z[1 + q] - nq0[q]).norm());
        worst = worst.max((z[1 + n_q + q] - nq0[q].conj()).norm());
    }
    for (k, v) in nqq.iter().enumerate() {
        worst = worst.max((z[1 + 2 * n_q + k] - v).norm());
    }
    Ok(worst)
}

fn check_oracle(params: &SimulationParameters, mutation: Option<Mutation>) -> CheckResult {
    const NAME: &str = "linear_oracle";
    const TOL: f64 = 1e-8;
    match oracle_deviation(params, 8, 5.0, 10.0, mutation) {
        Ok(d) => at_most(NAME, d, TOL, "max abs, M = 0, N_q = 8, mirror grid, 5/κ".into()),
        Err(e) => failed(NAME, TOL, e),
    }
}

fn check_calibration(params: &SimulationParameters) -> CheckResult {
    const NAME: &str = "calibration";
    const TOL: f64 = 0.02;
    match calibrate_free_space(params, &CalibrationSetup::default()) {
        Ok(r) => at_most(
            NAME,
            r.relative_error,
            TOL,
            format!("fitted photon decay {:.5e} /fs vs 2κ = {:.5e} /fs", r.fitted_rate, r.target_rate),
        ),
        Err(e) => failed(NAME, TOL, e),
    }
}

const NOISE_SAMPLES: usize = 1_000_000;
const NOISE_H: f64 = 10.0;

fn noise_samples(seed: u64) -> Vec<Complex64> {
    let mut rng = realization_rng(seed, 0xD1CE);
    (0..NOISE_SAMPLES).map(|_| sample_noise(&mut rng, NOISE_H)).collect()
}

fn check_noise_mean(seed: u64) -> CheckResult {
    let xs = noise_samples(seed);
    let mean = xs.iter().sum::<Complex64>() / NOISE_SAMPLES as f64;
    // in units of the standard error of the mean of √h ξ
    let z = mean.norm() * NOISE_H.sqrt() * (NOISE_SAMPLES as f64).sqrt();
    at_most("noise_mean", z, 4.0, format!("|⟨ξ⟩| in standard errors, {NOISE_SAMPLES} samples"))
}

fn check_noise_power(seed: u64) -> CheckResult {
    let xs = noise_samples(seed);
    let power = xs.iter().map(|x| x.norm_sqr()).sum::<f64>() / NOISE_SAMPLES as f64 * NOISE_H;
    at_most("noise_power", (power - 1.0).abs(), 0.01, format!("⟨|ξ|²⟩h = {power:.5}"))
}

/// Stationary ⟨|c|²⟩ of the linear noisy cavity over `realizations`
/// independent runs, with its standard error. Also returns D/(2κ).
pub fn ornstein_uhlenbeck_variance(seed: u64, realizations: usize, h: f64) -> Result<(f64, f64, f64)> {
    // Fully inverted, blocked dots as a constant noise source with no gain.
    let p = SimulationParameters {
        beta: 1.0,
        n_qd: 1e6,
        tau_sp_g_inv: 1e-9,
        tau_sp_e_inv: 1e-9,
        m_coupling: 0.0,
        tau_p_inv: 0.0,
        ..SimulationParameters::default()
    };
    let model = SemiclassicalModel::new(&p, h, false);
    let diffusion = p.beta * p.n_qd * p.tau_sp_g_inv;
    let expected = diffusion / (2.0 * p.kappa);
    let steps = (6.0 / p.kappa / h).round() as u64;
    let samples: Vec<f64> = (0..realizations)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let mut s = model.init(realization_rng(seed, k as u64))?;
            s.f_c = 1.0;
            s.f_v = 0.0;
            s.f_ce = 0.0;
            s.f_ve = 1.0;
            model.run(&mut s, steps, |_| {})?;
            Ok(s.intensity())
        })
        .collect::<Result<_>>()?;
    let r = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / r;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
    Ok((mean, (var / r).sqrt(), expected))
}

fn check_ornstein_uhlenbeck(seed: u64) -> CheckResult {
    const NAME: &str = "ou_variance";
    const TOL: f64 = 0.05;
    match ornstein_uhlenbeck_variance(seed, 10_000, 10.0) {
        Ok((m, se, expected)) => at_most(
            NAME,
            (m / expected - 1.0).abs(),
            TOL,
            format!("⟨|c|²⟩ = {m:.4} ± {se:.4}, D/(2κ) = {expected:.4}"),
        ),
        Err(e) => failed(NAME, TOL, e),
    }
}

/// Observed global order of RK4 on y′ = λy from errors at h, h/2, h/4.
pub fn rk4_observed_order() -> Result<f64> {
    let lambda = Complex64::new(-0.5, 2.0);
    let t_end = 2.0;
    let exact = (lambda * t_end).exp();
    let error = |h: f64| -> Result<f64> {
        let mut f = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| dy[0] = lambda * y[0];
        let steps = (t_end / h).round() as usize;
        let mut rk = Rk4::new(1);
        let mut y = vec![Complex64::new(1.0, 0.0)];
        let mut next = y.clone();
        for k in 0..steps {
            rk.step(&mut f, k as f64 * h, &y, h, &mut next)?;
            std::mem::swap(&mut y, &mut next);
        }
        Ok((y[0] - exact).norm())
    };
    let e = [error(0.05)?, error(0.025)?, error(0.0125)?];
    let pts: Vec<(f64, f64)> = [0.05f64, 0.025, 0.0125]
        .iter()
        .zip(e)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    Ok(super::transient::least_squares_slope(&pts))
}

fn check_rk4_order() -> CheckResult {
    const NAME: &str = "rk4_order";
    match rk4_observed_order() {
        Ok(order) => at_most(NAME, (order - 4.0).abs(), 0.2, format!("observed order {order:.3}")),
        Err(e) => failed(NAME, 0.2, e),
    }
}

/// SHA-256 over the bit patterns of a short quantized run and a short
/// stochastic ensemble, both seeded from the configuration.
pub fn short_run_digest(cfg: &RunConfig) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut p = cfg.params.clone();
    p.tau_p_inv = p.tau_p_inv.max(1e-4);
    let (pq, grid) = ModeGrid::calibrated(&p, 8, cfg.settings.bandwidth_factor * p.kappa, Geometry::mirror_for(&p))?;
    let mut rhs = QuantizedRhs::new(&pq, &grid);
    let mut obs = QuantizedObserver::new(&pq, &grid);
    let opts = IntegrationOptions {
        h: cfg.settings.dt,
        t_max: 20_000.0,
        eps_ss: 1e-6,
        window: 10.0 * cfg.settings.dt,
        stride: 1,
        tol: 1e-6,
    };
    let (y, _) = integrate_fixed(&mut rhs, &QuantizedState::ground(8).pack(), &opts, |t, y| obs.record(t, y))?;
    for z in y {
        hasher.update(z.re.to_bits().to_le_bytes());
        hasher.update(z.im.to_bits().to_le_bytes());
    }
    let model = SemiclassicalModel::new(&p, cfg.settings.sc_dt, true);
    let r = run_ensemble(
        &model,
        &EnsembleOptions {
            h: cfg.settings.sc_dt,
            seeds: 3,
            master_seed: cfg.settings.seed,
            discard: p.tau_delay,
            average: 2.0 * p.tau_delay,
            stride: 1,
        },
    )?;
    for x in [r.n_ph, r.g2, r.g2_stderr] {
        hasher.update(x.to_bits().to_le_bytes());
    }
    Ok(format!("{:x}", hasher.finalize()))
}

fn check_determinism(cfg: &RunConfig) -> CheckResult {
    const NAME: &str = "determinism";
    match (short_run_digest(cfg), short_run_digest(cfg)) {
        (Ok(a), Ok(b)) => CheckResult {
            name: NAME.into(),
            passed: a == b,
            measured: if a == b { 0.0 } else { 1.0 },
            tolerance: 0.0,
            detail: format!("digest {}", &a[..16]),
        },
        (Err(e), _) | (_, Err(e)) => failed(NAME, 0.0, e),
    }
}
