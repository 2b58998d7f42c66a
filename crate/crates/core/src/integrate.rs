//! Fixed-step integrators and steady-state detection.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantized::{ObservableRecord, QuantizedRhs};
use crate::semiclassical::{SemiclassicalModel, SemiclassicalState};

/// Anything that can fill `dy` with dy/dt at (t, y).
pub trait OdeRhs {
    fn eval(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

impl<F> OdeRhs for F
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    fn eval(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self(t, y, dy)
    }
}

impl OdeRhs for QuantizedRhs {
    fn eval(&mut self, _t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        QuantizedRhs::eval(self, y, dy)
    }
}

/// Classical four-stage Runge–Kutta with preallocated stage buffers.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

fn all_finite(v: &[Complex64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); dim];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// Writes y(t + h) into `out`. `out` must not alias `y`.
    pub fn step<R: OdeRhs + ?Sized>(
        &mut self,
        rhs: &mut R,
        t: f64,
        y: &[Complex64],
        h: f64,
        out: &mut [Complex64],
    ) -> Result<()> {
        let n = y.len();
        assert_eq!(self.k1.len(), n, "stepper dimension mismatch");
        assert_eq!(out.len(), n);
        let half = 0.5 * h;

        rhs.eval(t, y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + half * self.k1[i];
        }
        rhs.eval(t + half, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + half * self.k2[i];
        }
        rhs.eval(t + half, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        rhs.eval(t + h, &self.tmp, &mut self.k4);

        let sixth = h / 6.0;
        for i in 0..n {
            out[i] = y[i] + sixth * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
        if !all_finite(&self.k1) || !all_finite(&self.k4) || !all_finite(out) {
            return Err(Error::InvariantViolation {
                t,
                what: "non-finite derivative".into(),
            });
        }
        Ok(())
    }
}

/// One allocating RK4 step.
pub fn rk4_step<R: OdeRhs + ?Sized>(rhs: &mut R, y: &[Complex64], t: f64, h: f64) -> Result<Vec<Complex64>> {
    let mut stepper = Rk4::new(y.len());
    let mut out = vec![Complex64::new(0.0, 0.0); y.len()];
    stepper.step(rhs, t, y, h, &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub h: f64,
    pub t_max: f64,
    pub eps_ss: f64,
    pub window: f64,
    pub stride: usize,
    /// Soft bound for occupations and the photon number.
    pub tol: f64,
}

impl IntegrationOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) {
            return Err(Error::OutOfRange {
                key: "dt",
                value: self.h,
                reason: "step must be positive",
            });
        }
        if !(self.window >= 10.0 * self.h) {
            return Err(Error::OutOfRange {
                key: "steady_window",
                value: self.window,
                reason: "window must span at least 10 steps",
            });
        }
        if !(self.eps_ss > 0.0) {
            return Err(Error::OutOfRange {
                key: "steady_eps",
                value: self.eps_ss,
                reason: "must be positive",
            });
        }
        if !(self.t_max > 0.0) {
            return Err(Error::OutOfRange {
                key: "t_max",
                value: self.t_max,
                reason: "must be positive",
            });
        }
        Ok(())
    }

    fn effective_stride(&self) -> usize {
        let window_steps = (self.window / self.h).floor() as usize;
        self.stride.clamp(1, (window_steps / 10).max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    SteadyState,
    HorizonReached,
    InvariantViolation,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::SteadyState => "steady_state",
            Termination::HorizonReached => "horizon",
            Termination::InvariantViolation => "invariant_violation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<ObservableRecord>,
    pub termination: Termination,
    /// Why the run stopped early, with the offending record.
    pub diagnostic: Option<String>,
}

impl Trace {
    pub fn last(&self) -> Option<&ObservableRecord> {
        self.records.last()
    }
}

impl ObservableRecord {
    /// Describes the first soft-bound violation, if any.
    pub fn violation(&self, tol: f64) -> Option<String> {
        let occ = [
            ("f_c", self.f_c),
            ("f_v", self.f_v),
            ("f_ce", self.f_ce),
            ("f_ve", self.f_ve),
        ];
        for (name, v) in occ {
            if !v.is_finite() || v < -tol || v > 1.0 + tol {
                return Some(format!("{name} = {v:e} outside [0, 1] (tol {tol:e})"));
            }
        }
        if !self.n_ph.is_finite() || self.n_ph < -tol {
            return Some(format!("n_ph = {:e} is negative (tol {tol:e})", self.n_ph));
        }
        None
    }
}

/// Sliding-window steady-state test on (n_ph, g²).
///
/// Fires once the window is full and both observables vary by less than
/// `eps` relative to the largest magnitude seen so far on the trajectory.
/// An undefined g² over the whole window imposes no condition; a mix of
/// defined and undefined values blocks detection.
#[derive(Debug, Clone)]
pub struct SteadyDetector {
    eps: f64,
    window: f64,
    samples: VecDeque<(f64, f64, Option<f64>)>,
    n_scale: f64,
    g2_scale: f64,
    t_start: Option<f64>,
}

impl SteadyDetector {
    pub fn new(eps: f64, window: f64) -> Self {
        Self {
            eps,
            window,
            samples: VecDeque::new(),
            n_scale: 0.0,
            g2_scale: 0.0,
            t_start: None,
        }
    }

    pub fn push(&mut self, t: f64, n: f64, g2: Option<f64>) -> bool {
        let t0 = *self.t_start.get_or_insert(t);
        self.n_scale = self.n_scale.max(n.abs());
        if let Some(g) = g2 {
            self.g2_scale = self.g2_scale.max(g.abs());
        }
        self.samples.push_back((t, n, g2));
        while let Some(&(ts, _, _)) = self.samples.front() {
            if t - ts > self.window * (1.0 + 1e-12) {
                self.samples.pop_front();
            } else {
                break;
            }
        }
        if t - t0 < self.window * (1.0 - 1e-12) {
            return false;
        }
        let (mut nmin, mut nmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut gmin, mut gmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut defined = 0usize;
        for &(_, n, g) in &self.samples {
            nmin = nmin.min(n);
            nmax = nmax.max(n);
            if let Some(g) = g {
                defined += 1;
                gmin = gmin.min(g);
                gmax = gmax.max(g);
            }
        }
        let n_ok = if self.n_scale == 0.0 {
            nmax == nmin
        } else {
            (nmax - nmin) <= self.eps * self.n_scale
        };
        let g_ok = match defined {
            0 => true,
            d if d == self.samples.len() => (gmax - gmin) <= self.eps * self.g2_scale.max(1e-300),
            _ => false,
        };
        n_ok && g_ok
    }
}

/// Integrates until (n_ph, g²) are stationary over the detection window or
/// the horizon is reached. `observer` turns (t, y) into a record; records are
/// kept every `stride` steps (clamped so that a window holds ≥ 10 of them).
pub fn integrate_to_steady<R, O>(
    rhs: &mut R,
    y0: &[Complex64],
    opts: &IntegrationOptions,
    mut observer: O,
) -> Result<(Vec<Complex64>, Trace)>
where
    R: OdeRhs + ?Sized,
    O: FnMut(f64, &[Complex64]) -> ObservableRecord,
{
    run(rhs, y0, opts, &mut observer, true)
}

/// Like [`integrate_to_steady`] but always runs to the horizon (time transients).
pub fn integrate_fixed<R, O>(
    rhs: &mut R,
    y0: &[Complex64],
    opts: &IntegrationOptions,
    mut observer: O,
) -> Result<(Vec<Complex64>, Trace)>
where
    R: OdeRhs + ?Sized,
    O: FnMut(f64, &[Complex64]) -> ObservableRecord,
{
    run(rhs, y0, opts, &mut observer, false)
}

fn run<R, O>(
    rhs: &mut R,
    y0: &[Complex64],
    opts: &IntegrationOptions,
    observer: &mut O,
    detect: bool,
) -> Result<(Vec<Complex64>, Trace)>
where
    R: OdeRhs + ?Sized,
    O: FnMut(f64, &[Complex64]) -> ObservableRecord,
{
    opts.validate()?;
    let stride = opts.effective_stride();
    let total_steps = (opts.t_max / opts.h).round() as u64;
    let mut stepper = Rk4::new(y0.len());
    let mut y = y0.to_vec();
    let mut next = y.clone();
    let mut detector = SteadyDetector::new(opts.eps_ss, opts.window);
    let mut records = Vec::new();

    let mut observe = |step: u64, y: &[Complex64], records: &mut Vec<ObservableRecord>| {
        let rec = observer(step as f64 * opts.h, y);
        records.push(rec);
        rec
    };

    let first = observe(0, &y, &mut records);
    if let Some(what) = first.violation(opts.tol) {
        return Ok(violation_trace(y, records, what));
    }
    detector.push(first.t, first.n_ph, first.g2);

    for step in 1..=total_steps {
        let t = (step - 1) as f64 * opts.h;
        if let Err(e) = stepper.step(rhs, t, &y, opts.h, &mut next) {
            return Ok(violation_trace(y, records, e.to_string()));
        }
        std::mem::swap(&mut y, &mut next);
        if step % stride as u64 == 0 || step == total_steps {
            let rec = observe(step, &y, &mut records);
            if let Some(what) = rec.violation(opts.tol) {
                return Ok(violation_trace(y, records, what));
            }
            if detector.push(rec.t, rec.n_ph, rec.g2) && detect {
                return Ok((
                    y,
                    Trace {
                        records,
                        termination: Termination::SteadyState,
                        diagnostic: None,
                    },
                ));
            }
        }
    }
    Ok((
        y,
        Trace {
            records,
            termination: Termination::HorizonReached,
            diagnostic: None,
        },
    ))
}

fn violation_trace(y: Vec<Complex64>, records: Vec<ObservableRecord>, what: String) -> (Vec<Complex64>, Trace) {
    let last = records
        .last()
        .map(|r| format!("{r:?}"))
        .unwrap_or_default();
    (
        y,
        Trace {
            records,
            termination: Termination::InvariantViolation,
            diagnostic: Some(format!("{what}; last record: {last}")),
        },
    )
}

/// One Euler–Maruyama step of the stochastic delay model: drift evaluated with
/// the field one delay ago, noise added to the field only, history advanced
/// by one slot.
pub fn euler_maruyama_delay_step(model: &SemiclassicalModel, state: &mut SemiclassicalState) -> Result<()> {
    let needed = (model.params.tau_delay / model.h).round() as usize + 1;
    if state.history().len() < needed {
        return Err(Error::HistoryUnderflow {
            len: state.history().len(),
            needed,
        });
    }
    model.step(state)
}

/// Matrix exponential by scaling and squaring with a diagonal Padé
/// approximant of degree 3, 5, 7, 9 or 13 chosen from the 1-norm.
pub fn expm(a: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    const THETA: [(usize, f64); 4] = [
        (3, 1.495_585_217_958_292e-2),
        (5, 2.539_398_330_063_230e-1),
        (7, 9.504_178_996_162_932e-1),
        (9, 2.097_847_961_257_068),
    ];
    const THETA_13: f64 = 5.371_920_351_148_152;
    if !a.is_square() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::Statistics("non-finite matrix in exponential".into()));
    }
    for (m, theta) in THETA {
        if norm <= theta {
            return pade(a, m);
        }
    }
    let s = ((norm / THETA_13).log2().ceil()).max(0.0) as i32;
    let scaled = a.scale(0.5f64.powi(s));
    let mut r = pade(&scaled, 13)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

fn one_norm(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade_coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &[120.0, 60.0, 12.0, 1.0],
        5 => &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0],
        7 => &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0],
        9 => &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
        _ => &[
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ],
    }
}

fn pade(a: &DMatrix<Complex64>, m: usize) -> Result<DMatrix<Complex64>> {
    let n = a.nrows();
    let b = pade_coefficients(m);
    let id = DMatrix::<Complex64>::identity(n, n);
    let a2 = a * a;
    let (u, v) = if m == 13 {
        let a4 = &a2 * &a2;
        let a6 = &a4 * &a2;
        let c = |k: usize| Complex64::new(b[k], 0.0);
        let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
            + a6.scale(b[7])
            + a4.scale(b[5])
            + a2.scale(b[3])
            + &id * c(1);
        let u = a * u_inner;
        let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
            + a6.scale(b[6])
            + a4.scale(b[4])
            + a2.scale(b[2])
            + &id * c(0);
        (u, v)
    } else {
        // even powers A^0, A^2, ..., A^{m-1}
        let mut powers = vec![id.clone(), a2.clone()];
        while powers.len() < m.div_ceil(2) {
            let next = powers.last().unwrap() * &a2;
            powers.push(next);
        }
        let mut u_inner = DMatrix::<Complex64>::zeros(n, n);
        let mut v = DMatrix::<Complex64>::zeros(n, n);
        for (j, pw) in powers.iter().enumerate() {
            u_inner += pw.scale(b[2 * j + 1]);
            v += pw.scale(b[2 * j]);
        }
        (a * u_inner, v)
    };
    let p = &v + &u;
    let q = &v - &u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Statistics("singular Padé denominator".into()))
}

/// y(t) = exp(A t) y0 for a linear system y′ = A y.
pub fn linear_propagator_oracle(a: &DMatrix<Complex64>, y0: &DVector<Complex64>, t: f64) -> Result<DVector<Complex64>> {
    if y0.len() != a.nrows() {
        return Err(Error::Dimension {
            expected: a.nrows(),
            got: y0.len(),
        });
    }
    Ok(expm(&a.scale(t))? * y0)
}
