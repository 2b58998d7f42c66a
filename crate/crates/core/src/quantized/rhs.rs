//! Right-hand side of the correlation-expansion equations of motion.
//!
//! Conventions: every expectation value conserves the photon + excitation
//! number, so no optical frequency appears; only detunings Δ_q = ω_q − ω₀.
//! The QD transition is resonant with the cavity (Δ^{cv}_0 = 0).
//! Couplings are kept fully complex; the physical choice M = −M*, G* = −G is
//! made by the caller through [`SimulationParameters`] and [`ModeGrid`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::ModeGrid;
use crate::layout::{DerivedRates, MatField, Scalar, StateLayout, VecField};
use crate::params::SimulationParameters;
use crate::quantized::state::QuantizedState;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[inline(always)]
fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Carrier scattering into/out of the ground levels.
///
/// R_v = f^v(1−f^{v,e})τ_rel,v⁻¹, R_c = (1−f^c)f^{c,e}τ_rel,c⁻¹.
pub fn scattering_rates(f_c: f64, f_v: f64, f_ce: f64, f_ve: f64, p: &SimulationParameters) -> (f64, f64) {
    let r_v = f_v * (1.0 - f_ve) * p.tau_rel_v_inv;
    let r_c = (1.0 - f_c) * f_ce * p.tau_rel_c_inv;
    (r_v, r_c)
}

/// Time derivatives of the four carrier occupations that do not involve the
/// light field: ground-state spontaneous emission scaled by `sp_factor`,
/// excited-state spontaneous emission, relaxation and the pump exchange.
///
/// Returned in the order (ḟ^c, ḟ^v, ḟ^{c,e}, ḟ^{v,e}).
pub(crate) fn carrier_kinetics(
    f_c: f64,
    f_v: f64,
    f_ce: f64,
    f_ve: f64,
    sp_factor: f64,
    p: &SimulationParameters,
) -> [f64; 4] {
    let (r_v, r_c) = scattering_rates(f_c, f_v, f_ce, f_ve, p);
    let spont = sp_factor * f_c * (1.0 - f_v) * p.tau_sp_g_inv;
    let pump = p.tau_p_inv * (f_ve - f_ce);
    let spont_e = (1.0 - f_ve) * f_ce * p.tau_sp_e_inv;
    [
        -spont + r_c,
        spont - r_v,
        pump - spont_e - r_c,
        -pump + spont_e + r_v,
    ]
}

/// Evaluator for d/dt of the packed state. Holds the coupling tables and the
/// scratch vectors for the mode contractions, so repeated evaluation does
/// not allocate.
#[derive(Debug, Clone)]
pub struct QuantizedRhs {
    params: SimulationParameters,
    rates: DerivedRates,
    layout: StateLayout,
    m: Complex64,
    g: Vec<Complex64>,
    det: Vec<f64>,
    row_g_nqq: Vec<Complex64>,
    row_g_fcqq: Vec<Complex64>,
    row_g_fvqq: Vec<Complex64>,
    row_g_kqq: Vec<Complex64>,
    row_gs_kup: Vec<Complex64>,
    row_g_p3qq: Vec<Complex64>,
    row_gs_p3qqp: Vec<Complex64>,
    col_gs_p3qq: Vec<Complex64>,
    mutation: Option<Mutation>,
}

/// Deliberate sign errors, for checking that the invariant checks catch them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Flips the sign of the cavity → external-mode transfer in ∂t n_ph.
    PhotonTransferSign,
    /// Flips the sign of the stimulated term in ∂t f^c.
    CarrierGainSign,
}

impl QuantizedRhs {
    pub fn new(params: &SimulationParameters, grid: &ModeGrid) -> Self {
        let n = grid.len();
        let z = vec![ZERO; n];
        Self {
            params: params.clone(),
            rates: DerivedRates::new(params),
            layout: StateLayout::new(n),
            m: params.m_complex(),
            g: grid.couplings.clone(),
            det: grid.detunings.clone(),
            row_g_nqq: z.clone(),
            row_g_fcqq: z.clone(),
            row_g_fvqq: z.clone(),
            row_g_kqq: z.clone(),
            row_gs_kup: z.clone(),
            row_g_p3qq: z.clone(),
            row_gs_p3qqp: z.clone(),
            col_gs_p3qq: z,
            mutation: None,
        }
    }

    /// Replaces the light–matter coupling (used by mutation tests and for
    /// complex-phase experiments).
    pub fn set_m(&mut self, m: Complex64) {
        self.m = m;
    }

    pub fn set_mutation(&mut self, mutation: Option<Mutation>) {
        self.mutation = mutation;
    }

    pub fn layout(&self) -> StateLayout {
        self.layout
    }

    pub fn params(&self) -> &SimulationParameters {
        &self.params
    }

    pub fn couplings(&self) -> &[Complex64] {
        &self.g
    }

    pub fn dim(&self) -> usize {
        self.layout.len()
    }

    pub fn eval(&mut self, y: &[Complex64], dy: &mut [Complex64]) {
        assert_eq!(y.len(), self.layout.len(), "state length does not match the grid");
        assert_eq!(dy.len(), y.len());
        let n = self.layout.n_q;
        let l = self.layout;
        let p = &self.params;
        let nqd = p.n_qd;
        let m = self.m;
        let ms = m.conj();
        let gam = p.gamma_pd;
        let ke = p.kappa_ext;
        let kh = p.kappa_h;
        let ge = self.rates.gamma_ext_pd;
        let g2e = self.rates.gamma_2ext_pd;

        let sc = |s: Scalar| y[s as usize];
        let fc = sc(Scalar::FC).re;
        let fv = sc(Scalar::FV).re;
        let fce = sc(Scalar::FCE).re;
        let fve = sc(Scalar::FVE).re;
        let nph = sc(Scalar::NPh).re;
        let fcph = sc(Scalar::FCPh).re;
        let fvph = sc(Scalar::FVPh).re;
        let kph = sc(Scalar::KPh).re;
        let p1 = sc(Scalar::P1);
        let p3 = sc(Scalar::P3);

        let v = |f: VecField| &y[l.vec_range(f)];
        let nq0 = v(VecField::NQ0);
        let p1q = v(VecField::P1Q);
        let fcq = v(VecField::FCQ);
        let fvq = v(VecField::FVQ);
        let kq = v(VecField::KQ);
        let pq3 = v(VecField::PQ3);
        let p3q = v(VecField::P3Q);

        let mm = |f: MatField| &y[l.mat_range(f)];
        let nqq = mm(MatField::NQQ);
        let fcqq = mm(MatField::FCQQ);
        let fvqq = mm(MatField::FVQQ);
        let kqq = mm(MatField::KQQ);
        let kup = mm(MatField::KUp);
        let p3qq = mm(MatField::P3QQ);
        let p3qqp = mm(MatField::P3QQP);

        let g = &self.g;
        let det = &self.det;

        // Single-index contractions, ascending q.
        let mut s_gs_nq0 = ZERO;
        let mut s_gs_p1q = ZERO;
        let mut s_gs_fcq = ZERO;
        let mut s_gs_fvq = ZERO;
        let mut s_gs_kq = ZERO;
        let mut s_g_p3q = ZERO;
        let mut s_gs_pq3 = ZERO;
        for q in 0..n {
            let gs = g[q].conj();
            s_gs_nq0 += gs * nq0[q];
            s_gs_p1q += gs * p1q[q];
            s_gs_fcq += gs * fcq[q];
            s_gs_fvq += gs * fvq[q];
            s_gs_kq += gs * kq[q];
            s_g_p3q += g[q] * p3q[q];
            s_gs_pq3 += gs * pq3[q];
        }

        // Row contractions Σ_q′ G_q′ X[q, q′] and the column sum Σ_q′ G*_q′ p3qq[q′, q].
        self.col_gs_p3qq.iter_mut().for_each(|x| *x = ZERO);
        for a in 0..n {
            let row = a * n..(a + 1) * n;
            let (mut r_n, mut r_fc, mut r_fv, mut r_k, mut r_kup, mut r_p3, mut r_p3p) =
                (ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO);
            let nqq_r = &nqq[row.clone()];
            let fcqq_r = &fcqq[row.clone()];
            let fvqq_r = &fvqq[row.clone()];
            let kqq_r = &kqq[row.clone()];
            let kup_r = &kup[row.clone()];
            let p3qq_r = &p3qq[row.clone()];
            let p3qqp_r = &p3qqp[row];
            let gsa = g[a].conj();
            for b in 0..n {
                let gb = g[b];
                let gsb = gb.conj();
                r_n += gb * nqq_r[b];
                r_fc += gb * fcqq_r[b];
                r_fv += gb * fvqq_r[b];
                r_k += gb * kqq_r[b];
                r_kup += gsb * kup_r[b];
                r_p3 += gb * p3qq_r[b];
                r_p3p += gsb * p3qqp_r[b];
                self.col_gs_p3qq[b] += gsa * p3qq_r[b];
            }
            self.row_g_nqq[a] = r_n;
            self.row_g_fcqq[a] = r_fc;
            self.row_g_fvqq[a] = r_fv;
            self.row_g_kqq[a] = r_k;
            self.row_gs_kup[a] = r_kup;
            self.row_g_p3qq[a] = r_p3;
            self.row_gs_p3qqp[a] = r_p3p;
        }

        // Scalars.
        let im_mp1 = (m * p1).im;
        let [dfc, dfv, dfce, dfve] = carrier_kinetics(fc, fv, fce, fve, 1.0 - p.beta, p);
        let (transfer_sign, gain_sign) = match self.mutation {
            None => (1.0, 1.0),
            Some(Mutation::PhotonTransferSign) => (-1.0, 1.0),
            Some(Mutation::CarrierGainSign) => (1.0, -1.0),
        };
        dy[Scalar::NPh as usize] = c(-2.0 * im_mp1 * nqd + transfer_sign * 2.0 * s_gs_nq0.im);
        dy[Scalar::FV as usize] = c(-2.0 * im_mp1 + dfv);
        dy[Scalar::FC as usize] = c(gain_sign * 2.0 * im_mp1 + dfc);
        dy[Scalar::FVE as usize] = c(dfve);
        dy[Scalar::FCE as usize] = c(dfce);

        let inv = fc - fv;
        dy[Scalar::P1 as usize] = -gam * p1
            - I * ms * (fc * (1.0 - fv) + fcph - fvph + inv * nph)
            - I * s_gs_p1q;
        dy[Scalar::FCPh as usize] =
            c((2.0 * m * p3 + 2.0 * m * p1 * (nph + fc)).im + 2.0 * s_gs_fcq.im);
        dy[Scalar::FVPh as usize] =
            c(-(2.0 * m * p3 + 2.0 * m * p1 * (nph + (1.0 - fv))).im + 2.0 * s_gs_fvq.im);
        dy[Scalar::KPh as usize] = c(-4.0 * (m * p3).im * nqd + 4.0 * s_gs_kq.im);
        dy[Scalar::P3 as usize] = -gam * p3 + 2.0 * I * m * fc * fvph
            - I * ms * (inv * kph + 2.0 * fcph * ((1.0 - fv) + nph) - 2.0 * fvph * nph)
            - 2.0 * I * p1 * (m * p1 - ms * p1.conj())
            + I * s_g_p3q
            - 2.0 * I * s_gs_pq3;

        // q-vectors.
        let p1c = p1.conj();
        let o = |f: VecField| l.vec_offset(f);
        let (o_nq0, o_p1q, o_fcq, o_fvq, o_kq, o_pq3, o_p3q) = (
            o(VecField::NQ0),
            o(VecField::P1Q),
            o(VecField::FCQ),
            o(VecField::FVQ),
            o(VecField::KQ),
            o(VecField::PQ3),
            o(VecField::P3Q),
        );
        for q in 0..n {
            let gq = g[q];
            let gsq = gq.conj();
            let d = det[q];
            let damp_ext = c(ke) - I * d;
            let damp_pd = c(ge) - I * d;

            dy[o_nq0 + q] = -damp_ext * nq0[q] + I * m * p1q[q] * nqd - I * gq * nph
                + I * self.row_g_nqq[q];

            dy[o_p1q + q] = -damp_pd * p1q[q]
                - I * ms * (inv * nq0[q] + fcq[q] - fvq[q])
                - I * gq * p1;

            dy[o_fcq + q] = -damp_ext * fcq[q]
                - I * m * (p1q[q] * nph + pq3[q] + p1q[q] * fc)
                + I * ms * (p3q[q].conj() + p1c * nq0[q])
                - I * gq * fcph
                + I * self.row_g_fcqq[q];

            dy[o_fvq + q] = -damp_ext * fvq[q]
                + I * m * (p1q[q] * (1.0 - fv + nph) + pq3[q])
                - I * ms * (p1c * nq0[q] + p3q[q].conj())
                - I * gq * fvph
                + I * self.row_g_fvqq[q];

            dy[o_kq + q] = -damp_ext * kq[q]
                + I * (2.0 * m * pq3[q] - ms * p3q[q].conj()) * nqd
                + 2.0 * I * self.row_g_kqq[q]
                - I * self.row_gs_kup[q]
                - I * gq * kph;

            dy[o_pq3 + q] = -damp_pd * pq3[q]
                - (2.0 * I * m * p1 - I * ms * p1c) * p1q[q]
                - I * ms * (fcq[q] * (1.0 + nph) - fvq[q] * nph - (fvph - fcph) * nq0[q])
                + I * self.row_g_p3qq[q]
                - I * self.row_gs_p3qqp[q]
                - I * gq * p3;

            dy[o_p3q + q] = -(c(ge) + I * d) * p3q[q]
                - 2.0 * I * ms * fcq[q].conj() * (1.0 + nph)
                + 2.0 * I * ms * (fvq[q].conj() * nph + p1q[q].conj() * p1)
                + I * gsq * p3
                - 2.0 * I * self.col_gs_p3qq[q];
        }

        // (q, q′)-matrices.
        let om = |f: MatField| l.mat_offset(f);
        let (o_nqq, o_fcqq, o_fvqq, o_kqq, o_kup, o_p3qq, o_p3qqp) = (
            om(MatField::NQQ),
            om(MatField::FCQQ),
            om(MatField::FVQQ),
            om(MatField::KQQ),
            om(MatField::KUp),
            om(MatField::P3QQ),
            om(MatField::P3QQP),
        );
        let k2 = 2.0 * ke;
        let k2h = 2.0 * ke + 2.0 * kh;
        let gp3 = g2e + kh;
        let nq1 = 1.0 + nph;
        for a in 0..n {
            let ga = g[a];
            let da = det[a];
            let nq0a = nq0[a];
            let p1qa = p1q[a];
            let fcqa = fcq[a];
            let fvqa = fvq[a];
            let kqa = kq[a];
            let pq3a = pq3[a];
            for b in 0..n {
                let ab = a * n + b;
                let ba = b * n + a;
                let gb = g[b];
                let gsb = gb.conj();
                let dd = da - det[b];
                let ds = da + det[b];
                let nq0b_c = nq0[b].conj();
                let p1qb_c = p1q[b].conj();
                let p3_ab = p3qq[ab];
                let p3_ba_c = p3qq[ba].conj();

                dy[o_nqq + ab] =
                    -(c(k2) - I * dd) * nqq[ab] + I * gsb * nq0a - I * ga * nq0b_c;

                dy[o_kqq + ab] = -(c(k2h) - I * dd) * kqq[ab]
                    + I * (m * p3_ab - ms * p3_ba_c) * nqd
                    - I * ga * kq[b].conj()
                    + I * gsb * kqa;

                dy[o_kup + ab] = -(c(k2h) - I * ds) * kup[ab] + 2.0 * I * m * p3qqp[ab] * nqd
                    - I * gb * kqa
                    - I * ga * kq[b];

                dy[o_p3qq + ab] = -(c(gp3) - I * dd) * p3_ab
                    - I * ms * (fcqq[ab] * nq1 + inv * kqq[ab])
                    - I * ms
                        * ((fcq[b].conj() - fvq[b].conj()) * nq0a - fvqq[ab] * nph - p1qb_c * p1qa)
                    - I * ga * p3q[b]
                    + I * gsb * pq3a;

                dy[o_p3qqp + ab] = -(c(gp3) - I * ds) * p3qqp[ab]
                    - I * ms * (inv * kup[ab] + inv * nq0[b] * nq0a)
                    - I * ms * ((fcq[b] - fvq[b]) * nq0a + (fcqa - fvqa) * nq0[b])
                    - 2.0 * I * m * p1qa * p1q[b]
                    - I * gb * pq3a
                    - I * ga * pq3[b];

                let src = p3_ab + p1qa * nq0b_c;
                let src_c = p3_ba_c + p1qb_c * nq0a;
                dy[o_fvqq + ab] = -(c(k2) - I * dd) * fvqq[ab] + I * m * src - I * ms * src_c
                    - I * ga * fvq[b].conj()
                    + I * gsb * fvqa;
                dy[o_fcqq + ab] = -(c(k2) - I * dd) * fcqq[ab] - I * m * src + I * ms * src_c
                    - I * ga * fcq[b].conj()
                    + I * gsb * fcqa;
            }
        }
    }
}

/// Convenience wrapper around [`QuantizedRhs`] for one-off evaluation on a
/// structured state.
pub fn rhs_quantized(
    state: &QuantizedState,
    params: &SimulationParameters,
    grid: &ModeGrid,
) -> Result<QuantizedState> {
    if state.n_q() != grid.len() {
        return Err(Error::Dimension {
            expected: grid.len(),
            got: state.n_q(),
        });
    }
    let mut rhs = QuantizedRhs::new(params, grid);
    let y = state.pack();
    let mut dy = vec![ZERO; y.len()];
    rhs.eval(&y, &mut dy);
    QuantizedState::unpack(rhs.layout(), &dy)
}

/// Initial condition: cold cavity, full valence band.
pub fn init_state(_params: &SimulationParameters, grid: &ModeGrid) -> QuantizedState {
    QuantizedState::ground(grid.len())
}
