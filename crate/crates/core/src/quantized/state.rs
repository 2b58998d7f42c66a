use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{MatField, Scalar, StateLayout, VecField};

/// Square row-major matrix over external-mode pairs (q, q′).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl ModeMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for a in 0..n {
            for b in 0..n {
                m[(a, b)] = f(a, b);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// max |A − A†|
    pub fn hermiticity_residual(&self) -> f64 {
        hermiticity_residual(self.n, &self.data)
    }

    /// max |A − Aᵀ|
    pub fn symmetry_residual(&self) -> f64 {
        symmetry_residual(self.n, &self.data)
    }
}

pub(crate) fn hermiticity_residual(n: usize, m: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a..n {
            worst = worst.max((m[a * n + b] - m[b * n + a].conj()).norm());
        }
    }
    worst
}

pub(crate) fn symmetry_residual(n: usize, m: &[Complex64]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..n {
        for b in a + 1..n {
            worst = worst.max((m[a * n + b] - m[b * n + a]).norm());
        }
    }
    worst
}

impl Index<(usize, usize)> for ModeMatrix {
    type Output = Complex64;
    fn index(&self, (a, b): (usize, usize)) -> &Complex64 {
        &self.data[a * self.n + b]
    }
}

impl IndexMut<(usize, usize)> for ModeMatrix {
    fn index_mut(&mut self, (a, b): (usize, usize)) -> &mut Complex64 {
        &mut self.data[a * self.n + b]
    }
}

/// All expectation values of the correlation-expansion model.
///
/// Names follow the usual notation: `f_*` carrier occupations and
/// carrier–photon correlations, `n_*` photon numbers and transfer amplitudes,
/// `p*` photon-assisted polarizations, `k_*` two-photon correlations. Every
/// `δ⟨…⟩` quantity is the correlated part only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedState {
    pub f_c: f64,
    pub f_v: f64,
    pub f_ce: f64,
    pub f_ve: f64,
    pub n_ph: f64,
    pub p1: Complex64,
    pub f_c_ph: f64,
    pub f_v_ph: f64,
    pub k_ph: f64,
    pub p3: Complex64,
    pub n_q0: Vec<Complex64>,
    pub p1q: Vec<Complex64>,
    pub f_c_q: Vec<Complex64>,
    pub f_v_q: Vec<Complex64>,
    pub k_q: Vec<Complex64>,
    pub p_q3: Vec<Complex64>,
    pub p_3q: Vec<Complex64>,
    pub n_qq: ModeMatrix,
    pub f_c_qq: ModeMatrix,
    pub f_v_qq: ModeMatrix,
    pub k_qq: ModeMatrix,
    pub k_up_qq: ModeMatrix,
    pub p3_qq: ModeMatrix,
    pub p3_qqp: ModeMatrix,
}

impl QuantizedState {
    /// Cold cavity, filled valence levels, empty conduction levels.
    pub fn ground(n_q: usize) -> Self {
        let zv = || vec![Complex64::new(0.0, 0.0); n_q];
        let zm = || ModeMatrix::zeros(n_q);
        Self {
            f_c: 0.0,
            f_v: 1.0,
            f_ce: 0.0,
            f_ve: 1.0,
            n_ph: 0.0,
            p1: Complex64::new(0.0, 0.0),
            f_c_ph: 0.0,
            f_v_ph: 0.0,
            k_ph: 0.0,
            p3: Complex64::new(0.0, 0.0),
            n_q0: zv(),
            p1q: zv(),
            f_c_q: zv(),
            f_v_q: zv(),
            k_q: zv(),
            p_q3: zv(),
            p_3q: zv(),
            n_qq: zm(),
            f_c_qq: zm(),
            f_v_qq: zm(),
            k_qq: zm(),
            k_up_qq: zm(),
            p3_qq: zm(),
            p3_qqp: zm(),
        }
    }

    pub fn n_q(&self) -> usize {
        self.n_q0.len()
    }

    pub fn layout(&self) -> StateLayout {
        StateLayout::new(self.n_q())
    }

    fn vec_ref(&self, f: VecField) -> &Vec<Complex64> {
        match f {
            VecField::NQ0 => &self.n_q0,
            VecField::P1Q => &self.p1q,
            VecField::FCQ => &self.f_c_q,
            VecField::FVQ => &self.f_v_q,
            VecField::KQ => &self.k_q,
            VecField::PQ3 => &self.p_q3,
            VecField::P3Q => &self.p_3q,
        }
    }

    fn vec_mut(&mut self, f: VecField) -> &mut Vec<Complex64> {
        match f {
            VecField::NQ0 => &mut self.n_q0,
            VecField::P1Q => &mut self.p1q,
            VecField::FCQ => &mut self.f_c_q,
            VecField::FVQ => &mut self.f_v_q,
            VecField::KQ => &mut self.k_q,
            VecField::PQ3 => &mut self.p_q3,
            VecField::P3Q => &mut self.p_3q,
        }
    }

    pub fn mat(&self, f: MatField) -> &ModeMatrix {
        match f {
            MatField::NQQ => &self.n_qq,
            MatField::FCQQ => &self.f_c_qq,
            MatField::FVQQ => &self.f_v_qq,
            MatField::KQQ => &self.k_qq,
            MatField::KUp => &self.k_up_qq,
            MatField::P3QQ => &self.p3_qq,
            MatField::P3QQP => &self.p3_qqp,
        }
    }

    fn mat_mut(&mut self, f: MatField) -> &mut ModeMatrix {
        match f {
            MatField::NQQ => &mut self.n_qq,
            MatField::FCQQ => &mut self.f_c_qq,
            MatField::FVQQ => &mut self.f_v_qq,
            MatField::KQQ => &mut self.k_qq,
            MatField::KUp => &mut self.k_up_qq,
            MatField::P3QQ => &mut self.p3_qq,
            MatField::P3QQP => &mut self.p3_qqp,
        }
    }

    fn scalars(&self) -> [Complex64; crate::layout::N_SCALARS] {
        let r = |x: f64| Complex64::new(x, 0.0);
        [
            r(self.f_c),
            r(self.f_v),
            r(self.f_ce),
            r(self.f_ve),
            r(self.n_ph),
            r(self.f_c_ph),
            r(self.f_v_ph),
            r(self.k_ph),
            self.p1,
            self.p3,
        ]
    }

    pub fn pack(&self) -> Vec<Complex64> {
        let layout = self.layout();
        let mut out = vec![Complex64::new(0.0, 0.0); layout.len()];
        self.pack_into(&mut out);
        out
    }

    pub fn pack_into(&self, out: &mut [Complex64]) {
        let layout = self.layout();
        assert_eq!(out.len(), layout.len());
        out[..crate::layout::N_SCALARS].copy_from_slice(&self.scalars());
        for f in crate::layout::VEC_FIELDS {
            out[layout.vec_range(f)].copy_from_slice(self.vec_ref(f));
        }
        for f in crate::layout::MAT_FIELDS {
            out[layout.mat_range(f)].copy_from_slice(&self.mat(f).data);
        }
    }

    /// Inverse of [`pack`](Self::pack). Real-typed scalars take the real part
    /// of their slot.
    pub fn unpack(layout: StateLayout, flat: &[Complex64]) -> Result<Self> {
        if flat.len() != layout.len() {
            return Err(Error::Dimension {
                expected: layout.len(),
                got: flat.len(),
            });
        }
        let mut s = Self::ground(layout.n_q);
        let at = |x: Scalar| flat[layout.scalar(x)];
        s.f_c = at(Scalar::FC).re;
        s.f_v = at(Scalar::FV).re;
        s.f_ce = at(Scalar::FCE).re;
        s.f_ve = at(Scalar::FVE).re;
        s.n_ph = at(Scalar::NPh).re;
        s.f_c_ph = at(Scalar::FCPh).re;
        s.f_v_ph = at(Scalar::FVPh).re;
        s.k_ph = at(Scalar::KPh).re;
        s.p1 = at(Scalar::P1);
        s.p3 = at(Scalar::P3);
        for f in crate::layout::VEC_FIELDS {
            s.vec_mut(f).copy_from_slice(&flat[layout.vec_range(f)]);
        }
        for f in crate::layout::MAT_FIELDS {
            s.mat_mut(f).data.copy_from_slice(&flat[layout.mat_range(f)]);
        }
        Ok(s)
    }

    /// Total external photon number Σ_q n_{q,q}.
    pub fn external_photons(&self) -> f64 {
        (0..self.n_q()).map(|q| self.n_qq[(q, q)].re).sum()
    }

    /// Worst violation of the Hermiticity / exchange-symmetry relations over
    /// all seven mode matrices.
    pub fn structure_residual(&self) -> f64 {
        [
            self.n_qq.hermiticity_residual(),
            self.f_c_qq.hermiticity_residual(),
            self.f_v_qq.hermiticity_residual(),
            self.k_qq.hermiticity_residual(),
            self.k_up_qq.symmetry_residual(),
            self.p3_qqp.symmetry_residual(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Packed state with uniformly random entries in the unit square that obeys
/// every Hermiticity, exchange-symmetry and reality relation. Used to probe
/// the right-hand side away from physical trajectories.
pub fn random_invariant_state<R: Rng + ?Sized>(n_q: usize, rng: &mut R) -> Vec<Complex64> {
    let l = StateLayout::new(n_q);
    let n = n_q;
    let mut y: Vec<Complex64> = (0..l.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    for s in y.iter_mut().take(Scalar::P1 as usize) {
        s.im = 0.0;
    }
    for f in [MatField::NQQ, MatField::FCQQ, MatField::FVQQ, MatField::KQQ] {
        let o = l.mat_offset(f);
        for a in 0..n {
            y[o + a * n + a].im = 0.0;
            for b in a + 1..n {
                y[o + b * n + a] = y[o + a * n + b].conj();
            }
        }
    }
    for f in [MatField::KUp, MatField::P3QQP] {
        let o = l.mat_offset(f);
        for a in 0..n {
            for b in a + 1..n {
                y[o + b * n + a] = y[o + a * n + b];
            }
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_state(n_q: usize) -> impl Strategy<Value = QuantizedState> {
        let len = StateLayout::new(n_q).len();
        proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), len).prop_map(move |v| {
            let mut flat: Vec<Complex64> = v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
            // real-typed scalar slots carry no imaginary part
            for s in flat.iter_mut().take(8) {
                s.im = 0.0;
            }
            QuantizedState::unpack(StateLayout::new(n_q), &flat).unwrap()
        })
    }

    proptest! {
        #[test]
        fn pack_unpack_round_trip(s in (1usize..6).prop_flat_map(arb_state)) {
            let flat = s.pack();
            let back = QuantizedState::unpack(s.layout(), &flat).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(back.pack(), flat);
        }
    }

    #[test]
    fn ground_state_is_vacuum() {
        let s = QuantizedState::ground(6);
        assert_eq!(s.n_ph, 0.0);
        assert_eq!(s.p1, Complex64::new(0.0, 0.0));
        assert_eq!((s.f_v, s.f_ve, s.f_c, s.f_ce), (1.0, 1.0, 0.0, 0.0));
        for f in crate::layout::MAT_FIELDS {
            let m = s.mat(f);
            assert_eq!(m.dim(), 6);
            assert!(m.as_slice().iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn unpack_checks_length() {
        let err = QuantizedState::unpack(StateLayout::new(3), &[Complex64::new(0.0, 0.0); 4]);
        assert!(matches!(err, Err(Error::Dimension { .. })));
    }
}
