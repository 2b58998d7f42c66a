//! Flat packing of the correlation-expansion state.

use serde::{Deserialize, Serialize};

use crate::params::SimulationParameters;

/// Scalar slots. Real-valued quantities occupy a complex slot with zero
/// imaginary part so the whole state is one `[Complex64]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum Scalar {
    FC,
    FV,
    FCE,
    FVE,
    NPh,
    FCPh,
    FVPh,
    KPh,
    P1,
    P3,
}

pub const N_SCALARS: usize = 10;

/// q-indexed families, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum VecField {
    /// ⟨d†_q c⟩
    NQ0,
    /// ⟨a†_v a_c d†_q⟩
    P1Q,
    /// δ⟨a†_c a_c d†_q c⟩
    FCQ,
    /// δ⟨a†_v a_v d†_q c⟩
    FVQ,
    /// δ⟨d†_q c† c c⟩
    KQ,
    /// δ⟨a†_v a_c d†_q c† c⟩
    PQ3,
    /// δ⟨a†_v a_c c† c† d_q⟩
    P3Q,
}

pub const N_VEC: usize = 7;

/// (q, q′)-indexed families, row-major, in storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(usize)]
pub enum MatField {
    /// ⟨d†_q d_q′⟩
    NQQ,
    /// δ⟨a†_c a_c d†_q d_q′⟩
    FCQQ,
    /// δ⟨a†_v a_v d†_q d_q′⟩
    FVQQ,
    /// δ⟨d†_q c† c d_q′⟩
    KQQ,
    /// δ⟨d†_q′ d†_q c c⟩
    KUp,
    /// δ⟨a†_v a_c d†_q c† d_q′⟩
    P3QQ,
    /// δ⟨a†_v a_c d†_q d†_q′ c⟩
    P3QQP,
}

pub const N_MAT: usize = 7;

pub const VEC_FIELDS: [VecField; N_VEC] = [
    VecField::NQ0,
    VecField::P1Q,
    VecField::FCQ,
    VecField::FVQ,
    VecField::KQ,
    VecField::PQ3,
    VecField::P3Q,
];

pub const MAT_FIELDS: [MatField; N_MAT] = [
    MatField::NQQ,
    MatField::FCQQ,
    MatField::FVQQ,
    MatField::KQQ,
    MatField::KUp,
    MatField::P3QQ,
    MatField::P3QQP,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateLayout {
    pub n_q: usize,
}

impl StateLayout {
    pub fn new(n_q: usize) -> Self {
        Self { n_q }
    }

    pub fn len(&self) -> usize {
        N_SCALARS + N_VEC * self.n_q + N_MAT * self.n_q * self.n_q
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn scalar(&self, s: Scalar) -> usize {
        s as usize
    }

    #[inline]
    pub fn vec_offset(&self, f: VecField) -> usize {
        N_SCALARS + f as usize * self.n_q
    }

    #[inline]
    pub fn mat_offset(&self, f: MatField) -> usize {
        N_SCALARS + N_VEC * self.n_q + f as usize * self.n_q * self.n_q
    }

    pub fn vec_range(&self, f: VecField) -> std::ops::Range<usize> {
        let o = self.vec_offset(f);
        o..o + self.n_q
    }

    pub fn mat_range(&self, f: MatField) -> std::ops::Range<usize> {
        let o = self.mat_offset(f);
        o..o + self.n_q * self.n_q
    }
}

/// Combined damping rates and four-frequency detunings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    /// κ_ext + γ_PD
    pub gamma_ext_pd: f64,
    /// 2κ_ext + γ_PD
    pub gamma_2ext_pd: f64,
}

impl DerivedRates {
    pub fn new(p: &SimulationParameters) -> Self {
        Self {
            gamma_ext_pd: p.kappa_ext + p.gamma_pd,
            gamma_2ext_pd: 2.0 * p.kappa_ext + p.gamma_pd,
        }
    }

    /// ω_n − ω_m + ω_k − ω_l
    #[inline]
    pub fn detuning(n: f64, m: f64, k: f64, l: f64) -> f64 {
        (n - m) + (k - l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn slices_tile_the_state() {
        let l = StateLayout::new(5);
        assert_eq!(l.len(), 10 + 7 * 5 + 7 * 25);
        let mut covered = vec![0u8; l.len()];
        for i in 0..N_SCALARS {
            covered[i] += 1;
        }
        for f in VEC_FIELDS {
            for i in l.vec_range(f) {
                covered[i] += 1;
            }
        }
        for f in MAT_FIELDS {
            for i in l.mat_range(f) {
                covered[i] += 1;
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
    }

    #[test]
    fn derived_rates() {
        let p = SimulationParameters::default();
        let r = DerivedRates::new(&p);
        assert_eq!(r.gamma_ext_pd, p.kappa_ext + p.gamma_pd);
        assert_eq!(r.gamma_2ext_pd, 2.0 * p.kappa_ext + p.gamma_pd);
    }

    proptest! {
        #[test]
        fn detuning_symmetries(a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0) {
            prop_assert_eq!(DerivedRates::detuning(a, a, b, b), 0.0);
            prop_assert_eq!(DerivedRates::detuning(a, b, c, d), -DerivedRates::detuning(b, a, d, c));
        }
    }
}
