use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::grid::{Geometry, ModeGrid};
use crate::layout::{MatField, Scalar, StateLayout, MAT_FIELDS, VEC_FIELDS};
use crate::params::SimulationParameters;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn grid(n: usize, p: &SimulationParameters) -> ModeGrid {
    let (_, g) = ModeGrid::calibrated(p, n, 40.0 * p.kappa, Geometry::Mirror { length: 13_490.0 }).unwrap();
    g
}

fn random_state(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    random_invariant_state(n, rng)
}

/// Parameters with every rate of order one, so no term is hidden by scale.
fn unit_scale_params() -> SimulationParameters {
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

fn unit_scale_rhs(n: usize, rng: &mut ChaCha8Rng) -> QuantizedRhs {
    let p = unit_scale_params();
    let mut g = ModeGrid::build(n, 3.0, Geometry::FreeSpace, &p).unwrap();
    for c in g.couplings.iter_mut() {
        *c = Complex64::new(0.0, rng.gen_range(-1.0..1.0));
    }
    QuantizedRhs::new(&p, &g)
}

fn dissipationless(p: &SimulationParameters) -> SimulationParameters {
    SimulationParameters {
        kappa_ext: 0.0,
        kappa_h: 0.0,
        tau_sp_e_inv: 0.0,
        tau_sp_g_inv: 0.0,
        tau_p_inv: 0.0,
        ..p.clone()
    }
}

/// d/dt[N(f_c + f_ce) + n_ph + Σ_q n_qq] and the sum of the magnitudes of its parts.
fn excitation_rate(p: &SimulationParameters, l: StateLayout, dy: &[Complex64]) -> (f64, f64) {
    let n = l.n_q;
    let o = l.mat_offset(MatField::NQQ);
    let parts = [
        p.n_qd * dy[Scalar::FC as usize].re,
        p.n_qd * dy[Scalar::FCE as usize].re,
        dy[Scalar::NPh as usize].re,
    ]
    .into_iter()
    .chain((0..n).map(|q| dy[o + q * n + q].re));
    parts.fold((0.0, 0.0), |(s, a), x| (s + x, a + x.abs()))
}

#[test]
fn ground_state_is_a_fixed_point_without_pump() {
    let p = SimulationParameters::default();
    let g = grid(6, &p);
    let d = rhs_quantized(&init_state(&p, &g), &p, &g).unwrap();
    assert!(d.pack().iter().all(|z| *z == zero()));
}

#[test]
fn pumped_ground_state_only_moves_excited_levels() {
    let p = SimulationParameters {
        tau_p_inv: 1e-4,
        ..SimulationParameters::default()
    };
    let g = grid(3, &p);
    let d = rhs_quantized(&init_state(&p, &g), &p, &g).unwrap();
    assert!((d.f_ce - 1e-4).abs() < 1e-20);
    assert!((d.f_ve + 1e-4).abs() < 1e-20);
    assert_eq!((d.f_c, d.f_v, d.n_ph), (0.0, 0.0, 0.0));
}

#[test]
fn inverted_dot_decays_spontaneously() {
    let p = SimulationParameters {
        m_coupling: 0.0,
        ..SimulationParameters::default()
    };
    let mut g = grid(4, &p);
    g.couplings.iter_mut().for_each(|c| *c = zero());
    let mut s = init_state(&p, &g);
    s.f_c = 1.0;
    s.f_v = 0.0;
    let d = rhs_quantized(&s, &p, &g).unwrap();
    let rate = (1.0 - p.beta) * p.tau_sp_g_inv;
    assert!((d.f_v - rate).abs() < 1e-20);
    assert!((d.f_c + rate).abs() < 1e-20);
    // f_ce = 0 and f_ve = 1 block both relaxation channels
    assert_eq!((d.f_ce, d.f_ve), (0.0, 0.0));
    assert!(d.pack().iter().skip(4).all(|z| *z == zero()));
}

#[test]
fn dimension_mismatch_is_an_error() {
    let p = SimulationParameters::default();
    let g = grid(4, &p);
    let err = rhs_quantized(&QuantizedState::ground(3), &p, &g).unwrap_err();
    assert!(matches!(err, crate::error::Error::Dimension { expected: 4, got: 3 }));
}

#[test]
fn dissipationless_excitation_is_conserved() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..100 {
        let n = 2 + trial % 5;
        let mut rhs = unit_scale_rhs(n, &mut rng);
        let p = dissipationless(rhs.params());
        let g = rhs.couplings().to_vec();
        let mut grid = ModeGrid::build(n, 3.0, Geometry::FreeSpace, &p).unwrap();
        grid.couplings = g;
        rhs = QuantizedRhs::new(&p, &grid);
        let y = random_state(n, &mut rng);
        let mut dy = vec![zero(); y.len()];
        rhs.eval(&y, &mut dy);
        let (sum, scale) = excitation_rate(&p, rhs.layout(), &dy);
        assert!(sum.abs() <= 1e-14 * scale, "trial {trial}: {sum:e} of {scale:e}");
    }
}

#[test]
fn conservation_residual_accounts_for_all_losses() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let rhs = unit_scale_rhs(4, &mut rng);
        let mut obs = QuantizedObserver::from_rhs(rhs);
        let y = random_state(4, &mut rng);
        assert!(obs.record(0.0, &y).conservation_residual < 1e-13);
    }
}

#[test]
fn sign_mutations_break_conservation() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for mutation in [Mutation::PhotonTransferSign, Mutation::CarrierGainSign] {
        let mut rhs = unit_scale_rhs(3, &mut rng);
        rhs.set_mutation(Some(mutation));
        let mut obs = QuantizedObserver::from_rhs(rhs);
        let y = random_state(3, &mut rng);
        assert!(obs.record(0.0, &y).conservation_residual > 1e-3, "{mutation:?} went unnoticed");
    }
}

#[test]
fn derivative_preserves_structure() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for trial in 0..50 {
        let n = 2 + trial % 6;
        let mut rhs = unit_scale_rhs(n, &mut rng);
        let y = random_state(n, &mut rng);
        let mut dy = vec![zero(); y.len()];
        rhs.eval(&y, &mut dy);
        let resid = structure_residual_flat(rhs.layout(), &dy);
        assert!(resid <= 1e-13, "trial {trial}: {resid:e}");
        for s in 0..8 {
            assert_eq!(dy[s].im, 0.0);
        }
    }
}

#[test]
fn physical_parameters_preserve_structure_too() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let p = SimulationParameters {
        tau_p_inv: 3e-4,
        ..SimulationParameters::default()
    };
    let g = grid(7, &p);
    let mut rhs = QuantizedRhs::new(&p, &g);
    let y = random_state(7, &mut rng);
    let mut dy = vec![zero(); y.len()];
    rhs.eval(&y, &mut dy);
    assert!(structure_residual_flat(rhs.layout(), &dy) <= 1e-13);
}

#[test]
fn closed_cavity_limit_matches_zero_modes() {
    let p = SimulationParameters {
        tau_p_inv: 5e-4,
        ..SimulationParameters::default()
    };
    let mut open = grid(5, &p);
    open.couplings.iter_mut().for_each(|c| *c = zero());
    let closed = ModeGrid {
        omegas: vec![],
        detunings: vec![],
        couplings: vec![],
        ..open.clone()
    };
    let mut rhs_open = QuantizedRhs::new(&p, &open);
    let mut rhs_closed = QuantizedRhs::new(&p, &closed);
    let mut y_open = init_state(&p, &open).pack();
    let mut y_closed = init_state(&p, &closed).pack();
    let mut st_open = crate::integrate::Rk4::new(y_open.len());
    let mut st_closed = crate::integrate::Rk4::new(y_closed.len());
    let mut next_open = y_open.clone();
    let mut next_closed = y_closed.clone();
    let h = 50.0;
    for i in 0..2000 {
        let t = i as f64 * h;
        st_open.step(&mut rhs_open, t, &y_open, h, &mut next_open).unwrap();
        st_closed.step(&mut rhs_closed, t, &y_closed, h, &mut next_closed).unwrap();
        std::mem::swap(&mut y_open, &mut next_open);
        std::mem::swap(&mut y_closed, &mut next_closed);
    }
    let l = StateLayout::new(5);
    assert!(y_open[crate::layout::N_SCALARS..].iter().all(|z| *z == zero()));
    for f in VEC_FIELDS {
        assert!(y_open[l.vec_range(f)].iter().all(|z| *z == zero()));
    }
    for f in MAT_FIELDS {
        assert!(y_open[l.mat_range(f)].iter().all(|z| *z == zero()));
    }
    for s in 0..crate::layout::N_SCALARS {
        let (a, b) = (y_open[s], y_closed[s]);
        assert!((a - b).norm() <= 1e-14 * a.norm().max(1e-300), "slot {s}: {a} vs {b}");
    }
    // the pumped dot really did something
    assert!(y_closed[Scalar::FC as usize].re > 0.1);
}
