//! Discretized external photon continuum.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{RunConfig, SimulationParameters, SPEED_OF_LIGHT_UM_FS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    FreeSpace,
    /// External mirror at distance `length` (µm).
    Mirror { length: f64 },
}

impl Geometry {
    /// Mirror placed so that the round trip equals the configured delay.
    pub fn mirror_for(params: &SimulationParameters) -> Self {
        Geometry::Mirror {
            length: SPEED_OF_LIGHT_UM_FS * params.tau_delay / 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeGrid {
    pub omega0: f64,
    pub omegas: Vec<f64>,
    /// ω_q − ω₀, kept separately so the tiny detunings do not lose digits
    /// against the optical carrier.
    pub detunings: Vec<f64>,
    pub couplings: Vec<Complex64>,
    pub mode_spacing: f64,
    pub density_of_states: f64,
    pub geometry: Geometry,
}

impl ModeGrid {
    /// Symmetric grid ω_q = ω₀ + (j − (N−1)/2)Δω with Δω = bandwidth/N.
    ///
    /// Couplings are G_q = i·g_q with g_q = G0 (free space) or
    /// g_q = G0·√2·sin(qL − φ/2), where qL = ω_q L/c is evaluated as
    /// (ω_q − ω₀)τ/2 and the optical part ω₀τ/2 (mod 2π) is carried by the
    /// feedback phase. The −φ/2 offset makes the mirror produce the delayed
    /// term κ S e^{−iφ} c(t−τ), the same convention as the stochastic model.
    pub fn build(
        n_q: usize,
        bandwidth: f64,
        geometry: Geometry,
        params: &SimulationParameters,
    ) -> Result<Self> {
        if n_q < 2 {
            return Err(Error::Grid(format!("need at least 2 modes, got {n_q}")));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::Grid(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let spacing = bandwidth / n_q as f64;
        let centre = (n_q as f64 - 1.0) / 2.0;
        let detunings: Vec<f64> = (0..n_q).map(|j| (j as f64 - centre) * spacing).collect();
        let omegas = detunings.iter().map(|d| params.omega0 + d).collect();
        let couplings = detunings
            .iter()
            .map(|&d| {
                let g = match geometry {
                    Geometry::FreeSpace => params.g0,
                    Geometry::Mirror { length } => {
                        let phase = d * length / SPEED_OF_LIGHT_UM_FS - params.feedback_phase / 2.0;
                        params.g0 * 2f64.sqrt() * phase.sin()
                    }
                };
                Complex64::new(0.0, g)
            })
            .collect();
        Ok(Self {
            omega0: params.omega0,
            omegas,
            detunings,
            couplings,
            mode_spacing: spacing,
            density_of_states: 1.0 / spacing,
            geometry,
        })
    }

    /// Grid for a quantized run, with G0 calibrated to the cavity κ.
    ///
    /// With feedback the external modes see the mirror at L = cτ/2. Without
    /// it they form a free-space continuum; since a finite set of discrete
    /// modes would hand the emitted light back after 2π/Δω, their damping is
    /// raised to at least one mode spacing so the Lorentzian lines overlap
    /// and the light leaves for good.
    ///
    /// Returns the parameters actually used (`g0` filled in, `kappa_ext`
    /// possibly widened) alongside the grid.
    pub fn from_config(cfg: &RunConfig, feedback: bool) -> Result<(SimulationParameters, Self)> {
        let geometry = if feedback {
            Geometry::mirror_for(&cfg.params)
        } else {
            Geometry::FreeSpace
        };
        let (mut p, grid) = Self::calibrated(
            &cfg.params,
            cfg.settings.n_modes,
            cfg.settings.bandwidth_factor * cfg.params.kappa,
            geometry,
        )?;
        if !feedback {
            p.kappa_ext = p.kappa_ext.max(grid.mode_spacing);
        }
        Ok((p, grid))
    }

    pub fn calibrated(
        params: &SimulationParameters,
        n_q: usize,
        bandwidth: f64,
        geometry: Geometry,
    ) -> Result<(SimulationParameters, Self)> {
        let free = Self::build(n_q, bandwidth, Geometry::FreeSpace, params)?;
        let mut p = params.clone();
        p.g0 = calibrate_g0(params.kappa, &free)?;
        let grid = Self::build(n_q, bandwidth, geometry, &p)?;
        Ok((p, grid))
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// 2π/Δω: beyond this time the discrete continuum returns energy to the cavity.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.mode_spacing
    }
}

/// Coupling amplitude |G0| for which a cavity coupled to the flat continuum
/// loses its amplitude at `target_kappa` (photon number at 2κ):
/// κ = π ρ |G0|².
pub fn calibrate_g0(target_kappa: f64, grid: &ModeGrid) -> Result<f64> {
    if grid.geometry != Geometry::FreeSpace {
        return Err(Error::Grid("coupling calibration needs a free-space grid".into()));
    }
    if !(grid.density_of_states > 0.0) || !grid.density_of_states.is_finite() {
        return Err(Error::Grid("zero density of states".into()));
    }
    if !(target_kappa >= 0.0) {
        return Err(Error::OutOfRange {
            key: "kappa",
            value: target_kappa,
            reason: "must be non-negative",
        });
    }
    Ok((target_kappa / (PI * grid.density_of_states)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params_with_g0(g0: f64) -> SimulationParameters {
        SimulationParameters {
            g0,
            ..Default::default()
        }
    }

    #[test]
    fn free_space_couplings_are_constant_and_imaginary() {
        let p = params_with_g0(0.37);
        let grid = ModeGrid::build(17, 1e-3, Geometry::FreeSpace, &p).unwrap();
        for g in &grid.couplings {
            assert_eq!(*g, Complex64::new(0.0, 0.37));
            assert_eq!(g.conj(), -*g);
        }
    }

    #[test]
    fn mirror_couplings_follow_the_spatial_phase() {
        let p = params_with_g0(0.5);
        let geometry = Geometry::mirror_for(&p);
        let grid = ModeGrid::build(64, 2e-3, geometry, &p).unwrap();
        for (g, d) in grid.couplings.iter().zip(&grid.detunings) {
            let expected = 0.5 * 2f64.sqrt() * (d * p.tau_delay / 2.0).sin().abs();
            assert!((g.norm() - expected).abs() < 1e-12);
            assert_eq!(g.re, 0.0);
        }
    }

    #[test]
    fn two_point_grid() {
        let p = SimulationParameters::default();
        let delta = 1e-4;
        let grid = ModeGrid::build(2, 2.0 * delta, Geometry::FreeSpace, &p).unwrap();
        assert!((grid.detunings[0] + delta / 2.0).abs() < 1e-20);
        assert!((grid.detunings[1] - delta / 2.0).abs() < 1e-20);
        assert_eq!(grid.mode_spacing, delta);
    }

    #[test]
    fn grid_rejects_bad_input() {
        let p = SimulationParameters::default();
        assert!(ModeGrid::build(1, 1.0, Geometry::FreeSpace, &p).is_err());
        assert!(ModeGrid::build(8, 0.0, Geometry::FreeSpace, &p).is_err());
        assert!(ModeGrid::build(8, -1.0, Geometry::FreeSpace, &p).is_err());
    }

    #[test]
    fn calibration_formula_and_scaling() {
        let p = SimulationParameters::default();
        let grid = ModeGrid::build(32, 1e-3, Geometry::FreeSpace, &p).unwrap();
        assert_eq!(calibrate_g0(0.0, &grid).unwrap(), 0.0);
        let k = p.kappa;
        let g = calibrate_g0(k, &grid).unwrap();
        assert!((PI * grid.density_of_states * g * g - k).abs() < 1e-18);
        let ratio = calibrate_g0(2.0 * k, &grid).unwrap() / g;
        assert!((ratio - 2f64.sqrt()).abs() < 1e-15);
        // doubling ρ (halving the bandwidth at fixed N) shrinks G0 by 1/√2
        let dense = ModeGrid::build(32, 0.5e-3, Geometry::FreeSpace, &p).unwrap();
        let shrink = calibrate_g0(k, &dense).unwrap() / g;
        assert!((shrink - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let mirror = ModeGrid::build(32, 1e-3, Geometry::mirror_for(&p), &p).unwrap();
        assert!(calibrate_g0(k, &mirror).is_err());
    }

    #[test]
    fn mirror_length_matches_delay() {
        let p = SimulationParameters::default();
        match Geometry::mirror_for(&p) {
            Geometry::Mirror { length } => {
                // 90 ps round trip: L = c τ / 2 ≈ 13.49 mm
                assert!((length - 13_490.66).abs() < 0.01, "{length}");
                assert!((2.0 * length / SPEED_OF_LIGHT_UM_FS - p.tau_delay).abs() < 1e-9);
            }
            Geometry::FreeSpace => unreachable!(),
        }
    }

    proptest! {
        #[test]
        fn grid_invariants(n in 2usize..200, bw in 1e-6f64..1e-1, mirror in any::<bool>(), phase in -3.2f64..3.2) {
            let mut p = params_with_g0(1e-4);
            p.feedback_phase = phase;
            let geometry = if mirror { Geometry::mirror_for(&p) } else { Geometry::FreeSpace };
            let grid = ModeGrid::build(n, bw, geometry, &p).unwrap();
            prop_assert_eq!(grid.len(), n);
            prop_assert!(grid.omegas.windows(2).all(|w| w[1] > w[0]));
            prop_assert!(grid.detunings.windows(2).all(|w| w[1] > w[0]));
            // symmetric about ω₀
            for j in 0..n {
                prop_assert!((grid.detunings[j] + grid.detunings[n - 1 - j]).abs() <= 1e-12 * bw);
            }
            prop_assert!((grid.density_of_states * grid.mode_spacing - 1.0).abs() < 1e-12);
            for g in &grid.couplings {
                prop_assert_eq!(g.re, 0.0);
                prop_assert!(g.norm() <= 1e-4 * 2f64.sqrt() * (1.0 + 1e-12));
            }
            prop_assert!((grid.recurrence_time() * grid.mode_spacing - 2.0 * PI).abs() < 1e-9);
        }
    }
}
