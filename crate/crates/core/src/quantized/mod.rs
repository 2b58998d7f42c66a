//! Fully quantized correlation-expansion model: cavity photons, carrier
//! occupations, photon-assisted polarizations and their correlations with a
//! discretized set of external modes, truncated at the four-particle level.

mod observables;
mod rhs;
mod state;

pub use observables::{
    g2_zero, g2_zero_quantized, observables, structure_residual_flat, ObservableRecord,
    QuantizedObserver, N_PH_FLOOR,
};
pub use rhs::{init_state, rhs_quantized, scattering_rates, Mutation, QuantizedRhs};
pub(crate) use rhs::carrier_kinetics;
pub use state::{random_invariant_state, ModeMatrix, QuantizedState};

#[cfg(test)]
mod tests;
