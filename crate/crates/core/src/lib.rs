//! Quantum-dot microcavity laser with optical self-feedback, modelled both by a
//! fully quantized correlation expansion over a discretized photon continuum
//! and by a stochastic delay-differential (Lang–Kobayashi type) description.

pub mod error;
pub mod experiment;
pub mod grid;
pub mod integrate;
pub mod layout;
pub mod params;
pub mod quantized;
pub mod semiclassical;

pub use error::{Error, Result};
pub use grid::{calibrate_g0, Geometry, ModeGrid};
pub use params::{RunConfig, RunSettings, SimulationParameters};
