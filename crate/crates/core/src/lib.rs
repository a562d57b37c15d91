//! One-step GHZ-state preparation and multi-qubit controlled-phase gates in
//! registers of Rydberg atoms whose pair interaction is comparable to the
//! two-photon detuning.
//!
//! Layers, bottom-up:
//! - [`qkernel`]: dense complex operators, tensor-product embedding, Dicke states
//! - [`model`]: Hamiltonians, collapse operators, gate targets
//! - [`dynamics`]: Schrödinger and Lindblad propagation
//! - [`perturbation`]: effective Raman model and timing rules
//! - [`metrics`]: state, GHZ and gate fidelities
//! - [`runner`]: scenario configs, parameter scans, CSV/JSON output

pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod model;
pub mod perturbation;
pub mod qkernel;
pub mod runner;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
