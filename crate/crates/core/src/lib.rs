//! Simulation and analysis toolkit for erasure checks on dual-rail transmon qubits.
//!
//! The crate is layered bottom-up:
//!
//! * [`params`]: device parameters, logical state and raw records.
//! * [`dispersive`]: closed-form steady-state readout physics.
//! * [`channel`] and [`clifford`]: Pauli-frame error channels and the Clifford group.
//! * [`trajectory`]: stochastic single-shot simulation producing readout records.
//! * [`classifier`]: integration kernels, thresholds and SNR estimation.
//! * [`fitting`]: decay, Lorentzian and polynomial fits.
//! * [`experiments`]: benchmarking protocols assembled from the above.

pub mod channel;
pub mod classifier;
pub mod clifford;
pub mod config;
pub mod dispersive;
pub mod experiments;
mod error;
pub mod fitting;
pub mod params;
pub mod rng;
pub mod trajectory;

pub use error::{Error, Result};
pub use params::{hz, to_hz, validate, Bloch, DualRailState, MeasurementRecord, SystemParams, ValidationReport};
