//! Simulation and analysis of all-microwave leakage reduction units (LRUs)
//! on transmon qubits.
//!
//! - [`model`]: parameters, Hamiltonian and transition frequencies
//! - [`dynamics`]: Lindblad integration of driven LRU pulses and spectroscopy

pub mod calibration;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod paritycheck;
pub mod readout;
pub mod tomography;

pub use error::{Error, Result};

/// Formats a float with 17 significant digits, enough to round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
