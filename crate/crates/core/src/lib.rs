//! Simulator of piecewise adiabatic passage from a single ground state into a
//! coherent superposition of excited states, driven by a spectrally shaped
//! femtosecond pulse and read out by bichromatic photoionization.

pub mod atom;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod observables;
pub mod shaper;

pub use error::{Error, Result};
