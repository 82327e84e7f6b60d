//! Radial two-bubble dynamics for the energy-critical fourth-order Schrödinger equation.

pub mod banded;
pub mod cli;
pub mod error;
pub mod ground_state;
pub mod linearized;
pub mod modulation;
pub mod nonlinearity;
pub mod ode;
pub mod radial_core;
pub mod simulator;
pub mod virial;

pub use error::{Error, Result};
