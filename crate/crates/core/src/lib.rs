//! Scattering time functions, jump/delay photon transit, energy–time
//! uncertainty bounds and transmutation-product analysis.
//!
//! SI units are used at every public boundary except the massive branch of
//! [`temporal`], which works in natural units (`ħ = c = 1`); conversions live
//! in [`constants`].

pub mod cli;
pub mod constants;
pub mod error;
pub mod medium;
pub mod particles;
pub mod rng;
pub mod temporal;
pub mod transport;
pub mod uncertainty;

pub use error::{Error, ParseError};
