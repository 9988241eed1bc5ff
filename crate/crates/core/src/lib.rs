//! Optimal periodic-classical double-barrier control of a spectrally negative
//! Lévy process with hyperexponential jumps.

pub mod config;
pub mod cost;
pub mod error;
pub mod exec;
pub mod kernels;
pub mod levy;
pub mod numerics;
pub mod scale;
pub mod simulator;
pub mod solver;
pub mod valuation;
pub mod verification;

pub use error::{Error, Result};
