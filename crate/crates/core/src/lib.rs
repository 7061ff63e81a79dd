//! Learned integrated sensing and communications codes.
//!
//! An autoencoder maps `K`-bit messages to `N` complex symbols that are both
//! decodable over AWGN and have low periodic-autocorrelation sidelobes. The
//! crate also holds Polar and Zadoff-Chu baselines and the measurement
//! campaigns used to compare them.

pub mod acf;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod evaluation;
pub mod neuralcode;
pub mod numerics;
pub mod objective;
pub mod streams;
pub mod training;

pub use error::{Error, Result};
