//! Measurement campaigns: per-codeword ACSL distributions and Monte Carlo
//! BER curves, plus their CSV reports.

mod acsl;
mod ber;
mod code;
mod quantile;
pub mod report;

pub use acsl::{acsl_exhaustive, acsl_sampled, acsl_values, AcslReport, MessageSource, Population, RESERVOIR_SIZE};
pub use ber::{
    ber_curve, parse_snr_grid, pooled_standard_error, snr_stream, standard_error, BerCurve, BerPoint,
};
pub use code::{CodeUnderTest, MlCode, PolarBpsk};
pub use quantile::{summarize_exact, P2Quantile, StreamingSummary, Summary};

/// Default seed of the shared evaluation message set.
pub const DEFAULT_EVAL_SEED: u64 = 20_240_601;

/// Messages per parallel work item. Fixed, so results do not depend on the
/// number of threads.
const CHUNK: u64 = 1000;
