use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::code::CodeUnderTest;
use super::CHUNK;
use crate::channel::{awgn, ChannelConfig};
use crate::error::{Error, Result};
use crate::streams::message_at;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub messages: u64,
    pub bit_errors: u64,
    pub ber: f64,
}

impl BerPoint {
    pub fn bits(&self, message_bits: usize) -> u64 {
        self.messages * message_bits as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerCurve {
    pub code_id: String,
    pub message_bits: usize,
    pub seed: u64,
    pub points: Vec<BerPoint>,
}

/// Noise sub-stream for an SNR value, so the same SNR draws the same noise
/// whatever grid it appears in.
pub fn snr_stream(snr_db: f64) -> u64 {
    (snr_db * 1000.0).round() as i64 as u64
}

/// Parses `start:step:stop` (inclusive) into a grid.
pub fn parse_snr_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Usage(format!("bad number {s:?} in SNR grid {spec:?}")))
    };
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [a, b, c] => {
            let (start, step, stop) = (parse(a)?, parse(b)?, parse(c)?);
            if !(step > 0.0) || stop < start {
                return Err(Error::Usage(format!("SNR grid {spec:?} needs step > 0 and stop >= start")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..n).map(|i| start + i as f64 * step).collect())
        }
        _ => Err(Error::Usage(format!("SNR grid {spec:?} is not start:step:stop"))),
    }
}

/// Bit errors for messages `first..first + count` at one SNR.
fn errors_in_range<C: CodeUnderTest + ?Sized>(code: &C, channel: &ChannelConfig, first: u64, count: u64) -> Result<u64> {
    let bits = code.message_bits();
    let msgs: Vec<u64> = (first..first + count).map(|i| message_at(channel.seed, i, bits)).collect();
    let clean = code.encode_batch(&msgs)?;
    let noisy = awgn(&clean, channel, first);
    let decided = code.decode_batch(&noisy, channel.sigma2)?;
    Ok(msgs.iter().zip(&decided).map(|(a, b)| (a ^ b).count_ones() as u64).sum())
}

/// Monte Carlo BER per SNR point. Message `i` and its noise come only from
/// `(seed, i)` and the SNR, so every code sees the same test set.
pub fn ber_curve<C: CodeUnderTest + ?Sized>(code: &C, snr_grid: &[f64], message_count: u64, seed: u64) -> Result<BerCurve> {
    if snr_grid.is_empty() {
        return Err(Error::Usage("SNR grid is empty".into()));
    }
    if message_count == 0 {
        return Err(Error::Usage("message_count must be at least 1".into()));
    }
    let mut grid = snr_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let bits = code.message_bits() as u64;
    let points = grid
        .iter()
        .map(|&snr_db| {
            let channel = ChannelConfig::new(snr_db, seed, snr_stream(snr_db));
            let errors: u64 = (0..message_count.div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| errors_in_range(code, &channel, c * CHUNK, (message_count - c * CHUNK).min(CHUNK)))
                .collect::<Result<Vec<u64>>>()?
                .into_iter()
                .sum();
            Ok(BerPoint {
                snr_db,
                messages: message_count,
                bit_errors: errors,
                ber: errors as f64 / (message_count * bits) as f64,
            })
        })
        .collect::<Result<_>>()?;
    Ok(BerCurve {
        code_id: code.id().to_string(),
        message_bits: code.message_bits(),
        seed,
        points,
    })
}

/// Standard error of the difference of two BER estimates under the pooled
/// null hypothesis of equal BER.
pub fn pooled_standard_error(e1: u64, b1: u64, e2: u64, b2: u64) -> f64 {
    let p = (e1 + e2) as f64 / (b1 + b2) as f64;
    (p * (1.0 - p) * (1.0 / b1 as f64 + 1.0 / b2 as f64)).sqrt()
}

/// Standard error of a single BER estimate.
pub fn standard_error(errors: u64, bits: u64) -> f64 {
    let p = errors as f64 / bits as f64;
    (p * (1.0 - p) / bits as f64).sqrt()
}
