use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::code::CodeUnderTest;
use super::quantile::{summarize_exact, StreamingSummary, Summary};
use super::CHUNK;
use crate::acf::{acsl_linear, Acsl};
use crate::error::{Error, Result};
use crate::streams::message_at;

/// Number of raw sampled values kept for plotting.
pub const RESERVOIR_SIZE: usize = 10_000;

/// Where the `i`-th evaluated message comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MessageSource {
    /// `message_at(seed, i, K)`.
    Seeded(u64),
    /// Message `i` itself, i.e. lexicographic enumeration.
    Sequential,
}

impl MessageSource {
    pub fn message(&self, index: u64, bits: usize) -> u64 {
        match *self {
            MessageSource::Seeded(seed) => message_at(seed, index, bits),
            MessageSource::Sequential => index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Population {
    Exhaustive { k: usize },
    Sampled { source: MessageSource, count: u64 },
}

impl Population {
    pub fn label(&self) -> String {
        match self {
            Population::Exhaustive { k } => format!("exhaustive-2^{k}"),
            Population::Sampled {
                source: MessageSource::Seeded(seed),
                count,
            } => format!("sampled-{count}-seed-{seed}"),
            Population::Sampled {
                source: MessageSource::Sequential,
                count,
            } => format!("sampled-{count}-sequential"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcslReport {
    pub code_id: String,
    pub population: Population,
    /// Per-codeword ACSL in dB, in message-index order. Always present for
    /// exhaustive reports; for sampled ones only when requested.
    pub values: Option<Vec<f64>>,
    /// First [`RESERVOIR_SIZE`] sampled values.
    pub reservoir: Vec<f64>,
    pub summary: Summary,
}

/// ACSL in dB of messages `first..first + count` of `source`. Work is split
/// into fixed index chunks so the output does not depend on thread count.
pub fn acsl_values<C: CodeUnderTest + ?Sized>(
    code: &C,
    source: MessageSource,
    first: u64,
    count: u64,
) -> Result<Vec<f64>> {
    let bits = code.message_bits();
    let chunks: Vec<(u64, u64)> = (0..count.div_ceil(CHUNK))
        .map(|c| (first + c * CHUNK, (count - c * CHUNK).min(CHUNK)))
        .collect();
    let parts: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&(start, len)| {
            let msgs: Vec<u64> = (start..start + len).map(|i| source.message(i, bits)).collect();
            let cw = code.encode_batch(&msgs)?;
            Ok(cw.iter_rows().map(|row| Acsl::from_linear(acsl_linear(row)).db).collect())
        })
        .collect::<Result<_>>()?;
    Ok(parts.concat())
}

/// Every one of the 2^16 codewords in lexicographic message order.
pub fn acsl_exhaustive<C: CodeUnderTest + ?Sized>(code: &C) -> Result<AcslReport> {
    let k = code.message_bits();
    if k != 16 {
        return Err(Error::Usage(format!(
            "exhaustive ACSL is limited to K=16 (got K={k}); use sampled mode"
        )));
    }
    let values = acsl_values(code, MessageSource::Sequential, 0, 1 << k)?;
    let summary = summarize_exact(&values)?;
    Ok(AcslReport {
        code_id: code.id().to_string(),
        population: Population::Exhaustive { k },
        reservoir: values[..RESERVOIR_SIZE].to_vec(),
        values: Some(values),
        summary,
    })
}

/// Streams `count` messages of `source` through a P² summary, in index
/// order, one block at a time.
pub fn acsl_sampled<C: CodeUnderTest + ?Sized>(
    code: &C,
    count: u64,
    source: MessageSource,
    keep_values: bool,
) -> Result<AcslReport> {
    if count == 0 {
        return Err(Error::Usage("sample_count must be at least 1".into()));
    }
    const BLOCK: u64 = 1 << 16;
    let mut stream = StreamingSummary::default();
    let mut reservoir = Vec::with_capacity(RESERVOIR_SIZE.min(count as usize));
    let mut kept = keep_values.then(Vec::new);
    let mut start = 0;
    while start < count {
        let len = BLOCK.min(count - start);
        let block = acsl_values(code, source, start, len)?;
        for &v in &block {
            stream.push(v);
        }
        let room = RESERVOIR_SIZE - reservoir.len();
        reservoir.extend_from_slice(&block[..room.min(block.len())]);
        if let Some(k) = kept.as_mut() {
            k.extend_from_slice(&block);
        }
        start += len;
    }
    Ok(AcslReport {
        code_id: code.id().to_string(),
        population: Population::Sampled { source, count },
        values: kept,
        reservoir,
        summary: stream.finish()?,
    })
}
