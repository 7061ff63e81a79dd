//! Polar code with a random bit interleaver and BPSK mapping.
//!
//! Construction uses the Bhattacharyya recursion on BEC(1/2); the generator
//! is `F^{(x)n}` with `F = [[1, 0], [1, 1]]` in natural (non-bit-reversed)
//! order; decoding is successive cancellation with the min-sum check rule.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acf::Codeword;
use crate::error::{shape_err, Error, Result};
use crate::neuralcode::BitVector;
use crate::numerics::Tensor2;
use crate::streams::{counter_rng, stream_key, Domain};

/// Interleaver seed used when none is given.
pub const DEFAULT_INTERLEAVER_SEED: u64 = 2024;

/// Stand-in for an infinite LLR when the channel is noiseless.
pub const LLR_SATURATION: f64 = 1e30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarCodeSpec {
    pub n_bits: usize,
    pub k: usize,
    /// Sorted indices of the information bit-channels.
    pub info_set: Vec<usize>,
    pub interleaver_seed: u64,
    /// Interleaved position `i` carries coded bit `permutation[i]`.
    pub permutation: Vec<usize>,
}

/// Bhattacharyya parameters of the `n` synthesized channels of BEC(1/2).
pub fn bhattacharyya(n: usize) -> Vec<f64> {
    let mut z = vec![0.5];
    while z.len() < n {
        z = z.iter().flat_map(|&v| [2.0 * v - v * v, v * v]).collect();
    }
    z
}

fn fisher_yates(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = counter_rng(stream_key(seed, Domain::Interleaver, n as u64), 0);
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

pub fn polar_construct(n_bits: usize, k: usize) -> Result<PolarCodeSpec> {
    polar_construct_with_seed(n_bits, k, DEFAULT_INTERLEAVER_SEED)
}

/// Picks the `k` channels with the smallest Bhattacharyya parameter (ties go
/// to the smaller index) and draws the interleaver from `interleaver_seed`.
pub fn polar_construct_with_seed(n_bits: usize, k: usize, interleaver_seed: u64) -> Result<PolarCodeSpec> {
    if !n_bits.is_power_of_two() || n_bits < 2 {
        return Err(Error::Domain(format!("polar length {n_bits} is not a power of two >= 2")));
    }
    if k == 0 || k > n_bits {
        return Err(Error::Domain(format!("need 0 < k <= {n_bits}, got {k}")));
    }
    let z = bhattacharyya(n_bits);
    let mut order: Vec<usize> = (0..n_bits).collect();
    order.sort_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)));
    let mut info_set = order[..k].to_vec();
    info_set.sort_unstable();
    Ok(PolarCodeSpec {
        n_bits,
        k,
        info_set,
        interleaver_seed,
        permutation: fisher_yates(n_bits, interleaver_seed),
    })
}

/// In-place `x = u F^{(x)n}` over GF(2).
fn polar_transform(x: &mut [u8]) {
    let n = x.len();
    let mut s = 1;
    while s < n {
        for block in (0..n).step_by(2 * s) {
            for j in block..block + s {
                x[j] ^= x[j + s];
            }
        }
        s *= 2;
    }
}

impl PolarCodeSpec {
    pub fn frozen_mask(&self) -> Vec<bool> {
        let mut frozen = vec![true; self.n_bits];
        for &i in &self.info_set {
            frozen[i] = false;
        }
        frozen
    }

    /// Coded bits (before interleaving) for a message given MSB-first.
    pub fn encode_u64(&self, message: u64) -> Vec<u8> {
        let mut u = vec![0u8; self.n_bits];
        for (i, &pos) in self.info_set.iter().enumerate() {
            u[pos] = ((message >> (self.k - 1 - i)) & 1) as u8;
        }
        polar_transform(&mut u);
        u
    }

    /// Interleaved BPSK codeword for a message, as interleaved reals.
    pub fn transmit_u64(&self, message: u64, out: &mut [f64]) {
        let coded = self.encode_u64(message);
        for (i, &src) in self.permutation.iter().enumerate() {
            out[2 * i] = if coded[src] == 0 { 1.0 } else { -1.0 };
            out[2 * i + 1] = 0.0;
        }
    }
}

pub fn polar_encode(spec: &PolarCodeSpec, message: &BitVector) -> Result<BitVector> {
    if message.len() != spec.k {
        return Err(shape_err("polar_encode", format!("{} message bits", message.len()), format!("k = {}", spec.k)));
    }
    let mut u = vec![0u8; spec.n_bits];
    for (&pos, &b) in spec.info_set.iter().zip(message.bits()) {
        u[pos] = b;
    }
    polar_transform(&mut u);
    BitVector::new(u)
}

fn check_len(op: &'static str, spec: &PolarCodeSpec, len: usize) -> Result<()> {
    if len != spec.n_bits {
        return Err(shape_err(op, format!("length {len}"), format!("n_bits = {}", spec.n_bits)));
    }
    Ok(())
}

pub fn interleave(spec: &PolarCodeSpec, bits: &BitVector) -> Result<BitVector> {
    check_len("interleave", spec, bits.len())?;
    BitVector::new(spec.permutation.iter().map(|&p| bits.bits()[p]).collect())
}

pub fn deinterleave(spec: &PolarCodeSpec, llrs: &[f64]) -> Result<Vec<f64>> {
    check_len("deinterleave", spec, llrs.len())?;
    let mut out = vec![0.0; llrs.len()];
    for (i, &p) in spec.permutation.iter().enumerate() {
        out[p] = llrs[i];
    }
    Ok(out)
}

/// Bit 0 maps to +1, bit 1 to -1.
pub fn bpsk_modulate(bits: &BitVector) -> Codeword {
    let v: Vec<f64> = bits.bits().iter().map(|&b| if b == 0 { 1.0 } else { -1.0 }).collect();
    Codeword::from_real(&v)
}

/// `LLR = log P(0)/P(1) = 4 Re(c_hat) / sigma^2`. With `sigma^2 = 0` the
/// LLRs saturate with the sign of the real part.
pub fn bpsk_llrs(noisy: &[f64], sigma2: f64) -> Vec<f64> {
    noisy
        .chunks_exact(2)
        .map(|s| {
            if sigma2 > 0.0 {
                4.0 * s[0] / sigma2
            } else if s[0] == 0.0 {
                0.0
            } else {
                LLR_SATURATION.copysign(s[0])
            }
        })
        .collect()
}

/// Successive-cancellation decoder with reusable scratch buffers.
pub struct ScDecoder<'a> {
    spec: &'a PolarCodeSpec,
    frozen: Vec<bool>,
    u: Vec<u8>,
    x: Vec<u8>,
    scratch: Vec<f64>,
    llr: Vec<f64>,
}

impl<'a> ScDecoder<'a> {
    pub fn new(spec: &'a PolarCodeSpec) -> Self {
        let n = spec.n_bits;
        Self {
            spec,
            frozen: spec.frozen_mask(),
            u: vec![0; n],
            x: vec![0; n],
            scratch: vec![0.0; n],
            llr: vec![0.0; n],
        }
    }

    /// Decodes LLRs in coded-bit order and returns the message, MSB-first.
    pub fn decode_u64(&mut self, llrs: &[f64]) -> u64 {
        sc_recurse(llrs, &self.frozen, &mut self.u, &mut self.x, &mut self.scratch);
        self.spec
            .info_set
            .iter()
            .fold(0u64, |acc, &pos| (acc << 1) | self.u[pos] as u64)
    }

    /// Demodulates, deinterleaves and decodes one noisy BPSK codeword.
    pub fn decode_noisy(&mut self, noisy: &[f64], sigma2: f64) -> u64 {
        let raw = bpsk_llrs(noisy, sigma2);
        for (i, &p) in self.spec.permutation.iter().enumerate() {
            self.llr[p] = raw[i];
        }
        let llr = std::mem::take(&mut self.llr);
        let m = self.decode_u64(&llr);
        self.llr = llr;
        m
    }
}

#[inline]
fn min_sum(a: f64, b: f64) -> f64 {
    let m = a.abs().min(b.abs());
    if (a < 0.0) != (b < 0.0) {
        -m
    } else {
        m
    }
}

/// Decodes `u` for a block whose codeword is `[v_a ^ v_b, v_b]`, writing
/// the re-encoded partial sums to `x`.
fn sc_recurse(llr: &[f64], frozen: &[bool], u: &mut [u8], x: &mut [u8], scratch: &mut [f64]) {
    let n = llr.len();
    if n == 1 {
        let bit = if frozen[0] || llr[0] >= 0.0 { 0 } else { 1 };
        u[0] = bit;
        x[0] = bit;
        return;
    }
    let half = n / 2;
    let (child, rest) = scratch.split_at_mut(half);
    for i in 0..half {
        child[i] = min_sum(llr[i], llr[i + half]);
    }
    let (x_a, x_b) = x.split_at_mut(half);
    let (u_a, u_b) = u.split_at_mut(half);
    sc_recurse(child, &frozen[..half], u_a, x_a, rest);
    for i in 0..half {
        let sign = if x_a[i] == 0 { 1.0 } else { -1.0 };
        child[i] = llr[i + half] + sign * llr[i];
    }
    sc_recurse(child, &frozen[half..], u_b, x_b, rest);
    for i in 0..half {
        x_a[i] ^= x_b[i];
    }
}

pub fn polar_sc_decode(spec: &PolarCodeSpec, llrs: &[f64]) -> Result<BitVector> {
    check_len("polar_sc_decode", spec, llrs.len())?;
    let m = ScDecoder::new(spec).decode_u64(llrs);
    Ok(BitVector::from_u64(m, spec.k))
}

/// Interleaved-BPSK encoding of a batch of messages, one codeword per row.
pub fn polar_bpsk_batch(spec: &PolarCodeSpec, messages: &[u64]) -> Tensor2 {
    let width = 2 * spec.n_bits;
    let mut data = vec![0.0; messages.len() * width];
    for (row, &m) in data.chunks_exact_mut(width).zip(messages) {
        spec.transmit_u64(m, row);
    }
    Tensor2::from_raw(messages.len(), width, data)
}
