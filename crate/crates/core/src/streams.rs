//! Counter-based random streams.
//!
//! Every random draw in training and evaluation comes from a ChaCha8 stream
//! keyed by `(seed, domain)` and selected by a 64-bit stream index (for
//! example the message index). Any sharding of the index range therefore
//! reproduces the same values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent purposes that draw from the same user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Messages = 0x6d65_7373_6167_6573,
    Noise = 0x6e6f_6973_6500_0000,
    Training = 0x7472_6169_6e00_0000,
    Init = 0x696e_6974_0000_0000,
    Interleaver = 0x696c_7600_0000_0000,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key for a `(seed, domain, sub)` triple; `sub` separates e.g. SNR points.
pub fn stream_key(seed: u64, domain: Domain, sub: u64) -> u64 {
    splitmix64(splitmix64(seed ^ domain as u64) ^ splitmix64(sub.wrapping_add(1)))
}

pub fn counter_rng(key: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream);
    rng
}

/// The `index`-th message of `bits` uniform bits for a given seed.
pub fn message_at(seed: u64, index: u64, bits: usize) -> u64 {
    let mut rng = counter_rng(stream_key(seed, Domain::Messages, 0), index);
    let v: u64 = rng.random();
    if bits >= 64 {
        v
    } else {
        v & ((1u64 << bits) - 1)
    }
}
