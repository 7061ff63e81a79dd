//! Reference codes: Polar + bit-interleaved BPSK for communications and
//! Zadoff-Chu sequences for sensing.

mod polar;
mod zc;

pub use polar::{
    bhattacharyya, bpsk_llrs, bpsk_modulate, deinterleave, interleave, polar_bpsk_batch, polar_construct,
    polar_construct_with_seed, polar_encode, polar_sc_decode, PolarCodeSpec, ScDecoder, DEFAULT_INTERLEAVER_SEED,
    LLR_SATURATION,
};
pub use zc::{zc_enumerate, ZcSequence};
