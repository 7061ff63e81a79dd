//! Complex AWGN channel, `c_hat = c + z` with `z ~ CN(0, sigma^2 I)`.
//!
//! SNR is per-symbol Es/N0 with unit average symbol energy, so
//! `sigma^2 = 10^(-snr_db / 10)`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::numerics::Tensor2;
use crate::streams::{counter_rng, stream_key, Domain};

pub fn snr_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub snr_db: f64,
    pub sigma2: f64,
    pub seed: u64,
    /// Separates independent noise campaigns under one seed (e.g. SNR points).
    pub stream: u64,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, seed: u64, stream: u64) -> Self {
        Self {
            snr_db,
            sigma2: snr_to_sigma2(snr_db),
            seed,
            stream,
        }
    }

    /// Noiseless channel.
    pub fn noiseless() -> Self {
        Self {
            snr_db: f64::INFINITY,
            sigma2: 0.0,
            seed: 0,
            stream: 0,
        }
    }

    /// Same seed and stream, different noise level: the underlying unit
    /// normals are shared.
    pub fn with_snr(self, snr_db: f64) -> Self {
        Self {
            snr_db,
            sigma2: snr_to_sigma2(snr_db),
            ..self
        }
    }
}

/// Fills `out` with complex Gaussian noise of variance `sigma2` per symbol
/// (each real component has variance `sigma2 / 2`).
pub fn fill_noise<R: Rng>(rng: &mut R, sigma2: f64, out: &mut [f64]) {
    let sd = (sigma2 / 2.0).sqrt();
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = sd * z;
    }
}

/// Adds noise to a batch of interleaved codewords. Row `r` draws from the
/// stream of message index `first_index + r`, so results do not depend on
/// how a campaign is split into batches.
pub fn awgn(codewords: &Tensor2, cfg: &ChannelConfig, first_index: u64) -> Tensor2 {
    let mut out = codewords.clone();
    if cfg.sigma2 == 0.0 {
        return out;
    }
    let key = stream_key(cfg.seed, Domain::Noise, cfg.stream);
    let mut noise = vec![0.0; codewords.cols()];
    for r in 0..codewords.rows() {
        let mut rng = counter_rng(key, first_index + r as u64);
        fill_noise(&mut rng, cfg.sigma2, &mut noise);
        for (v, z) in out.row_mut(r).iter_mut().zip(&noise) {
            *v += z;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_conversion() {
        assert_eq!(snr_to_sigma2(0.0), 1.0);
        assert!((snr_to_sigma2(3.0) - 0.501_187_233_627_272_3).abs() < 1e-15);
        assert!((snr_to_sigma2(6.0) - 0.251_188_643_150_958).abs() < 1e-15);
    }

    #[test]
    fn zero_noise_is_identity() {
        let c = Tensor2::from_rows(&[[1.0, -1.0, 0.5, 0.25]]).unwrap();
        assert_eq!(awgn(&c, &ChannelConfig::noiseless(), 0), c);
    }

    #[test]
    fn deterministic_and_batch_split_invariant() {
        let c = Tensor2::zeros(6, 8);
        let cfg = ChannelConfig::new(3.0, 42, 0);
        let full = awgn(&c, &cfg, 100);
        assert_eq!(full, awgn(&c, &cfg, 100));
        let head = awgn(&Tensor2::zeros(2, 8), &cfg, 100);
        let tail = awgn(&Tensor2::zeros(4, 8), &cfg, 102);
        assert_eq!(Tensor2::vstack(&[head, tail]).unwrap(), full);
    }

    #[test]
    fn empirical_moments() {
        // 10^6 complex samples at sigma^2 = 0.5
        let sigma2: f64 = 0.5;
        let rows = 31_250;
        let c = Tensor2::zeros(rows, 64);
        let cfg = ChannelConfig { snr_db: 3.0103, sigma2, seed: 9, stream: 0 };
        let z = awgn(&c, &cfg, 0);
        let n = (rows * 32) as f64;
        let power: f64 = z.data().iter().map(|v| v * v).sum::<f64>() / n;
        assert!((power - sigma2).abs() / sigma2 < 0.01, "{power}");
        let mean_re: f64 = z.data().iter().step_by(2).sum::<f64>() / n;
        let mean_im: f64 = z.data().iter().skip(1).step_by(2).sum::<f64>() / n;
        let bound = 3.0 * (sigma2 / 2.0).sqrt() / n.sqrt();
        assert!(mean_re.abs() < bound && mean_im.abs() < bound);
    }
}
