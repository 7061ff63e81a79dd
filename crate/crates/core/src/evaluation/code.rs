use crate::baselines::{polar_bpsk_batch, polar_construct, PolarCodeSpec, ScDecoder};
use crate::error::{Error, Result};
use crate::neuralcode::{harden_batch, Checkpoint, NetworkParams};
use crate::numerics::Tensor2;

/// A code that maps K-bit messages to `symbols()` complex symbols and back.
pub trait CodeUnderTest: Sync {
    fn id(&self) -> &str;
    fn message_bits(&self) -> usize;
    fn symbols(&self) -> usize;
    /// One interleaved codeword per row.
    fn encode_batch(&self, messages: &[u64]) -> Result<Tensor2>;
    /// Hard message decisions for noisy rows at noise variance `sigma2`.
    fn decode_batch(&self, noisy: &Tensor2, sigma2: f64) -> Result<Vec<u64>>;
}

/// Trained autoencoder evaluated with inference-mode batch norm.
pub struct MlCode {
    id: String,
    params: NetworkParams,
}

impl MlCode {
    pub fn new(id: impl Into<String>, params: NetworkParams) -> Result<Self> {
        if !params.encoder.bn.initialized {
            return Err(Error::State("network has no batch-norm running statistics".into()));
        }
        Ok(Self { id: id.into(), params })
    }

    pub fn from_checkpoint(id: impl Into<String>, ck: &Checkpoint) -> Result<Self> {
        Self::new(id, ck.params.clone())
    }

    pub fn params(&self) -> &NetworkParams {
        &self.params
    }
}

impl CodeUnderTest for MlCode {
    fn id(&self) -> &str {
        &self.id
    }

    fn message_bits(&self) -> usize {
        self.params.dims.message_bits()
    }

    fn symbols(&self) -> usize {
        self.params.dims.n
    }

    fn encode_batch(&self, messages: &[u64]) -> Result<Tensor2> {
        self.params.encode_eval(messages)
    }

    fn decode_batch(&self, noisy: &Tensor2, _sigma2: f64) -> Result<Vec<u64>> {
        Ok(harden_batch(&self.params.decode(noisy)?))
    }
}

/// Polar code of length `2K` with a random interleaver, BPSK and SC decoding.
pub struct PolarBpsk {
    id: String,
    spec: PolarCodeSpec,
}

impl PolarBpsk {
    pub fn new(id: impl Into<String>, spec: PolarCodeSpec) -> Self {
        Self { id: id.into(), spec }
    }

    /// Rate-1/2 code for `k` message bits with the default interleaver.
    pub fn rate_half(k: usize) -> Result<Self> {
        Ok(Self::new(format!("polar_k{k}"), polar_construct(2 * k, k)?))
    }

    pub fn spec(&self) -> &PolarCodeSpec {
        &self.spec
    }
}

impl CodeUnderTest for PolarBpsk {
    fn id(&self) -> &str {
        &self.id
    }

    fn message_bits(&self) -> usize {
        self.spec.k
    }

    fn symbols(&self) -> usize {
        self.spec.n_bits
    }

    fn encode_batch(&self, messages: &[u64]) -> Result<Tensor2> {
        Ok(polar_bpsk_batch(&self.spec, messages))
    }

    fn decode_batch(&self, noisy: &Tensor2, sigma2: f64) -> Result<Vec<u64>> {
        if noisy.cols() != 2 * self.spec.n_bits {
            return Err(crate::error::shape_err(
                "polar decode",
                noisy.shape_str(),
                format!("width {}", 2 * self.spec.n_bits),
            ));
        }
        let mut dec = ScDecoder::new(&self.spec);
        Ok(noisy.iter_rows().map(|row| dec.decode_noisy(row, sigma2)).collect())
    }
}
