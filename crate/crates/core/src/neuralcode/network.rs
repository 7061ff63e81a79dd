use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, softmax2, BatchNormStats, GradTape, Mode, Tensor2, Var};
use crate::streams::{counter_rng, stream_key, Domain};

/// Bits carried per softmax head. Fixed at one.
pub const MODULATION_FACTOR: usize = 1;

/// `(K, N, m_s)` with rate one half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeDimensions {
    pub k: usize,
    pub n: usize,
    pub ms: usize,
}

impl CodeDimensions {
    pub fn new(k: usize) -> Result<Self> {
        if k != 16 && k != 32 {
            return Err(Error::Config(format!("K must be 16 or 32, got {k}")));
        }
        Ok(Self {
            k,
            n: 2 * k,
            ms: MODULATION_FACTOR,
        })
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Encoder input width `K * m_s`.
    pub fn message_bits(&self) -> usize {
        self.k * self.ms
    }

    /// Real width of a codeword, `2N`.
    pub fn width(&self) -> usize {
        2 * self.n
    }
}

/// Message or coded bit string. Conversions to and from `u64` are MSB-first:
/// bit 0 of the vector is the most significant of the used bits, so integer
/// order equals lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    bits: Vec<u8>,
}

impl BitVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::Domain(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self { bits })
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![0; len] }
    }

    pub fn from_u64(value: u64, len: usize) -> Self {
        let bits = (0..len).map(|i| ((value >> (len - 1 - i)) & 1) as u8).collect();
        Self { bits }
    }

    pub fn to_u64(&self) -> u64 {
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn xor(&self, other: &BitVector) -> BitVector {
        let bits = self.bits.iter().zip(&other.bits).map(|(a, b)| a ^ b).collect();
        BitVector { bits }
    }
}

/// Decision rule: bit is 1 iff `P(1) > 0.5`; an exact tie decodes to 0.
pub fn harden(pairs: &[f64]) -> BitVector {
    let bits = pairs.chunks_exact(2).map(|p| u8::from(p[1] > 0.5)).collect();
    BitVector { bits }
}

/// Hardens each posterior row into an MSB-first integer.
pub fn harden_batch(posteriors: &Tensor2) -> Vec<u64> {
    posteriors
        .iter_rows()
        .map(|row| {
            row.chunks_exact(2)
                .fold(0u64, |acc, p| (acc << 1) | u64::from(p[1] > 0.5))
        })
        .collect()
}

/// Encoder input: bits mapped 0 -> -1, 1 -> +1.
pub fn messages_to_input(messages: &[u64], bits: usize) -> Tensor2 {
    let mut data = Vec::with_capacity(messages.len() * bits);
    for &m in messages {
        for i in 0..bits {
            data.push(if (m >> (bits - 1 - i)) & 1 == 1 { 1.0 } else { -1.0 });
        }
    }
    Tensor2::from_raw(messages.len(), bits, data)
}

/// Cross-entropy targets: one 0/1 column per bit.
pub fn messages_to_targets(messages: &[u64], bits: usize) -> Tensor2 {
    let mut data = Vec::with_capacity(messages.len() * bits);
    for &m in messages {
        for i in 0..bits {
            data.push(((m >> (bits - 1 - i)) & 1) as f64);
        }
    }
    Tensor2::from_raw(messages.len(), bits, data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `fan_in x fan_out`; rows are multiplied from the left by inputs.
    pub weight: Tensor2,
    pub bias: Tensor2,
}

impl Linear {
    fn init<R: Rng>(rng: &mut R, fan_in: usize, fan_out: usize) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let data = (0..fan_in * fan_out).map(|_| rng.random_range(-bound..bound)).collect();
        Self {
            weight: Tensor2::from_raw(fan_in, fan_out, data),
            bias: Tensor2::zeros(1, fan_out),
        }
    }

    fn forward(&self, x: &Tensor2) -> Result<Tensor2> {
        numerics::affine(&self.weight, &self.bias, x)
    }

    fn block_diagonal(&self) -> Self {
        let (r, c) = self.weight.shape();
        let mut w = Tensor2::zeros(2 * r, 2 * c);
        for i in 0..r {
            for j in 0..c {
                let v = self.weight.get(i, j);
                w.set(i, j, v);
                w.set(r + i, c + j, v);
            }
        }
        let b = [self.bias.data(), self.bias.data()].concat();
        Self {
            weight: w,
            bias: Tensor2::from_raw(1, 2 * c, b),
        }
    }
}

/// `Linear(Km_s, 2N) -> Linear(2N, 2N) -> tanh -> Linear(2N, 2N) -> tanh ->
/// Linear(2N, 2N) -> BatchNorm`, followed by per-codeword power normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub layers: [Linear; 4],
    pub bn: BatchNormStats,
}

/// `Linear(2N, 2N) -> Linear(2N, 2N) -> tanh -> Linear(2N, 2N) -> tanh ->
/// Linear(2N, 2Km_s) -> pairwise softmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    pub layers: [Linear; 4],
}

/// Which layers are followed by `tanh`, shared by both stacks.
const TANH_AFTER: [bool; 4] = [false, true, true, false];

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub dims: CodeDimensions,
    pub encoder: EncoderParams,
    pub decoder: DecoderParams,
}

/// How the encoder's batch-norm layer normalizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnPolicy {
    /// Batch moments, optionally folded into the running statistics.
    Batch { update_running: bool },
    /// Running statistics (inference).
    Running,
}

/// Output node plus the parameter leaves, in [`EncoderParams::tensors`] order.
pub struct TapeNet {
    pub out: Var,
    pub params: Vec<Var>,
}

impl EncoderParams {
    pub fn tensors(&self) -> Vec<&Tensor2> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect()
    }
}

impl DecoderParams {
    pub fn tensors(&self) -> Vec<&Tensor2> {
        self.layers.iter().flat_map(|l| [&l.weight, &l.bias]).collect()
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor2> {
        self.layers.iter_mut().flat_map(|l| [&mut l.weight, &mut l.bias]).collect()
    }
}

/// Uniform `±1/sqrt(fan_in)` weights and zero biases, drawn from `seed`.
pub fn init_network(dims: CodeDimensions, seed: u64) -> NetworkParams {
    let mut rng = counter_rng(stream_key(seed, Domain::Init, 0), 0);
    let w = dims.width();
    let kb = dims.message_bits();
    let enc = [(kb, w), (w, w), (w, w), (w, w)].map(|(i, o)| Linear::init(&mut rng, i, o));
    let dec = [(w, w), (w, w), (w, w), (w, 2 * kb)].map(|(i, o)| Linear::init(&mut rng, i, o));
    NetworkParams {
        dims,
        encoder: EncoderParams {
            layers: enc,
            bn: BatchNormStats::new(w),
        },
        decoder: DecoderParams { layers: dec },
    }
}

impl NetworkParams {
    fn check_messages(&self, input: &Tensor2) -> Result<()> {
        if input.cols() != self.dims.message_bits() {
            return Err(crate::error::shape_err(
                "encode",
                input.shape_str(),
                format!("{} message bits", self.dims.message_bits()),
            ));
        }
        if input.rows() == 0 {
            return Err(Error::Usage("encode needs a nonempty batch".into()));
        }
        Ok(())
    }

    fn encoder_trunk(&self, input: &Tensor2) -> Result<Tensor2> {
        let mut h = input.clone();
        for (layer, &act) in self.encoder.layers.iter().zip(&TANH_AFTER) {
            h = layer.forward(&h)?;
            if act {
                h = numerics::tanh_layer(&h);
            }
        }
        Ok(h)
    }

    /// Encodes a batch of ±1 input rows. Train mode folds the batch moments
    /// into the running statistics.
    pub fn encode_input(&mut self, input: &Tensor2, mode: Mode) -> Result<Tensor2> {
        self.check_messages(input)?;
        let h = self.encoder_trunk(input)?;
        let h = numerics::batch_norm(&h, &mut self.encoder.bn, mode)?;
        Ok(numerics::power_normalize(&h, self.dims.n as f64)?.0)
    }

    pub fn encode(&mut self, messages: &[u64], mode: Mode) -> Result<Tensor2> {
        let input = messages_to_input(messages, self.dims.message_bits());
        self.encode_input(&input, mode)
    }

    /// Inference-mode encoding; shares `&self` across threads.
    pub fn encode_eval(&self, messages: &[u64]) -> Result<Tensor2> {
        let input = messages_to_input(messages, self.dims.message_bits());
        self.check_messages(&input)?;
        let h = self.encoder_trunk(&input)?;
        let (shift, scale) = self.encoder.bn.eval_coefficients()?;
        let h = numerics::column_affine(&h, &shift, &scale);
        Ok(numerics::power_normalize(&h, self.dims.n as f64)?.0)
    }

    /// Bit posteriors `(P(0), P(1))` per message bit for each noisy row.
    pub fn decode(&self, noisy: &Tensor2) -> Result<Tensor2> {
        if noisy.cols() != self.dims.width() {
            return Err(crate::error::shape_err(
                "decode",
                noisy.shape_str(),
                format!("width {}", self.dims.width()),
            ));
        }
        let mut h = noisy.clone();
        for (layer, &act) in self.decoder.layers.iter().zip(&TANH_AFTER) {
            h = layer.forward(&h)?;
            if act {
                h = numerics::tanh_layer(&h);
            }
        }
        for pair in h.data_mut().chunks_exact_mut(2) {
            let (p0, p1) = softmax2(pair[0], pair[1]);
            pair[0] = p0;
            pair[1] = p1;
        }
        Ok(h)
    }

    /// Records the encoder on `tape`. Parameter leaves require gradients iff
    /// `trainable`.
    pub fn encoder_on_tape(
        &mut self,
        tape: &mut GradTape,
        input: Var,
        bn: BnPolicy,
        trainable: bool,
    ) -> Result<TapeNet> {
        self.check_messages(tape.value(input))?;
        let mut params = Vec::with_capacity(8);
        let mut h = input;
        for (layer, &act) in self.encoder.layers.iter().zip(&TANH_AFTER) {
            let w = tape.leaf(layer.weight.clone(), trainable);
            let b = tape.leaf(layer.bias.clone(), trainable);
            params.extend([w, b]);
            h = tape.affine(h, w, b)?;
            if act {
                h = tape.tanh(h);
            }
        }
        h = match bn {
            BnPolicy::Batch { update_running } => tape.batch_norm_train(h, &mut self.encoder.bn, update_running)?,
            BnPolicy::Running => tape.batch_norm_eval(h, &self.encoder.bn)?,
        };
        let out = tape.power_normalize(h, self.dims.n as f64)?;
        Ok(TapeNet { out, params })
    }

    /// Records the decoder on `tape`; the output node holds the posteriors.
    pub fn decoder_on_tape(&self, tape: &mut GradTape, input: Var, trainable: bool) -> Result<TapeNet> {
        let mut params = Vec::with_capacity(8);
        let mut h = input;
        for (layer, &act) in self.decoder.layers.iter().zip(&TANH_AFTER) {
            let w = tape.leaf(layer.weight.clone(), trainable);
            let b = tape.leaf(layer.bias.clone(), trainable);
            params.extend([w, b]);
            h = tape.affine(h, w, b)?;
            if act {
                h = tape.tanh(h);
            }
        }
        let out = tape.softmax_pairs(h)?;
        Ok(TapeNet { out, params })
    }

    pub fn is_finite(&self) -> bool {
        self.encoder.tensors().iter().all(|t| t.is_finite())
            && self.decoder.tensors().iter().all(|t| t.is_finite())
            && self.encoder.bn.mean.iter().chain(&self.encoder.bn.var).all(|v| v.is_finite())
    }

    pub fn parameter_count(&self) -> usize {
        self.encoder
            .tensors()
            .iter()
            .chain(self.decoder.tensors().iter())
            .map(|t| t.data().len())
            .sum()
    }
}

/// Lifts trained K=16 parameters to K=32 so that the encoder realizes the
/// concatenated code `[g16(m0), g16(m1)]`: every weight becomes
/// `diag(W16, W16)`, every bias `[b16, b16]`, and the batch-norm statistics
/// are tiled.
pub fn concat_init(params16: &NetworkParams) -> Result<NetworkParams> {
    if params16.dims.k != 16 {
        return Err(Error::Dimension {
            expected: 16,
            found: params16.dims.k,
        });
    }
    let lift = |layers: &[Linear; 4]| -> [Linear; 4] { std::array::from_fn(|i| layers[i].block_diagonal()) };
    let bn = &params16.encoder.bn;
    Ok(NetworkParams {
        dims: CodeDimensions::new(32)?,
        encoder: EncoderParams {
            layers: lift(&params16.encoder.layers),
            bn: BatchNormStats {
                mean: [bn.mean.as_slice(), bn.mean.as_slice()].concat(),
                var: [bn.var.as_slice(), bn.var.as_slice()].concat(),
                initialized: bn.initialized,
            },
        },
        decoder: DecoderParams {
            layers: lift(&params16.decoder.layers),
        },
    })
}
