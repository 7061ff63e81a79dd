//! Alternating encoder/decoder training with an SNR curriculum.

use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{fill_noise, snr_to_sigma2};
use crate::error::{Error, Result};
use crate::neuralcode::{
    concat_init, init_network, load_checkpoint_for, messages_to_input, messages_to_targets, BnPolicy, Checkpoint,
    CodeDimensions, NetworkParams,
};
use crate::numerics::{AdamState, GradTape, PlateauScheduler, Tensor2, DECAY, INITIAL_LR, MIN_LR, PATIENCE, REL_THRESHOLD};
use crate::objective::{loss_on_tape, LossBreakdown, LossConfig};
use crate::streams::{counter_rng, stream_key, Domain};

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub snr_db: f64,
    pub total: f64,
    pub sensing: f64,
    pub comms: f64,
}

impl EpochRecord {
    pub fn as_array(&self) -> [f64; 6] {
        [self.epoch as f64, self.lr, self.snr_db, self.total, self.sensing, self.comms]
    }

    /// Inverse of [`EpochRecord::as_array`]; expects at least six values.
    pub fn from_slice(v: &[f64]) -> Self {
        Self {
            epoch: v[0] as usize,
            lr: v[1],
            snr_db: v[2],
            total: v[3],
            sensing: v[4],
            comms: v[5],
        }
    }
}

pub type TrainingHistory = Vec<EpochRecord>;

/// Training SNR from `start_epoch` until the next segment begins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnrSegment {
    pub start_epoch: usize,
    pub snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Fresh,
    /// Lift a trained K=16 checkpoint to K=32.
    Concat(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerSettings {
    pub patience: u32,
    pub decay: f64,
    pub min_lr: f64,
    pub rel_threshold: f64,
}

impl Default for SchedulerSettings {
    fn default() -> Self {
        Self {
            patience: PATIENCE,
            decay: DECAY,
            min_lr: MIN_LR,
            rel_threshold: REL_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingConfig {
    pub k: usize,
    pub lambda: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub n_enc: usize,
    pub n_dec: usize,
    pub snr_schedule: Vec<SnrSegment>,
    pub initial_lr: f64,
    #[serde(default)]
    pub scheduler: SchedulerSettings,
    pub seed: u64,
    pub init: InitKind,
}

impl TrainingConfig {
    /// K=16 from scratch: 3 dB for 200 epochs, then 6 dB.
    pub fn k16(lambda: f64, seed: u64) -> Self {
        Self {
            k: 16,
            lambda,
            batch_size: 1000,
            epochs: 400,
            n_enc: 10,
            n_dec: 50,
            snr_schedule: vec![
                SnrSegment { start_epoch: 0, snr_db: 3.0 },
                SnrSegment { start_epoch: 200, snr_db: 6.0 },
            ],
            initial_lr: INITIAL_LR,
            scheduler: SchedulerSettings::default(),
            seed,
            init: InitKind::Fresh,
        }
    }

    /// K=32 initialized from a K=16 checkpoint, 3 dB throughout.
    pub fn k32_concat(lambda: f64, source: PathBuf, seed: u64) -> Self {
        Self {
            k: 32,
            snr_schedule: vec![SnrSegment { start_epoch: 0, snr_db: 3.0 }],
            init: InitKind::Concat(source),
            ..Self::k16(lambda, seed)
        }
    }

    pub fn dims(&self) -> Result<CodeDimensions> {
        CodeDimensions::new(self.k)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims()?;
        LossConfig::new(self.lambda)?;
        let bad = |msg: String| Err(Error::Config(msg));
        if self.batch_size < 2 {
            return bad(format!("batch_size must be at least 2, got {}", self.batch_size));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.n_enc == 0 || self.n_dec == 0 {
            return bad(format!("n_enc and n_dec must be >= 1, got ({}, {})", self.n_enc, self.n_dec));
        }
        match self.snr_schedule.first() {
            Some(s) if s.start_epoch == 0 => {}
            _ => return bad("snr_schedule must start at epoch 0".into()),
        }
        if self.snr_schedule.windows(2).any(|w| w[1].start_epoch <= w[0].start_epoch) {
            return bad("snr_schedule start epochs must increase strictly".into());
        }
        if self.snr_schedule.iter().any(|s| !s.snr_db.is_finite()) {
            return bad("snr_schedule holds a non-finite SNR".into());
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad(format!("initial_lr must be positive, got {}", self.initial_lr));
        }
        let s = &self.scheduler;
        if s.patience == 0 || !(s.decay > 0.0 && s.decay <= 1.0) || !(s.min_lr >= 0.0) || !(s.rel_threshold >= 0.0) {
            return bad(format!("invalid scheduler settings {s:?}"));
        }
        if matches!(self.init, InitKind::Concat(_)) && self.k != 32 {
            return bad("concat initialization produces K=32; set k = 32".into());
        }
        Ok(())
    }

    fn new_scheduler(&self) -> PlateauScheduler {
        let s = &self.scheduler;
        PlateauScheduler {
            patience: s.patience,
            decay: s.decay,
            min_lr: s.min_lr,
            rel_threshold: s.rel_threshold,
            ..PlateauScheduler::new(self.initial_lr)
        }
    }
}

pub fn snr_at_epoch(cfg: &TrainingConfig, epoch: usize) -> Result<f64> {
    if epoch >= cfg.epochs {
        return Err(Error::Domain(format!("epoch {epoch} is outside 0..{}", cfg.epochs)));
    }
    cfg.snr_schedule
        .iter()
        .rev()
        .find(|s| s.start_epoch <= epoch)
        .map(|s| s.snr_db)
        .ok_or_else(|| Error::Config("snr_schedule does not cover epoch 0".into()))
}

/// Network plus the two persistent optimizer states.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: NetworkParams,
    pub enc_adam: AdamState,
    pub dec_adam: AdamState,
}

impl TrainState {
    pub fn new(params: NetworkParams) -> Self {
        let enc_adam = AdamState::for_params(&params.encoder.tensors());
        let dec_adam = AdamState::for_params(&params.decoder.tensors());
        Self {
            params,
            enc_adam,
            dec_adam,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Encoder,
    Decoder,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Encoder => "encoder",
            Phase::Decoder => "decoder",
        }
    }
}

/// One optimizer step on the active sub-network.
fn train_step(
    state: &mut TrainState,
    loss_cfg: &LossConfig,
    phase: Phase,
    messages: &[u64],
    noise: &Tensor2,
    lr: f64,
) -> Result<LossBreakdown> {
    let bits = state.params.dims.message_bits();
    let encoder_active = phase == Phase::Encoder;
    let mut tape = GradTape::new();
    let input = tape.leaf(messages_to_input(messages, bits), false);
    let enc = state.params.encoder_on_tape(
        &mut tape,
        input,
        BnPolicy::Batch {
            update_running: encoder_active,
        },
        encoder_active,
    )?;
    let noise = tape.leaf(noise.clone(), false);
    let noisy = tape.add(enc.out, noise)?;
    let dec = state.params.decoder_on_tape(&mut tape, noisy, !encoder_active)?;
    let targets = messages_to_targets(messages, bits);
    let vars = loss_on_tape(&mut tape, loss_cfg, enc.out, dec.out, &targets)?;
    let breakdown = vars.breakdown(&tape);
    if !breakdown.total.is_finite() {
        return Ok(breakdown);
    }
    let grads = tape.backward(vars.total, 1.0)?;
    match phase {
        Phase::Encoder => {
            let g: Vec<Tensor2> = enc
                .params
                .iter()
                .zip(state.params.encoder.tensors())
                .map(|(&v, p)| grads.wrt_or_zeros(v, p))
                .collect();
            state.enc_adam.step(&mut state.params.encoder.tensors_mut(), &g, lr)?;
        }
        Phase::Decoder => {
            let g: Vec<Tensor2> = dec
                .params
                .iter()
                .zip(state.params.decoder.tensors())
                .map(|(&v, p)| grads.wrt_or_zeros(v, p))
                .collect();
            state.dec_adam.step(&mut state.params.decoder.tensors_mut(), &g, lr)?;
        }
    }
    Ok(breakdown)
}

/// Runs `n_enc` encoder steps then `n_dec` decoder steps. Iteration `i` of
/// epoch `e` draws its messages and noise from stream `(e << 32) | i`.
pub fn run_epoch(state: &mut TrainState, cfg: &TrainingConfig, epoch: usize, lr: f64) -> Result<EpochRecord> {
    let snr_db = snr_at_epoch(cfg, epoch)?;
    let sigma2 = snr_to_sigma2(snr_db);
    let loss_cfg = LossConfig::new(cfg.lambda)?;
    let dims = state.params.dims;
    let bits = dims.message_bits();
    let mask = if bits >= 64 { u64::MAX } else { (1u64 << bits) - 1 };
    let key = stream_key(cfg.seed, Domain::Training, 0);

    let steps = cfg.n_enc + cfg.n_dec;
    let (mut total, mut sensing, mut comms) = (0.0, 0.0, 0.0);
    let mut noise = Tensor2::zeros(cfg.batch_size, dims.width());
    for it in 0..steps {
        let phase = if it < cfg.n_enc { Phase::Encoder } else { Phase::Decoder };
        let mut rng = counter_rng(key, ((epoch as u64) << 32) | it as u64);
        let messages: Vec<u64> = (0..cfg.batch_size).map(|_| rng.random::<u64>() & mask).collect();
        fill_noise(&mut rng, sigma2, noise.data_mut());
        let l = train_step(state, &loss_cfg, phase, &messages, &noise, lr)?;
        if !l.total.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                iteration: it,
                phase: phase.name(),
                sensing: l.sensing,
                comms: l.comms,
                lr,
            });
        }
        total += l.total;
        sensing += l.sensing;
        comms += l.comms;
    }
    let n = steps as f64;
    Ok(EpochRecord {
        epoch,
        lr,
        snr_db,
        total: total / n,
        sensing: sensing / n,
        comms: comms / n,
    })
}

/// Initial parameters for a config: fresh or lifted from a K=16 checkpoint.
pub fn initial_params(cfg: &TrainingConfig) -> Result<NetworkParams> {
    match &cfg.init {
        InitKind::Fresh => Ok(init_network(cfg.dims()?, cfg.seed)),
        InitKind::Concat(path) => concat_init(&load_checkpoint_for(path, 16)?.params),
    }
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub history: TrainingHistory,
}

/// Trains from scratch (or concat init). `on_epoch` sees a checkpoint after
/// every epoch, e.g. for periodic saving or progress output.
pub fn train<F>(cfg: &TrainingConfig, config_snapshot: &str, mut on_epoch: F) -> Result<TrainOutcome>
where
    F: FnMut(&Checkpoint) -> Result<()>,
{
    cfg.validate()?;
    let mut state = TrainState::new(initial_params(cfg)?);
    let mut scheduler = cfg.new_scheduler();
    let mut history = Vec::with_capacity(cfg.epochs);
    let snapshot = |params: &NetworkParams, scheduler: &PlateauScheduler, history: &[EpochRecord]| Checkpoint {
        dims: params.dims,
        lambda: cfg.lambda,
        seed: cfg.seed,
        epochs: history.len(),
        params: params.clone(),
        scheduler: scheduler.clone(),
        history: history.to_vec(),
        config: config_snapshot.to_string(),
    };
    for epoch in 0..cfg.epochs {
        let record = run_epoch(&mut state, cfg, epoch, scheduler.lr)?;
        scheduler.step(record.total);
        history.push(record);
        on_epoch(&snapshot(&state.params, &scheduler, &history))?;
    }
    let checkpoint = snapshot(&state.params, &scheduler, &history);
    Ok(TrainOutcome { checkpoint, history })
}

/// Loss of a trained network on given messages and noise, with inference-
/// mode batch norm.
pub fn evaluate_loss(params: &NetworkParams, lambda: f64, messages: &[u64], noise: &Tensor2) -> Result<LossBreakdown> {
    let cfg = LossConfig::new(lambda)?;
    let codewords = params.encode_eval(messages)?;
    let mut noisy = codewords.clone();
    if noise.shape() != noisy.shape() {
        return Err(crate::error::shape_err("evaluate_loss", noise.shape_str(), codewords.shape_str()));
    }
    for (v, z) in noisy.data_mut().iter_mut().zip(noise.data()) {
        *v += z;
    }
    let posteriors = params.decode(&noisy)?;
    let targets = messages_to_targets(messages, params.dims.message_bits());
    crate::objective::loss(&cfg, &codewords, &posteriors, &targets)
}
