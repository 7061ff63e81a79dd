//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.
//!
//! Criteria that depend on trained models read the checkpoints shipped under
//! `artifacts/` (produced by `isac train configs/<name>.toml`). A missing
//! artifact is a failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use isac_core::acf::{acf_fft_oracle, periodic_acf, Codeword};
use isac_core::baselines::{polar_construct, zc_enumerate, ScDecoder};
use isac_core::channel::{awgn, fill_noise, snr_to_sigma2, ChannelConfig};
use isac_core::evaluation::report::{write_ber, write_summary, SummaryRow};
use isac_core::evaluation::{
    acsl_exhaustive, acsl_sampled, acsl_values, ber_curve, pooled_standard_error, snr_stream, BerCurve, CodeUnderTest,
    MessageSource, MlCode, PolarBpsk, DEFAULT_EVAL_SEED,
};
use isac_core::neuralcode::{
    concat_init, init_network, load_checkpoint, messages_to_input, messages_to_targets, BnPolicy, Checkpoint,
    CodeDimensions, NetworkParams,
};
use isac_core::numerics::{GradTape, Tensor2};
use isac_core::objective::{loss_on_tape, LossConfig};
use isac_core::streams::message_at;
use isac_core::training::{evaluate_loss, train, TrainingConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const MESSAGES: u64 = 1_000_000;
const BER_GRID: [f64; 10] = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];

fn artifact(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../artifacts")
        .join(name)
        .join("checkpoint.ckpt")
}

fn load(name: &str) -> Result<Checkpoint, String> {
    let path = artifact(name);
    load_checkpoint(&path).map_err(|e| format!("trained artifact unavailable ({e})"))
}

fn ml(name: &str) -> Result<MlCode, String> {
    MlCode::from_checkpoint(name, &load(name)?).map_err(|e| e.to_string())
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Lazily computed results shared between criteria.
#[derive(Default)]
struct Shared {
    polar16_median: Option<f64>,
    ber: Vec<(String, BerCurve)>,
}

impl Shared {
    fn polar16_median(&mut self) -> Result<f64, String> {
        if let Some(m) = self.polar16_median {
            return Ok(m);
        }
        let r = acsl_exhaustive(&PolarBpsk::rate_half(16).unwrap()).map_err(|e| e.to_string())?;
        self.polar16_median = Some(r.summary.median);
        Ok(r.summary.median)
    }

    fn ber(&mut self, name: &str) -> Result<BerCurve, String> {
        if let Some((_, c)) = self.ber.iter().find(|(n, _)| n == name) {
            return Ok(c.clone());
        }
        let curve = if name == "polar_k16" {
            ber_curve(&PolarBpsk::rate_half(16).unwrap(), &BER_GRID, MESSAGES, DEFAULT_EVAL_SEED)
        } else {
            ber_curve(&ml(name)?, &BER_GRID, MESSAGES, DEFAULT_EVAL_SEED)
        }
        .map_err(|e| e.to_string())?;
        self.ber.push((name.to_string(), curve.clone()));
        Ok(curve)
    }
}

fn c1_zadoff_chu(_: &mut Shared) -> Outcome {
    let seqs = zc_enumerate(32).map_err(|e| e.to_string())?;
    let worst = seqs
        .iter()
        .map(|z| periodic_acf(&z.codeword()).unwrap().max_sidelobe())
        .fold(0.0, f64::max);
    check(
        seqs.len() == 16 && worst < 1e-10,
        format!("{} sequences, max sidelobe {worst:.2e}", seqs.len()),
    )
}

fn c2_polar_exhaustive(s: &mut Shared) -> Outcome {
    let t = Instant::now();
    let median = s.polar16_median()?;
    let secs = t.elapsed().as_secs_f64();
    check(
        (-16.3..=-14.7).contains(&median) && secs < 60.0,
        format!("median {median:.3} dB (target [-16.3, -14.7]), {secs:.1} s"),
    )
}

fn c3_block_length_trend(s: &mut Shared) -> Outcome {
    let m16 = s.polar16_median()?;
    let p32 = PolarBpsk::rate_half(32).unwrap();
    let r = acsl_sampled(&p32, MESSAGES, MessageSource::Seeded(DEFAULT_EVAL_SEED), false).map_err(|e| e.to_string())?;
    let drop = m16 - r.summary.median;
    check(
        (2.5..=3.5).contains(&drop),
        format!("K=16 {m16:.3} dB, K=32 {:.3} dB, drop {drop:.3} dB (target [2.5, 3.5])", r.summary.median),
    )
}

fn c4_lambda0_acsl(s: &mut Shared) -> Outcome {
    let polar = s.polar16_median()?;
    let r = acsl_exhaustive(&ml("k16_lambda0")?).map_err(|e| e.to_string())?;
    let gap = (r.summary.median - polar).abs();
    check(
        gap <= 1.5,
        format!("ML lambda=0 median {:.3} dB vs Polar {polar:.3} dB, gap {gap:.3} dB (max 1.5)", r.summary.median),
    )
}

fn c5_lambda09_acsl(s: &mut Shared) -> Outcome {
    let polar = s.polar16_median()?;
    let r = acsl_exhaustive(&ml("k16_lambda09")?).map_err(|e| e.to_string())?;
    let m = r.summary.median;
    check(
        m <= -35.0,
        format!("ML lambda=0.9 median {m:.3} dB (max -35), {:.2} dB below Polar", polar - m),
    )
}

fn c6_no_tradeoff(s: &mut Shared) -> Outcome {
    let a = s.ber("k16_lambda0")?;
    let b = s.ber("k16_lambda09")?;
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (pa, pb) in a.points.iter().zip(&b.points) {
        let bits = pa.bits(16);
        let se = pooled_standard_error(pa.bit_errors, bits, pb.bit_errors, bits);
        let z = if se > 0.0 { (pa.ber - pb.ber).abs() / se } else { 0.0 };
        worst = worst.max(z);
        lines.push(format!("{}dB:{:.2e}/{:.2e}({z:.1}se)", pa.snr_db, pa.ber, pb.ber));
    }
    check(worst <= 3.0, format!("max |diff| {worst:.2} SE; {}", lines.join(" ")))
}

fn c7_high_snr(s: &mut Shared) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["k16_lambda0", "k16_lambda09"] {
        let c = s.ber(name)?;
        let p = c.points.iter().find(|p| p.snr_db == 9.0).unwrap();
        ok &= p.ber <= 1e-5;
        parts.push(format!("{name}: {} errors, BER {:.2e}", p.bit_errors, p.ber));
    }
    check(ok, format!("at 9 dB over {MESSAGES} messages: {}", parts.join("; ")))
}

fn c8_low_snr(s: &mut Shared) -> Outcome {
    let polar = s.ber("polar_k16")?;
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["k16_lambda0", "k16_lambda09"] {
        let c = s.ber(name)?;
        for (pm, pp) in c.points.iter().zip(&polar.points).filter(|(p, _)| p.snr_db <= 4.0) {
            ok &= pm.ber <= pp.ber;
            parts.push(format!("{name}@{}dB {:.3e} vs {:.3e}", pm.snr_db, pm.ber, pp.ber));
        }
    }
    check(ok, parts.join("; "))
}

/// K=16 messages `2j` and `2j + 1` form K=32 message `j`; the noise rows are
/// concatenated the same way, so both codes see identical channel draws.
fn paired_inputs(count16: u64, snr_db: f64, seed: u64) -> (Vec<u64>, Tensor2) {
    let msgs: Vec<u64> = (0..count16).map(|i| message_at(seed, i, 16)).collect();
    let zeros = Tensor2::zeros(count16 as usize, 64);
    let noise = awgn(&zeros, &ChannelConfig::new(snr_db, seed, snr_stream(snr_db)), 0);
    (msgs, noise)
}

fn pair_up(msgs: &[u64], noise: &Tensor2) -> (Vec<u64>, Tensor2) {
    let m32 = msgs.chunks_exact(2).map(|p| (p[0] << 16) | p[1]).collect();
    let n32 = Tensor2::new(noise.rows() / 2, 128, noise.data().to_vec()).unwrap();
    (m32, n32)
}

fn bit_errors(code: &dyn CodeUnderTest, msgs: &[u64], noise: &Tensor2, sigma2: f64) -> u64 {
    let mut errors = 0;
    for (m, z) in msgs.chunks(5000).zip(0..) {
        let mut noisy = code.encode_batch(m).unwrap();
        let rows = noisy.rows();
        let width = noisy.cols();
        let off = z * 5000 * width;
        for (v, n) in noisy.data_mut().iter_mut().zip(&noise.data()[off..off + rows * width]) {
            *v += n;
        }
        let d = code.decode_batch(&noisy, sigma2).unwrap();
        errors += m.iter().zip(&d).map(|(a, b)| (a ^ b).count_ones() as u64).sum::<u64>();
    }
    errors
}

fn c9_concat_init(_: &mut Shared) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (source, lambda) in [("k16_lambda0", 0.0), ("k16_lambda09", 0.9)] {
        let ck = load(source)?;
        let lifted = concat_init(&ck.params).map_err(|e| e.to_string())?;

        let (msgs, noise) = paired_inputs(40_000, 3.0, 77);
        let (m32, n32) = pair_up(&msgs, &noise);
        let l16 = evaluate_loss(&ck.params, lambda, &msgs, &noise).map_err(|e| e.to_string())?;
        let l32 = evaluate_loss(&lifted, lambda, &m32, &n32).map_err(|e| e.to_string())?;
        let rel = (l32.comms - l16.comms).abs() / l16.comms;

        let (msgs, noise) = paired_inputs(MESSAGES, 3.0, DEFAULT_EVAL_SEED);
        let (m32, n32) = pair_up(&msgs, &noise);
        let sigma2 = snr_to_sigma2(3.0);
        let e16 = bit_errors(&MlCode::new("k16", ck.params.clone()).unwrap(), &msgs, &noise, sigma2);
        let e32 = bit_errors(&MlCode::new("k32", lifted).unwrap(), &m32, &n32, sigma2);
        let bits = MESSAGES * 16;
        let se = pooled_standard_error(e16, bits, e32, bits);
        let z = (e16 as f64 - e32 as f64).abs() / bits as f64 / se.max(f64::MIN_POSITIVE);

        ok &= rel <= 0.01 && z <= 3.0;
        parts.push(format!(
            "{source}: comms {:.5} vs {:.5} ({:.2}%), BER@3dB {:.3e} vs {:.3e} ({z:.2} SE)",
            l16.comms,
            l32.comms,
            100.0 * rel,
            e16 as f64 / bits as f64,
            e32 as f64 / bits as f64
        ));
    }
    check(ok, parts.join("; "))
}

fn c10_concat_trajectory(_: &mut Shared) -> Outcome {
    let ck = load("k32_concat_lambda09")?;
    let h = &ck.history;
    if h.len() < 51 {
        return Err(format!("history has {} epochs", h.len()));
    }
    let c0 = h[0].comms;
    let peak = h[1..=50].iter().map(|r| r.comms).fold(f64::NEG_INFINITY, f64::max);
    let last = h[h.len() - 1].comms;
    check(
        peak > c0 && last <= 1.2 * c0,
        format!(
            "epoch-0 comms {c0:.5}, max over epochs 1-50 {peak:.5}, final {last:.5} ({:+.1}%)",
            100.0 * (last / c0 - 1.0)
        ),
    )
}

fn full_loss(params: &mut NetworkParams, msgs: &[u64], noise: &Tensor2, lambda: f64) -> (f64, Vec<Tensor2>) {
    let bits = params.dims.message_bits();
    let mut tape = GradTape::new();
    let input = tape.leaf(messages_to_input(msgs, bits), false);
    let enc = params
        .encoder_on_tape(&mut tape, input, BnPolicy::Batch { update_running: false }, true)
        .unwrap();
    let z = tape.leaf(noise.clone(), false);
    let noisy = tape.add(enc.out, z).unwrap();
    let dec = params.decoder_on_tape(&mut tape, noisy, true).unwrap();
    let cfg = LossConfig::new(lambda).unwrap();
    let vars = loss_on_tape(&mut tape, &cfg, enc.out, dec.out, &messages_to_targets(msgs, bits)).unwrap();
    let loss = tape.value(vars.total).get(0, 0);
    let grads = tape.backward(vars.total, 1.0).unwrap();
    let all = enc.params.iter().chain(&dec.params).map(|&v| grads.wrt(v).unwrap().clone()).collect();
    (loss, all)
}

fn tensor_mut(params: &mut NetworkParams, t: usize) -> &mut Tensor2 {
    if t < 8 {
        params.encoder.tensors_mut().into_iter().nth(t).unwrap()
    } else {
        params.decoder.tensors_mut().into_iter().nth(t - 8).unwrap()
    }
}

fn c11_gradients(_: &mut Shared) -> Outcome {
    const STEP: f64 = 1e-6;
    const FLOOR: f64 = 1e-5;
    let mut worst: f64 = 0.0;
    for k in [16usize, 32] {
        let dims = CodeDimensions::new(k).unwrap();
        for inst in 0..20u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(7919 * k as u64 + inst);
            let msgs: Vec<u64> = (0..6).map(|_| rng.random::<u64>() & ((1u64 << k) - 1)).collect();
            let mut noise = Tensor2::zeros(6, dims.width());
            fill_noise(&mut rng, snr_to_sigma2(3.0), noise.data_mut());
            let lambda = rng.random_range(0.0..=1.0);
            let mut params = init_network(dims, 500 + inst);
            let (_, grads) = full_loss(&mut params, &msgs, &noise, lambda);
            for _ in 0..24 {
                let t = rng.random_range(0..16);
                let i = rng.random_range(0..grads[t].data().len());
                let orig = tensor_mut(&mut params, t).data()[i];
                tensor_mut(&mut params, t).data_mut()[i] = orig + STEP;
                let plus = full_loss(&mut params, &msgs, &noise, lambda).0;
                tensor_mut(&mut params, t).data_mut()[i] = orig - STEP;
                let minus = full_loss(&mut params, &msgs, &noise, lambda).0;
                tensor_mut(&mut params, t).data_mut()[i] = orig;
                let fd = (plus - minus) / (2.0 * STEP);
                let ad = grads[t].data()[i];
                worst = worst.max((ad - fd).abs() / ad.abs().max(fd.abs()).max(FLOOR));
            }
        }
    }
    check(
        worst < 1e-4,
        format!("max relative error {worst:.2e} over 2x20 instances (limit 1e-4)"),
    )
}

fn c12_oracles(_: &mut Shared) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut acf_err: f64 = 0.0;
    for i in 0..1000 {
        let n = [32, 64, 17, 5][i % 4];
        let data: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = Codeword::from_interleaved(data).unwrap();
        let d = periodic_acf(&c).unwrap().max_abs_deviation(&acf_fft_oracle(&c).unwrap());
        acf_err = acf_err.max(d);
    }

    let mut sc_failures = 0;
    for (n, k) in [(32usize, 16usize), (64, 32)] {
        let spec = polar_construct(n, k).unwrap();
        let mut dec = ScDecoder::new(&spec);
        let mut row = vec![0.0; 2 * n];
        for i in 0..10_000 {
            let m = message_at(99, i, k);
            spec.transmit_u64(m, &mut row);
            // sigma^2 = 0 saturates the LLRs
            if dec.decode_noisy(&row, 0.0) != m {
                sc_failures += 1;
            }
        }
    }

    let mut mismatch = 0;
    let mut codes: Vec<Box<dyn CodeUnderTest>> = vec![Box::new(PolarBpsk::rate_half(16).unwrap())];
    if let Ok(m) = ml("k16_lambda09") {
        codes.push(Box::new(m));
    }
    for code in &codes {
        let ex = acsl_exhaustive(code.as_ref()).unwrap();
        let sampled = acsl_sampled(code.as_ref(), 65_536, MessageSource::Sequential, true).unwrap();
        if ex.values != sampled.values {
            mismatch += 1;
        }
    }
    check(
        acf_err < 1e-12 && sc_failures == 0 && mismatch == 0,
        format!(
            "ACF direct vs FFT max dev {acf_err:.2e}; SC noiseless failures {sc_failures}/20000; \
             exhaustive vs sampled mismatches {mismatch}/{}",
            codes.len()
        ),
    )
}

fn c13_determinism(_: &mut Shared) -> Outcome {
    let cfg = TrainingConfig {
        batch_size: 50,
        epochs: 3,
        n_enc: 2,
        n_dec: 3,
        ..TrainingConfig::k16(0.9, 21)
    };
    let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let run_train = |n: usize| pool(n).install(|| train(&cfg, "x", |_| Ok(())).unwrap().checkpoint.to_bytes());
    let ck_same = run_train(1) == run_train(1) && run_train(1) == run_train(4);

    let dir = tempfile::tempdir().unwrap();
    let csv_bytes = |n: usize| {
        pool(n).install(|| {
            let p = PolarBpsk::rate_half(32).unwrap();
            let curve = ber_curve(&p, &[1.0, 2.0], 20_000, 5).unwrap();
            let r = acsl_sampled(&p, 20_000, MessageSource::Seeded(5), false).unwrap();
            let (bp, sp) = (dir.path().join(format!("b{n}.csv")), dir.path().join(format!("s{n}.csv")));
            write_ber(&bp, &[curve], &[]).unwrap();
            write_summary(&sp, &[SummaryRow::from_report(&r)], &[]).unwrap();
            let v = acsl_values(&p, MessageSource::Seeded(5), 0, 3000).unwrap();
            (std::fs::read(bp).unwrap(), std::fs::read(sp).unwrap(), v)
        })
    };
    let csv_same = csv_bytes(1) == csv_bytes(4);
    check(
        ck_same && csv_same,
        format!("checkpoints identical across runs and 1/4 threads: {ck_same}; CSV payloads identical: {csv_same}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn(&mut Shared) -> Outcome); 13] = [
        ("Zadoff-Chu count and sidelobes", c1_zadoff_chu),
        ("Polar K=16 exhaustive ACSL median", c2_polar_exhaustive),
        ("Polar ACSL block-length trend", c3_block_length_trend),
        ("ML lambda=0 ACSL near Polar", c4_lambda0_acsl),
        ("ML lambda=0.9 ACSL <= -35 dB", c5_lambda09_acsl),
        ("no BER tradeoff lambda=0 vs 0.9", c6_no_tradeoff),
        ("high-SNR BER at 9 dB", c7_high_snr),
        ("low-SNR superiority over Polar", c8_low_snr),
        ("concatenated initialization", c9_concat_init),
        ("lambda=0.9 concat comms trajectory", c10_concat_trajectory),
        ("gradient fidelity", c11_gradients),
        ("oracle equivalences", c12_oracles),
        ("determinism", c13_determinism),
    ];
    let only: Option<Vec<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut shared = Shared::default();
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| f(&mut shared)))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n:>2} PASS [{name}] {d} ({secs:.1}s)"),
            Err(d) => {
                println!("criterion {n:>2} FAIL [{name}] {d} ({secs:.1}s)");
                failed.push(n);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
