//! Versioned, checksummed checkpoint files.
//!
//! Layout:
//!
//! ```text
//! isac-checkpoint\n
//! version 1\n
//! <key> <value>\n ...          text header, floats in shortest round-trip form
//! end_header\n
//! <config_bytes bytes>          UTF-8 snapshot of the producing config
//! <param_values * 8 bytes>      parameters, little-endian f64
//! <history_records * 48 bytes>  (epoch, lr, snr_db, total, sensing, comms)
//! <32 bytes>                    SHA-256 of everything above
//! ```
//!
//! Parameter order: encoder layers 1..4 (weight row-major, then bias), batch
//! norm running mean, running variance, decoder layers 1..4.

use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::network::{init_network, CodeDimensions, NetworkParams};
use crate::error::{CheckpointErrorKind, Error, Result};
use crate::numerics::PlateauScheduler;
use crate::training::EpochRecord;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "isac-checkpoint";
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub dims: CodeDimensions,
    pub lambda: f64,
    pub seed: u64,
    pub epochs: usize,
    pub params: NetworkParams,
    pub scheduler: PlateauScheduler,
    pub history: Vec<EpochRecord>,
    /// Text of the configuration that produced this checkpoint.
    pub config: String,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let values = param_values(&self.params);
        let s = &self.scheduler;
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push(' ');
            out.push_str(&v);
            out.push('\n');
        };
        kv("version", CHECKPOINT_VERSION.to_string());
        kv("k", self.dims.k.to_string());
        kv("n", self.dims.n.to_string());
        kv("ms", self.dims.ms.to_string());
        kv("lambda", format!("{:?}", self.lambda));
        kv("seed", self.seed.to_string());
        kv("epochs", self.epochs.to_string());
        kv("bn_initialized", u8::from(self.params.encoder.bn.initialized).to_string());
        kv("sched_lr", format!("{:?}", s.lr));
        kv("sched_best", s.best.map_or("none".into(), |b| format!("{b:?}")));
        kv("sched_stale", s.stale_epochs.to_string());
        kv("sched_patience", s.patience.to_string());
        kv("sched_decay", format!("{:?}", s.decay));
        kv("sched_min_lr", format!("{:?}", s.min_lr));
        kv("sched_rel_threshold", format!("{:?}", s.rel_threshold));
        kv("history_records", self.history.len().to_string());
        kv("param_values", values.len().to_string());
        kv("config_bytes", self.config.len().to_string());

        let mut bytes = format!("{MAGIC}\n{out}end_header\n").into_bytes();
        bytes.extend_from_slice(self.config.as_bytes());
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        for r in &self.history {
            for v in r.as_array() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&bytes);
        bytes.extend_from_slice(&digest);
        bytes
    }

    /// Parses checkpoint bytes; `path` only labels errors.
    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let fail = |kind| Error::Checkpoint {
            path: path.to_path_buf(),
            kind,
        };
        let header_err = |m: String| fail(CheckpointErrorKind::Header(m));

        if bytes.len() < DIGEST_LEN + MAGIC.len() {
            return Err(fail(CheckpointErrorKind::Truncated));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            // A short file also fails here unless the header says otherwise.
            return Err(match parse_header(body) {
                Ok(h) if body.len() < h.end + h.payload_len() => fail(CheckpointErrorKind::Truncated),
                _ => fail(CheckpointErrorKind::Checksum),
            });
        }
        let h = parse_header(body).map_err(header_err)?;
        if h.version != CHECKPOINT_VERSION.to_string() {
            return Err(fail(CheckpointErrorKind::Version {
                found: h.version.clone(),
                expected: CHECKPOINT_VERSION,
            }));
        }
        if body.len() != h.end + h.payload_len() {
            return Err(fail(CheckpointErrorKind::Truncated));
        }

        let dims = CodeDimensions::new(h.get_usize("k").map_err(header_err)?).map_err(|e| header_err(e.to_string()))?;
        if h.get_usize("n").map_err(header_err)? != dims.n || h.get_usize("ms").map_err(header_err)? != dims.ms {
            return Err(header_err("inconsistent n / ms".into()));
        }

        let mut pos = h.end;
        let config = std::str::from_utf8(&body[pos..pos + h.config_bytes])
            .map_err(|e| header_err(format!("config snapshot: {e}")))?
            .to_string();
        pos += h.config_bytes;
        let read = |count: usize, pos: &mut usize| -> Vec<f64> {
            let vals = body[*pos..*pos + 8 * count]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            *pos += 8 * count;
            vals
        };
        let values = read(h.param_values, &mut pos);
        let mut params = init_network(dims, 0);
        if param_values(&params).len() != values.len() {
            return Err(header_err(format!(
                "expected {} parameter values for K={}, header says {}",
                param_values(&params).len(),
                dims.k,
                values.len()
            )));
        }
        load_param_values(&mut params, &values);
        params.encoder.bn.initialized = h.get_usize("bn_initialized").map_err(header_err)? == 1;

        let history = read(h.history_records * 6, &mut pos)
            .chunks_exact(6)
            .map(EpochRecord::from_slice)
            .collect();

        let scheduler = PlateauScheduler {
            lr: h.get_f64("sched_lr").map_err(header_err)?,
            best: match h.get("sched_best").map_err(header_err)? {
                "none" => None,
                s => Some(s.parse().map_err(|_| header_err(format!("bad sched_best {s}")))?),
            },
            stale_epochs: h.get_usize("sched_stale").map_err(header_err)? as u32,
            patience: h.get_usize("sched_patience").map_err(header_err)? as u32,
            decay: h.get_f64("sched_decay").map_err(header_err)?,
            min_lr: h.get_f64("sched_min_lr").map_err(header_err)?,
            rel_threshold: h.get_f64("sched_rel_threshold").map_err(header_err)?,
        };

        Ok(Self {
            dims,
            lambda: h.get_f64("lambda").map_err(header_err)?,
            seed: h.get("seed").map_err(header_err)?.parse().map_err(|_| header_err("bad seed".into()))?,
            epochs: h.get_usize("epochs").map_err(header_err)?,
            params,
            scheduler,
            history,
            config,
        })
    }

    /// Fails with a dimension error unless this checkpoint has message length `k`.
    pub fn expect_k(self, k: usize) -> Result<Self> {
        if self.dims.k != k {
            return Err(Error::Dimension {
                expected: k,
                found: self.dims.k,
            });
        }
        Ok(self)
    }
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, ckpt.to_bytes())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::Checkpoint {
        path: path.to_path_buf(),
        kind: CheckpointErrorKind::Unreadable(e.to_string()),
    })?;
    Checkpoint::from_bytes(&bytes, path)
}

/// Loads and checks the message length in one step.
pub fn load_checkpoint_for(path: &Path, k: usize) -> Result<Checkpoint> {
    load_checkpoint(path)?.expect_k(k)
}

struct Header {
    version: String,
    fields: Vec<(String, String)>,
    end: usize,
    config_bytes: usize,
    param_values: usize,
    history_records: usize,
}

impl Header {
    fn get(&self, key: &str) -> std::result::Result<&str, String> {
        self.fields
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| format!("missing key {key}"))
    }

    fn get_usize(&self, key: &str) -> std::result::Result<usize, String> {
        self.get(key)?.parse().map_err(|_| format!("bad integer for {key}"))
    }

    fn get_f64(&self, key: &str) -> std::result::Result<f64, String> {
        self.get(key)?.parse().map_err(|_| format!("bad float for {key}"))
    }

    fn payload_len(&self) -> usize {
        self.config_bytes + 8 * self.param_values + 48 * self.history_records
    }
}

fn parse_header(body: &[u8]) -> std::result::Result<Header, String> {
    const END: &[u8] = b"end_header\n";
    let end = body
        .windows(END.len())
        .position(|w| w == END)
        .ok_or("no end_header marker")?
        + END.len();
    let text = std::str::from_utf8(&body[..end]).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err("not a checkpoint file".into());
    }
    let mut fields = Vec::new();
    for line in lines {
        if line == "end_header" {
            break;
        }
        let (k, v) = line.split_once(' ').ok_or_else(|| format!("bad header line {line:?}"))?;
        fields.push((k.to_string(), v.to_string()));
    }
    let mut h = Header {
        version: String::new(),
        fields,
        end,
        config_bytes: 0,
        param_values: 0,
        history_records: 0,
    };
    h.version = h.get("version")?.to_string();
    if h.version == CHECKPOINT_VERSION.to_string() {
        h.config_bytes = h.get_usize("config_bytes")?;
        h.param_values = h.get_usize("param_values")?;
        h.history_records = h.get_usize("history_records")?;
    }
    Ok(h)
}

fn param_values(p: &NetworkParams) -> Vec<f64> {
    let mut v = Vec::with_capacity(p.parameter_count() + 2 * p.encoder.bn.width());
    for t in p.encoder.tensors() {
        v.extend_from_slice(t.data());
    }
    v.extend_from_slice(&p.encoder.bn.mean);
    v.extend_from_slice(&p.encoder.bn.var);
    for t in p.decoder.tensors() {
        v.extend_from_slice(t.data());
    }
    v
}

fn load_param_values(p: &mut NetworkParams, values: &[f64]) {
    let mut pos = 0;
    let mut take = |t: &mut [f64]| {
        t.copy_from_slice(&values[pos..pos + t.len()]);
        pos += t.len();
    };
    for t in p.encoder.tensors_mut() {
        take(t.data_mut());
    }
    take(&mut p.encoder.bn.mean);
    take(&mut p.encoder.bn.var);
    for t in p.decoder.tensors_mut() {
        take(t.data_mut());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Mode;

    fn sample(k: usize) -> Checkpoint {
        let dims = CodeDimensions::new(k).unwrap();
        let mut params = init_network(dims, 3);
        params.encode(&[1, 2, 3, 4], Mode::Train).unwrap();
        let mut scheduler = PlateauScheduler::default();
        scheduler.step(0.7);
        Checkpoint {
            dims,
            lambda: 0.9,
            seed: 17,
            epochs: 2,
            params,
            scheduler,
            history: vec![
                EpochRecord { epoch: 0, lr: 1e-4, snr_db: 3.0, total: 0.5, sensing: 0.1, comms: 0.6 },
                EpochRecord { epoch: 1, lr: 1e-4, snr_db: 3.0, total: 0.4, sensing: 0.1, comms: 0.5 },
            ],
            config: "k = 16\nlambda = 0.9\n".into(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ckpt");
        let ck = sample(16);
        save_checkpoint(&ck, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes(), ck.to_bytes());
    }

    #[test]
    fn corrupted_byte_is_checksum_error() {
        let ck = sample(16);
        let mut bytes = ck.to_bytes();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        let err = Checkpoint::from_bytes(&bytes, Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Checkpoint { kind: CheckpointErrorKind::Checksum, .. }), "{err}");
    }

    #[test]
    fn truncated_file_is_reported() {
        let bytes = sample(16).to_bytes();
        let err = Checkpoint::from_bytes(&bytes[..bytes.len() - 100], Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Checkpoint { kind: CheckpointErrorKind::Truncated, .. }), "{err}");
        let err = Checkpoint::from_bytes(&bytes[..10], Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Checkpoint { kind: CheckpointErrorKind::Truncated, .. }), "{err}");
    }

    #[test]
    fn version_mismatch_is_reported() {
        let bytes = sample(16).to_bytes();
        let mut body = bytes[..bytes.len() - DIGEST_LEN].to_vec();
        let pos = body.windows(10).position(|w| w == b"version 1\n").unwrap();
        body[pos + 8] = b'9';
        // re-sign so that the version check is what fails
        let digest = Sha256::digest(&body);
        body.extend_from_slice(&digest);
        let err = Checkpoint::from_bytes(&body, Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Checkpoint { kind: CheckpointErrorKind::Version { .. }, .. }), "{err}");
    }

    #[test]
    fn wrong_k_is_dimension_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("k16.ckpt");
        save_checkpoint(&sample(16), &path).unwrap();
        let err = load_checkpoint_for(&path, 32).unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 32, found: 16 }));
        assert!(load_checkpoint_for(&path, 16).is_ok());
    }
}
