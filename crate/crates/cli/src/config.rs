use std::path::{Path, PathBuf};

use isac_core::evaluation::{parse_snr_grid, DEFAULT_EVAL_SEED};
use isac_core::training::TrainingConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the parent directory for runs whose config
/// has no `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "ISAC_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub training: TrainingConfig,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub evaluation: EvaluationSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Also write `checkpoint_epochNNNN.ckpt` every this many epochs.
    pub checkpoint_every: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    pub seed: u64,
    pub messages: u64,
    pub acsl_samples: u64,
    /// `start:step:stop`, inclusive.
    pub snr_grid: String,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            seed: DEFAULT_EVAL_SEED,
            messages: 1_000_000,
            acsl_samples: 1_000_000,
            snr_grid: "0:1:9".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {}", origin.display(), e)))?;
        cfg.validate()
            .map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok((Self::parse(&text, path)?, text))
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(format!("name {:?} must be a nonempty file-name-safe string", self.name));
        }
        self.training.validate().map_err(|e| e.to_string())?;
        if self.output.checkpoint_every == Some(0) {
            return Err("output.checkpoint_every must be positive".into());
        }
        let ev = &self.evaluation;
        if ev.messages == 0 || ev.acsl_samples == 0 {
            return Err("evaluation.messages and evaluation.acsl_samples must be positive".into());
        }
        parse_snr_grid(&ev.snr_grid).map_err(|e| e.to_string())?;
        Ok(())
    }

    /// `--out` beats `output.dir`, which beats `$ISAC_OUTPUT_DIR/<name>`,
    /// which beats `runs/<name>`.
    pub fn output_dir(&self, cli_out: Option<&Path>) -> PathBuf {
        if let Some(p) = cli_out {
            return p.to_path_buf();
        }
        if let Some(p) = &self.output.dir {
            return p.clone();
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(root) => PathBuf::from(root).join(&self.name),
            None => PathBuf::from("runs").join(&self.name),
        }
    }
}
