use serde::{Deserialize, Serialize};

pub const INITIAL_LR: f64 = 1e-4;
pub const MIN_LR: f64 = 1e-6;
pub const DECAY: f64 = 0.9;
pub const PATIENCE: u32 = 10;
pub const REL_THRESHOLD: f64 = 1e-4;

/// Reduce-on-plateau learning-rate schedule.
///
/// An epoch improves if its loss is below `best * (1 - rel_threshold)`.
/// The first epoch only establishes `best` and counts as non-improving, so
/// `patience` epochs of a flat loss from the start trigger one decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauScheduler {
    pub lr: f64,
    pub best: Option<f64>,
    pub stale_epochs: u32,
    pub patience: u32,
    pub decay: f64,
    pub min_lr: f64,
    pub rel_threshold: f64,
}

impl Default for PlateauScheduler {
    fn default() -> Self {
        Self::new(INITIAL_LR)
    }
}

impl PlateauScheduler {
    pub fn new(initial_lr: f64) -> Self {
        Self {
            lr: initial_lr,
            best: None,
            stale_epochs: 0,
            patience: PATIENCE,
            decay: DECAY,
            min_lr: MIN_LR,
            rel_threshold: REL_THRESHOLD,
        }
    }

    /// Feeds one epoch loss and returns the learning rate for the next epoch.
    pub fn step(&mut self, epoch_loss: f64) -> f64 {
        match self.best {
            Some(best) if epoch_loss < best - self.rel_threshold * best.abs() => {
                self.best = Some(epoch_loss);
                self.stale_epochs = 0;
            }
            Some(_) => self.stale_epochs += 1,
            None => {
                self.best = Some(epoch_loss);
                self.stale_epochs = 1;
            }
        }
        if self.stale_epochs >= self.patience {
            self.lr = (self.lr * self.decay).max(self.min_lr);
            self.stale_epochs = 0;
        }
        self.lr
    }
}
