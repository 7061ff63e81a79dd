//! Composite sensing/communications loss
//!
//! `total = lambda * sensing + (1 - lambda) * comms`, where `sensing` is the
//! batch mean of the linear ACSL and `comms` the batch mean of the per-bit
//! binary cross-entropy (natural log, probabilities clamped to
//! `[1e-12, 1 - 1e-12]`).

use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::numerics::{GradTape, Tensor2, Var};

pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub lambda: f64,
}

impl LossConfig {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Config(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        Ok(Self { lambda })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub sensing: f64,
    pub comms: f64,
    pub total: f64,
}

/// Loss nodes recorded on a tape.
#[derive(Debug, Clone, Copy)]
pub struct LossVars {
    pub sensing: Var,
    pub comms: Var,
    pub total: Var,
}

impl LossVars {
    pub fn breakdown(&self, tape: &GradTape) -> LossBreakdown {
        LossBreakdown {
            sensing: tape.value(self.sensing).get(0, 0),
            comms: tape.value(self.comms).get(0, 0),
            total: tape.value(self.total).get(0, 0),
        }
    }
}

fn check_batch(codewords: &Tensor2, posteriors: &Tensor2, targets: &Tensor2) -> Result<()> {
    if codewords.rows() != posteriors.rows() || posteriors.rows() != targets.rows() {
        return Err(shape_err(
            "loss",
            format!("{} codewords / {} posteriors", codewords.rows(), posteriors.rows()),
            format!("{} messages", targets.rows()),
        ));
    }
    for (r, row) in posteriors.iter_rows().enumerate() {
        for pair in row.chunks_exact(2) {
            let ok = pair.iter().all(|p| (0.0..=1.0).contains(p)) && (pair[0] + pair[1] - 1.0).abs() < 1e-9;
            if !ok {
                return Err(Error::Domain(format!("row {r} holds an invalid probability pair {pair:?}")));
            }
        }
    }
    Ok(())
}

/// Records the loss on `tape` so it can be differentiated.
pub fn loss_on_tape(
    tape: &mut GradTape,
    cfg: &LossConfig,
    codewords: Var,
    posteriors: Var,
    targets: &Tensor2,
) -> Result<LossVars> {
    check_batch(tape.value(codewords), tape.value(posteriors), targets)?;
    let acsl = tape.acsl_rows(codewords)?;
    let sensing = tape.mean(acsl);
    let ce = tape.cross_entropy_rows(posteriors, targets, PROB_CLAMP)?;
    let comms = tape.mean(ce);
    let ws = tape.scale(sensing, cfg.lambda);
    let wc = tape.scale(comms, 1.0 - cfg.lambda);
    let total = tape.add(ws, wc)?;
    Ok(LossVars { sensing, comms, total })
}

/// Evaluates the loss without recording gradients.
pub fn loss(cfg: &LossConfig, codewords: &Tensor2, posteriors: &Tensor2, targets: &Tensor2) -> Result<LossBreakdown> {
    let mut tape = GradTape::new();
    let c = tape.leaf(codewords.clone(), false);
    let p = tape.leaf(posteriors.clone(), false);
    let vars = loss_on_tape(&mut tape, cfg, c, p, targets)?;
    Ok(vars.breakdown(&tape))
}
