//! Forward kernels for the fixed layer set. The tape in [`super::tape`]
//! records these and supplies their derivatives.

use serde::{Deserialize, Serialize};

use super::tensor::{gemm, Tensor2};
use crate::error::{shape_err, Error, Result};

/// Variance floor used by batch normalization.
pub const BN_VARIANCE_FLOOR: f64 = 1e-5;
/// Running-statistics momentum used by batch normalization.
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

/// Row-wise `X·W + b`.
pub fn affine(w: &Tensor2, b: &Tensor2, x: &Tensor2) -> Result<Tensor2> {
    if x.cols() != w.rows() {
        return Err(shape_err("affine", format!("X {}", x.shape_str()), format!("W {}", w.shape_str())));
    }
    if b.rows() != 1 || b.cols() != w.cols() {
        return Err(shape_err("affine", format!("b {}", b.shape_str()), format!("W {}", w.shape_str())));
    }
    let mut out = Tensor2::zeros(x.rows(), w.cols());
    for r in 0..x.rows() {
        out.row_mut(r).copy_from_slice(b.data());
    }
    gemm(1.0, x, false, w, false, 1.0, &mut out);
    Ok(out)
}

pub fn tanh_layer(x: &Tensor2) -> Tensor2 {
    x.map(f64::tanh)
}

/// Maps each consecutive value pair `(a, b)` to `(e^a, e^b) / (e^a + e^b)`.
pub fn softmax_pairs(x: &Tensor2) -> Result<Tensor2> {
    if x.cols() % 2 != 0 {
        return Err(shape_err("softmax_pairs", x.shape_str(), "even row width"));
    }
    let mut out = x.clone();
    for pair in out.data_mut().chunks_exact_mut(2) {
        let (p0, p1) = softmax2(pair[0], pair[1]);
        pair[0] = p0;
        pair[1] = p1;
    }
    Ok(out)
}

#[inline]
pub(crate) fn softmax2(a: f64, b: f64) -> (f64, f64) {
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let s = ea + eb;
    (ea / s, eb / s)
}

/// Running statistics of a batch-normalization layer without learned affine.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    /// False until the first train-mode batch has been folded in.
    pub initialized: bool,
}

impl BatchNormStats {
    pub fn new(width: usize) -> Self {
        Self {
            mean: vec![0.0; width],
            var: vec![1.0; width],
            initialized: false,
        }
    }

    pub fn width(&self) -> usize {
        self.mean.len()
    }

    /// Folds one batch's moments into the running estimates.
    pub fn update(&mut self, batch_mean: &[f64], batch_var: &[f64]) {
        for (r, &m) in self.mean.iter_mut().zip(batch_mean) {
            *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * m;
        }
        for (r, &v) in self.var.iter_mut().zip(batch_var) {
            *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * v;
        }
        self.initialized = true;
    }

    /// Per-column `(shift, scale)` so that eval-mode output is `(x - shift) * scale`.
    pub fn eval_coefficients(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if !self.initialized {
            return Err(Error::State(
                "batch norm evaluated before running statistics were initialized".into(),
            ));
        }
        let scale = self.var.iter().map(|&v| inv_std(v)).collect();
        Ok((self.mean.clone(), scale))
    }
}

#[inline]
pub(crate) fn inv_std(var: f64) -> f64 {
    1.0 / var.max(BN_VARIANCE_FLOOR).sqrt()
}

/// Column means and biased variances of a batch.
pub fn batch_moments(x: &Tensor2) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let mut mean = vec![0.0; x.cols()];
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; x.cols()];
    for row in x.iter_rows() {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            let d = v - m;
            *s += d * d;
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    (mean, var)
}

pub(crate) fn column_affine(x: &Tensor2, shift: &[f64], scale: &[f64]) -> Tensor2 {
    let mut out = x.clone();
    let cols = x.cols();
    for row in out.data_mut().chunks_exact_mut(cols.max(1)) {
        for ((v, s), k) in row.iter_mut().zip(shift).zip(scale) {
            *v = (*v - s) * k;
        }
    }
    out
}

/// Batch normalization. Train mode normalizes by the batch moments and folds
/// them into `stats`; eval mode uses the running statistics.
pub fn batch_norm(x: &Tensor2, stats: &mut BatchNormStats, mode: Mode) -> Result<Tensor2> {
    if x.cols() != stats.width() {
        return Err(shape_err(
            "batch_norm",
            x.shape_str(),
            format!("stats width {}", stats.width()),
        ));
    }
    match mode {
        Mode::Train => {
            if x.rows() < 2 {
                return Err(Error::Usage(format!(
                    "train-mode batch norm needs at least 2 rows, got {}",
                    x.rows()
                )));
            }
            let (mean, var) = batch_moments(x);
            let scale: Vec<f64> = var.iter().map(|&v| inv_std(v)).collect();
            let out = column_affine(x, &mean, &scale);
            stats.update(&mean, &var);
            Ok(out)
        }
        Mode::Eval => {
            let (shift, scale) = stats.eval_coefficients()?;
            Ok(column_affine(x, &shift, &scale))
        }
    }
}

/// Scales each row so that its sum of squares equals `target`.
/// Returns the output and the per-row scale factors.
pub fn power_normalize(x: &Tensor2, target: f64) -> Result<(Tensor2, Vec<f64>)> {
    let mut out = x.clone();
    let mut scales = Vec::with_capacity(x.rows());
    let cols = x.cols().max(1);
    for (r, row) in out.data_mut().chunks_exact_mut(cols).enumerate() {
        let energy: f64 = row.iter().map(|v| v * v).sum();
        if energy <= 0.0 || !energy.is_finite() {
            return Err(Error::Domain(format!("row {r} has energy {energy}; cannot normalize")));
        }
        let a = (target / energy).sqrt();
        row.iter_mut().for_each(|v| *v *= a);
        scales.push(a);
    }
    Ok((out, scales))
}
