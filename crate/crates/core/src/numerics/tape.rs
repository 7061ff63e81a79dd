//! Tape-based reverse-mode differentiation over a fixed operation set.
//!
//! Every operation evaluates eagerly and appends a node holding its output.
//! Nodes only reference earlier nodes, so the tape order is a topological
//! order and [`GradTape::backward`] sweeps it in reverse.

use super::ops::{self, BatchNormStats, BN_VARIANCE_FLOOR};
use super::tensor::{gemm, Tensor2};
use crate::acf;
use crate::error::{shape_err, Error, Result};

/// Handle to a node on a [`GradTape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Affine { x: Var, w: Var, b: Var },
    Tanh { x: Var },
    /// Batch-moment normalization; `scale` is the per-column inverse std and
    /// `floored` marks columns whose variance hit the floor.
    BatchNormTrain { x: Var, scale: Vec<f64>, floored: Vec<bool> },
    /// `(x - shift) * scale` with constant coefficients (eval-mode batch norm).
    ColumnAffine { x: Var, shift: Vec<f64>, scale: Vec<f64> },
    PowerNormalize { x: Var, target: f64, scales: Vec<f64> },
    SoftmaxPairs { x: Var },
    AcslRows { x: Var },
    CrossEntropyRows { p: Var, targets: Tensor2, clamp: f64 },
    Add { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { x: Var, alpha: f64 },
    Mean { x: Var },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor2,
    requires_grad: bool,
}

/// Gradients indexed by [`Var`]; `None` for nodes that need no gradient.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor2>>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&Tensor2> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Gradient of a leaf, zero-filled if no path reached it.
    pub fn wrt_or_zeros(&self, v: Var, like: &Tensor2) -> Tensor2 {
        self.wrt(v)
            .cloned()
            .unwrap_or_else(|| Tensor2::zeros(like.rows(), like.cols()))
    }
}

#[derive(Debug, Default, Clone)]
pub struct GradTape {
    nodes: Vec<Node>,
}

impl GradTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor2 {
        &self.nodes[v.0].value
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn push(&mut self, op: Op, value: Tensor2, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records an input. Parameters pass `requires_grad = true`.
    pub fn leaf(&mut self, value: Tensor2, requires_grad: bool) -> Var {
        self.push(Op::Leaf, value, requires_grad)
    }

    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let value = ops::affine(self.value(w), self.value(b), self.value(x))?;
        let rg = self.requires_grad(x) || self.requires_grad(w) || self.requires_grad(b);
        Ok(self.push(Op::Affine { x, w, b }, value, rg))
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let value = ops::tanh_layer(self.value(x));
        let rg = self.requires_grad(x);
        self.push(Op::Tanh { x }, value, rg)
    }

    /// Train-mode batch norm. Folds the batch moments into `stats` when
    /// `update_running` is set; the moments are returned either way.
    pub fn batch_norm_train(
        &mut self,
        x: Var,
        stats: &mut BatchNormStats,
        update_running: bool,
    ) -> Result<Var> {
        let input = self.value(x);
        if input.cols() != stats.width() {
            return Err(shape_err(
                "batch_norm",
                input.shape_str(),
                format!("stats width {}", stats.width()),
            ));
        }
        if input.rows() < 2 {
            return Err(Error::Usage(format!(
                "train-mode batch norm needs at least 2 rows, got {}",
                input.rows()
            )));
        }
        let (mean, var) = ops::batch_moments(input);
        let scale: Vec<f64> = var.iter().map(|&v| ops::inv_std(v)).collect();
        let floored = var.iter().map(|&v| v < BN_VARIANCE_FLOOR).collect();
        let value = ops::column_affine(input, &mean, &scale);
        if update_running {
            stats.update(&mean, &var);
        }
        let rg = self.requires_grad(x);
        Ok(self.push(Op::BatchNormTrain { x, scale, floored }, value, rg))
    }

    pub fn batch_norm_eval(&mut self, x: Var, stats: &BatchNormStats) -> Result<Var> {
        let input = self.value(x);
        if input.cols() != stats.width() {
            return Err(shape_err(
                "batch_norm",
                input.shape_str(),
                format!("stats width {}", stats.width()),
            ));
        }
        let (shift, scale) = stats.eval_coefficients()?;
        let value = ops::column_affine(input, &shift, &scale);
        let rg = self.requires_grad(x);
        Ok(self.push(Op::ColumnAffine { x, shift, scale }, value, rg))
    }

    /// Rescales each row to sum of squares `target`.
    pub fn power_normalize(&mut self, x: Var, target: f64) -> Result<Var> {
        let (value, scales) = ops::power_normalize(self.value(x), target)?;
        let rg = self.requires_grad(x);
        Ok(self.push(Op::PowerNormalize { x, target, scales }, value, rg))
    }

    pub fn softmax_pairs(&mut self, x: Var) -> Result<Var> {
        let value = ops::softmax_pairs(self.value(x))?;
        let rg = self.requires_grad(x);
        Ok(self.push(Op::SoftmaxPairs { x }, value, rg))
    }

    /// Per-row linear ACSL of interleaved complex rows; output is `rows x 1`.
    pub fn acsl_rows(&mut self, x: Var) -> Result<Var> {
        let value = acsl_rows_forward(self.value(x))?;
        let rg = self.requires_grad(x);
        Ok(self.push(Op::AcslRows { x }, value, rg))
    }

    /// Per-row mean binary cross-entropy between probability pairs
    /// `(P(0), P(1))` and 0/1 targets; output is `rows x 1`.
    pub fn cross_entropy_rows(&mut self, p: Var, targets: &Tensor2, clamp: f64) -> Result<Var> {
        let value = cross_entropy_forward(self.value(p), targets, clamp)?;
        let rg = self.requires_grad(p);
        Ok(self.push(
            Op::CrossEntropyRows {
                p,
                targets: targets.clone(),
                clamp,
            },
            value,
            rg,
        ))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = elementwise(self.value(a), self.value(b), "add", |x, y| x + y)?;
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(Op::Add { a, b }, value, rg))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = elementwise(self.value(a), self.value(b), "mul", |x, y| x * y)?;
        let rg = self.requires_grad(a) || self.requires_grad(b);
        Ok(self.push(Op::Mul { a, b }, value, rg))
    }

    pub fn scale(&mut self, x: Var, alpha: f64) -> Var {
        let value = self.value(x).map(|v| alpha * v);
        let rg = self.requires_grad(x);
        self.push(Op::Scale { x, alpha }, value, rg)
    }

    /// Mean of all entries, as a `1 x 1` tensor.
    pub fn mean(&mut self, x: Var) -> Var {
        let value = Tensor2::scalar(mean_of(self.value(x)));
        let rg = self.requires_grad(x);
        self.push(Op::Mean { x }, value, rg)
    }

    /// Recomputes every non-leaf node from its recorded inputs.
    pub fn replay(&self) -> Result<Vec<Tensor2>> {
        let mut values: Vec<Tensor2> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = |var: Var| &values[var.0];
            let out = match &node.op {
                Op::Leaf => node.value.clone(),
                Op::Affine { x, w, b } => ops::affine(v(*w), v(*b), v(*x))?,
                Op::Tanh { x } => ops::tanh_layer(v(*x)),
                Op::BatchNormTrain { x, .. } => {
                    let (mean, var) = ops::batch_moments(v(*x));
                    let scale: Vec<f64> = var.iter().map(|&s| ops::inv_std(s)).collect();
                    ops::column_affine(v(*x), &mean, &scale)
                }
                Op::ColumnAffine { x, shift, scale } => ops::column_affine(v(*x), shift, scale),
                Op::PowerNormalize { x, target, .. } => ops::power_normalize(v(*x), *target)?.0,
                Op::SoftmaxPairs { x } => ops::softmax_pairs(v(*x))?,
                Op::AcslRows { x } => acsl_rows_forward(v(*x))?,
                Op::CrossEntropyRows { p, targets, clamp } => {
                    cross_entropy_forward(v(*p), targets, *clamp)?
                }
                Op::Add { a, b } => elementwise(v(*a), v(*b), "add", |x, y| x + y)?,
                Op::Mul { a, b } => elementwise(v(*a), v(*b), "mul", |x, y| x * y)?,
                Op::Scale { x, alpha } => v(*x).map(|e| alpha * e),
                Op::Mean { x } => Tensor2::scalar(mean_of(v(*x))),
            };
            values.push(out);
        }
        Ok(values)
    }

    /// Reverse sweep from a scalar output, seeded with `seed`.
    pub fn backward(&self, output: Var, seed: f64) -> Result<Gradients> {
        let out = &self.nodes[output.0].value;
        if out.shape() != (1, 1) {
            return Err(Error::Usage(format!(
                "backward needs a scalar output, got {}",
                out.shape_str()
            )));
        }
        let mut grads: Vec<Option<Tensor2>> = vec![None; output.0 + 1];
        grads[output.0] = Some(Tensor2::scalar(seed));

        for i in (0..=output.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                }
                Op::Affine { x, w, b } => {
                    let xv = self.value(*x);
                    let wv = self.value(*w);
                    if self.requires_grad(*x) {
                        let mut dx = Tensor2::zeros(xv.rows(), xv.cols());
                        gemm(1.0, &g, false, wv, true, 0.0, &mut dx);
                        accumulate(&mut grads, *x, dx);
                    }
                    if self.requires_grad(*w) {
                        let mut dw = Tensor2::zeros(wv.rows(), wv.cols());
                        gemm(1.0, xv, true, &g, false, 0.0, &mut dw);
                        accumulate(&mut grads, *w, dw);
                    }
                    if self.requires_grad(*b) {
                        let mut db = Tensor2::zeros(1, g.cols());
                        for row in g.iter_rows() {
                            for (d, v) in db.data_mut().iter_mut().zip(row) {
                                *d += v;
                            }
                        }
                        accumulate(&mut grads, *b, db);
                    }
                }
                Op::Tanh { x } => {
                    let y = &node.value;
                    let mut dx = g;
                    for (d, yv) in dx.data_mut().iter_mut().zip(y.data()) {
                        *d *= 1.0 - yv * yv;
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::BatchNormTrain { x, scale, floored } => {
                    let dx = batch_norm_backward(&g, &node.value, scale, floored);
                    accumulate(&mut grads, *x, dx);
                }
                Op::ColumnAffine { x, scale, .. } => {
                    let mut dx = g;
                    let cols = dx.cols();
                    for row in dx.data_mut().chunks_exact_mut(cols) {
                        for (d, s) in row.iter_mut().zip(scale) {
                            *d *= s;
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::PowerNormalize { x, target, scales } => {
                    // y = a x with a = sqrt(T / |x|^2):  dx = a (g - y (g.y) / T)
                    let y = &node.value;
                    let mut dx = g;
                    let cols = dx.cols();
                    for (r, row) in dx.data_mut().chunks_exact_mut(cols).enumerate() {
                        let yr = y.row(r);
                        let gy: f64 = row.iter().zip(yr).map(|(a, b)| a * b).sum();
                        let a = scales[r];
                        for (d, yv) in row.iter_mut().zip(yr) {
                            *d = a * (*d - yv * gy / target);
                        }
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::SoftmaxPairs { x } => {
                    let p = &node.value;
                    let mut dx = g;
                    for (d, pr) in dx.data_mut().chunks_exact_mut(2).zip(p.data().chunks_exact(2)) {
                        let pq = pr[0] * pr[1];
                        let diff = d[0] - d[1];
                        d[0] = pq * diff;
                        d[1] = -pq * diff;
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::AcslRows { x } => {
                    let xv = self.value(*x);
                    let mut dx = Tensor2::zeros(xv.rows(), xv.cols());
                    let cols = xv.cols();
                    for (r, row) in dx.data_mut().chunks_exact_mut(cols).enumerate() {
                        acf::acsl_linear_grad(xv.row(r), row);
                        let gr = g.get(r, 0);
                        row.iter_mut().for_each(|d| *d *= gr);
                    }
                    accumulate(&mut grads, *x, dx);
                }
                Op::CrossEntropyRows { p, targets, clamp } => {
                    let pv = self.value(*p);
                    let bits = targets.cols();
                    let mut dp = Tensor2::zeros(pv.rows(), pv.cols());
                    for r in 0..pv.rows() {
                        let gr = g.get(r, 0) / bits as f64;
                        let prow = pv.row(r);
                        let trow = targets.row(r);
                        let drow = dp.row_mut(r);
                        for i in 0..bits {
                            let m = trow[i];
                            let (p0, p1) = (prow[2 * i], prow[2 * i + 1]);
                            if p0 > *clamp && p0 < 1.0 - clamp {
                                drow[2 * i] = -gr * (1.0 - m) / p0;
                            }
                            if p1 > *clamp && p1 < 1.0 - clamp {
                                drow[2 * i + 1] = -gr * m / p1;
                            }
                        }
                    }
                    accumulate(&mut grads, *p, dp);
                }
                Op::Add { a, b } => {
                    if self.requires_grad(*a) {
                        accumulate(&mut grads, *a, g.clone());
                    }
                    if self.requires_grad(*b) {
                        accumulate(&mut grads, *b, g);
                    }
                }
                Op::Mul { a, b } => {
                    if self.requires_grad(*a) {
                        let da = elementwise(&g, self.value(*b), "mul", |x, y| x * y)?;
                        accumulate(&mut grads, *a, da);
                    }
                    if self.requires_grad(*b) {
                        let db = elementwise(&g, self.value(*a), "mul", |x, y| x * y)?;
                        accumulate(&mut grads, *b, db);
                    }
                }
                Op::Scale { x, alpha } => {
                    let dx = g.map(|v| v * alpha);
                    accumulate(&mut grads, *x, dx);
                }
                Op::Mean { x } => {
                    let xv = self.value(*x);
                    let n = (xv.rows() * xv.cols()) as f64;
                    let dx = Tensor2::filled(xv.rows(), xv.cols(), g.get(0, 0) / n);
                    accumulate(&mut grads, *x, dx);
                }
            }
        }
        // Only leaves keep their gradients; interior buffers were consumed.
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Tensor2>], v: Var, g: Tensor2) {
    match &mut grads[v.0] {
        Some(existing) => {
            for (e, x) in existing.data_mut().iter_mut().zip(g.data()) {
                *e += x;
            }
        }
        slot @ None => *slot = Some(g),
    }
}

fn elementwise(a: &Tensor2, b: &Tensor2, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Tensor2> {
    if a.shape() != b.shape() {
        return Err(shape_err(op, a.shape_str(), b.shape_str()));
    }
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Ok(Tensor2::from_raw(a.rows(), a.cols(), data))
}

fn mean_of(x: &Tensor2) -> f64 {
    let n = x.data().len();
    if n == 0 {
        return 0.0;
    }
    x.data().iter().sum::<f64>() / n as f64
}

fn batch_norm_backward(g: &Tensor2, y: &Tensor2, scale: &[f64], floored: &[bool]) -> Tensor2 {
    let rows = g.rows() as f64;
    let cols = g.cols();
    let mut g_mean = vec![0.0; cols];
    let mut gy_mean = vec![0.0; cols];
    for r in 0..g.rows() {
        for c in 0..cols {
            g_mean[c] += g.get(r, c);
            gy_mean[c] += g.get(r, c) * y.get(r, c);
        }
    }
    g_mean.iter_mut().for_each(|v| *v /= rows);
    gy_mean.iter_mut().for_each(|v| *v /= rows);
    let mut dx = Tensor2::zeros(g.rows(), cols);
    for r in 0..g.rows() {
        for c in 0..cols {
            let mut d = g.get(r, c) - g_mean[c];
            if !floored[c] {
                d -= y.get(r, c) * gy_mean[c];
            }
            dx.set(r, c, scale[c] * d);
        }
    }
    dx
}

fn acsl_rows_forward(x: &Tensor2) -> Result<Tensor2> {
    if x.cols() % 2 != 0 || x.cols() == 0 {
        return Err(shape_err("acsl_rows", x.shape_str(), "even positive row width"));
    }
    let mut out = Vec::with_capacity(x.rows());
    for (r, row) in x.iter_rows().enumerate() {
        let e: f64 = row.iter().map(|v| v * v).sum();
        if e <= 0.0 {
            return Err(Error::Domain(format!("row {r} has zero energy")));
        }
        out.push(acf::acsl_linear(row));
    }
    Ok(Tensor2::from_raw(x.rows(), 1, out))
}

fn cross_entropy_forward(p: &Tensor2, targets: &Tensor2, clamp: f64) -> Result<Tensor2> {
    if p.rows() != targets.rows() || p.cols() != 2 * targets.cols() {
        return Err(shape_err(
            "cross_entropy",
            format!("posteriors {}", p.shape_str()),
            format!("targets {}", targets.shape_str()),
        ));
    }
    let bits = targets.cols();
    let mut out = Vec::with_capacity(p.rows());
    for r in 0..p.rows() {
        let prow = p.row(r);
        let mut acc = 0.0;
        for (i, &m) in targets.row(r).iter().enumerate() {
            let p0 = prow[2 * i].clamp(clamp, 1.0 - clamp);
            let p1 = prow[2 * i + 1].clamp(clamp, 1.0 - clamp);
            acc += -m * p1.ln() - (1.0 - m) * p0.ln();
        }
        out.push(acc / bits as f64);
    }
    Ok(Tensor2::from_raw(p.rows(), 1, out))
}
