use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Five-number summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile of sorted data (`pos = (n - 1) p`).
fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * p;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Exact order statistics. `-inf` sorts first, NaN is rejected.
pub fn summarize_exact(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Usage("cannot summarize an empty report".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("report contains NaN".into()));
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(Summary {
        min: s[0],
        q1: sorted_quantile(&s, 0.25),
        median: sorted_quantile(&s, 0.5),
        q3: sorted_quantile(&s, 0.75),
        max: s[s.len() - 1],
    })
}

/// Jain-Chlamtac P² estimator of one quantile in O(1) memory.
///
/// The estimate is not bounded in the worst case; for smooth unimodal
/// distributions and 10^5 or more samples the error is typically a small
/// fraction of the interquartile range.
#[derive(Debug, Clone)]
pub struct P2Quantile {
    p: f64,
    q: [f64; 5],
    n: [f64; 5],
    desired: [f64; 5],
    increments: [f64; 5],
    count: usize,
}

impl P2Quantile {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            q: [0.0; 5],
            n: [0.0, 1.0, 2.0, 3.0, 4.0],
            desired: [0.0, 2.0 * p, 4.0 * p, 2.0 + 2.0 * p, 4.0],
            increments: [0.0, p / 2.0, p, (1.0 + p) / 2.0, 1.0],
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, x: f64) {
        if self.count < 5 {
            self.q[self.count] = x;
            self.count += 1;
            if self.count == 5 {
                self.q.sort_by(f64::total_cmp);
            }
            return;
        }
        self.count += 1;
        let k = if x < self.q[0] {
            self.q[0] = x;
            0
        } else if x >= self.q[4] {
            self.q[4] = x;
            3
        } else {
            (0..4).find(|&i| x < self.q[i + 1]).unwrap_or(3)
        };
        for i in k + 1..5 {
            self.n[i] += 1.0;
        }
        for i in 0..5 {
            self.desired[i] += self.increments[i];
        }
        for i in 1..4 {
            let d = self.desired[i] - self.n[i];
            if (d >= 1.0 && self.n[i + 1] - self.n[i] > 1.0) || (d <= -1.0 && self.n[i - 1] - self.n[i] < -1.0) {
                let s = d.signum();
                let candidate = self.parabolic(i, s);
                self.q[i] = if self.q[i - 1] < candidate && candidate < self.q[i + 1] {
                    candidate
                } else {
                    self.linear(i, s)
                };
                self.n[i] += s;
            }
        }
    }

    fn parabolic(&self, i: usize, s: f64) -> f64 {
        let (q, n) = (&self.q, &self.n);
        q[i] + s / (n[i + 1] - n[i - 1])
            * ((n[i] - n[i - 1] + s) * (q[i + 1] - q[i]) / (n[i + 1] - n[i])
                + (n[i + 1] - n[i] - s) * (q[i] - q[i - 1]) / (n[i] - n[i - 1]))
    }

    fn linear(&self, i: usize, s: f64) -> f64 {
        let j = if s > 0.0 { i + 1 } else { i - 1 };
        self.q[i] + s * (self.q[j] - self.q[i]) / (self.n[j] - self.n[i])
    }

    /// Current estimate; exact while fewer than five values were seen.
    pub fn estimate(&self) -> Option<f64> {
        match self.count {
            0 => None,
            c if c < 5 => {
                let mut s = self.q[..c].to_vec();
                s.sort_by(f64::total_cmp);
                Some(sorted_quantile(&s, self.p))
            }
            _ => Some(self.q[2]),
        }
    }
}

/// Streaming five-number summary: exact extremes, P² quartiles.
#[derive(Debug, Clone)]
pub struct StreamingSummary {
    min: f64,
    max: f64,
    quartiles: [P2Quantile; 3],
}

impl Default for StreamingSummary {
    fn default() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            quartiles: [P2Quantile::new(0.25), P2Quantile::new(0.5), P2Quantile::new(0.75)],
        }
    }
}

impl StreamingSummary {
    pub fn push(&mut self, x: f64) {
        self.min = self.min.min(x);
        self.max = self.max.max(x);
        for q in &mut self.quartiles {
            q.push(x);
        }
    }

    pub fn count(&self) -> usize {
        self.quartiles[0].count()
    }

    pub fn finish(&self) -> Result<Summary> {
        let est = |i: usize| self.quartiles[i].estimate();
        match (est(0), est(1), est(2)) {
            (Some(q1), Some(median), Some(q3)) => Ok(Summary {
                min: self.min,
                q1,
                median,
                q3,
                max: self.max,
            }),
            _ => Err(Error::Usage("cannot summarize an empty report".into())),
        }
    }
}
