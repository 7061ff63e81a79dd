use num_complex::Complex64;

use crate::acf::Codeword;
use crate::error::{Error, Result};

/// Even-length Zadoff-Chu sequence `x_u[n] = exp(-j pi u n^2 / N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZcSequence {
    pub n: usize,
    pub root: usize,
    pub symbols: Vec<Complex64>,
}

impl ZcSequence {
    pub fn new(n: usize, root: usize) -> Result<Self> {
        if n == 0 || n % 2 != 0 {
            return Err(Error::Domain(format!("only even ZC lengths are supported, got {n}")));
        }
        if root == 0 || root >= n || gcd(root, n) != 1 {
            return Err(Error::Domain(format!("root {root} is not coprime to {n}")));
        }
        let symbols = (0..n)
            .map(|i| {
                // reduce u*i^2 mod 2N before scaling to keep the phase exact
                let q = (root as u128 * (i as u128) * (i as u128)) % (2 * n as u128);
                Complex64::from_polar(1.0, -std::f64::consts::PI * q as f64 / n as f64)
            })
            .collect();
        Ok(Self { n, root, symbols })
    }

    pub fn codeword(&self) -> Codeword {
        Codeword::from_symbols(&self.symbols)
    }
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// All even-length ZC sequences of length `n`, one per root coprime to `n`.
pub fn zc_enumerate(n: usize) -> Result<Vec<ZcSequence>> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::Domain(format!("odd or zero ZC length {n} is unsupported")));
    }
    (1..n).filter(|&u| gcd(u, n) == 1).map(|u| ZcSequence::new(n, u)).collect()
}
