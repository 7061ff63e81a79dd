//! Periodic autocorrelation and the autocorrelation sidelobe level (ACSL).
//!
//! For a codeword `c` of `N` complex symbols, the normalized periodic
//! autocorrelation at lag `l` is
//!
//! ```text
//! chi(l) = sum_i c[i] * conj(c[(i - l) mod N]) / sum_i |c[i]|^2
//! ```
//!
//! and the ACSL is the mean of `|chi(l)|^2` over the nonzero lags `1..N-1`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// `N` complex symbols stored as `2N` interleaved reals (re, im, re, im, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    data: Vec<f64>,
}

impl Codeword {
    pub fn from_interleaved(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() || data.len() % 2 != 0 {
            return Err(Error::Domain(format!(
                "interleaved codeword needs a positive even number of reals, got {}",
                data.len()
            )));
        }
        Ok(Self { data })
    }

    pub fn from_symbols(symbols: &[Complex64]) -> Self {
        let data = symbols.iter().flat_map(|s| [s.re, s.im]).collect();
        Self { data }
    }

    pub fn from_real(values: &[f64]) -> Self {
        let data = values.iter().flat_map(|&v| [v, 0.0]).collect();
        Self { data }
    }

    /// Block length in complex symbols.
    pub fn len(&self) -> usize {
        self.data.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn interleaved(&self) -> &[f64] {
        &self.data
    }

    pub fn symbols(&self) -> Vec<Complex64> {
        to_symbols(&self.data)
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        let s: Vec<Complex64> = self.symbols().into_iter().map(|x| x * alpha).collect();
        Self::from_symbols(&s)
    }
}

pub(crate) fn to_symbols(interleaved: &[f64]) -> Vec<Complex64> {
    interleaved
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect()
}

/// Autocorrelation values at lags `1..N-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfProfile {
    n: usize,
    chi: Vec<Complex64>,
}

impl AcfProfile {
    pub fn block_len(&self) -> usize {
        self.n
    }

    /// `chi(l)` for `1 <= l < N`.
    pub fn at(&self, lag: usize) -> Complex64 {
        assert!(lag >= 1 && lag < self.n, "lag {lag} outside 1..{}", self.n);
        self.chi[lag - 1]
    }

    /// Values ordered by lag, starting at lag 1.
    pub fn values(&self) -> &[Complex64] {
        &self.chi
    }

    pub fn max_sidelobe(&self) -> f64 {
        self.chi.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_deviation(&self, other: &AcfProfile) -> f64 {
        self.chi
            .iter()
            .zip(&other.chi)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Linear and decibel ACSL. `db` is `-inf` when the linear value is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acsl {
    pub linear: f64,
    pub db: f64,
}

impl Acsl {
    pub fn from_linear(linear: f64) -> Self {
        let db = if linear > 0.0 {
            10.0 * linear.log10()
        } else {
            f64::NEG_INFINITY
        };
        Self { linear, db }
    }
}

/// Circular right shift: output index `i` holds input index `(i - lag) mod N`.
pub fn circular_shift(c: &Codeword, lag: usize) -> Result<Codeword> {
    let n = c.len();
    if lag >= n {
        return Err(Error::Domain(format!("lag {lag} out of range for N={n}")));
    }
    let sym = c.symbols();
    let shifted: Vec<Complex64> = (0..n).map(|i| sym[(i + n - lag) % n]).collect();
    Ok(Codeword::from_symbols(&shifted))
}

fn nonzero_energy(c: &Codeword) -> Result<f64> {
    let e = c.energy();
    if e > 0.0 && e.is_finite() {
        Ok(e)
    } else {
        Err(Error::Domain(format!("codeword energy {e} is not positive")))
    }
}

/// Unnormalized correlations `R(l)` for `l = 0..N-1` by direct summation.
fn raw_correlations(sym: &[Complex64]) -> Vec<Complex64> {
    let n = sym.len();
    (0..n)
        .map(|l| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                acc += sym[i] * sym[(i + n - l) % n].conj();
            }
            acc
        })
        .collect()
}

/// Direct O(N^2) evaluation of the periodic autocorrelation.
pub fn periodic_acf(c: &Codeword) -> Result<AcfProfile> {
    let e = nonzero_energy(c)?;
    let r = raw_correlations(&c.symbols());
    Ok(AcfProfile {
        n: c.len(),
        chi: r[1..].iter().map(|z| z / e).collect(),
    })
}

pub fn acsl(c: &Codeword) -> Result<Acsl> {
    nonzero_energy(c)?;
    Ok(Acsl::from_linear(acsl_linear(c.interleaved())))
}

/// Transform-domain autocorrelation: `IFFT(|FFT(c)|^2) / N`, normalized by energy.
pub fn acf_fft_oracle(c: &Codeword) -> Result<AcfProfile> {
    let e = nonzero_energy(c)?;
    let n = c.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = c.symbols();
    planner.plan_fft_forward(n).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex64::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / (n as f64 * e);
    Ok(AcfProfile {
        n,
        chi: buf[1..].iter().map(|z| z * scale).collect(),
    })
}

/// Linear ACSL of one interleaved codeword. The caller guarantees nonzero energy.
pub(crate) fn acsl_linear(interleaved: &[f64]) -> f64 {
    let sym = to_symbols(interleaved);
    let n = sym.len();
    if n < 2 {
        return 0.0;
    }
    let r = raw_correlations(&sym);
    let e = r[0].re;
    let sidelobes: f64 = r[1..].iter().map(|z| z.norm_sqr()).sum();
    sidelobes / ((n - 1) as f64 * e * e)
}

/// Gradient of [`acsl_linear`] with respect to the interleaved reals.
///
/// With `E = sum |c|^2`, `S = sum_{l>=1} |R(l)|^2`:
/// `d/dRe + i d/dIm = 4/(N-1) * (sum_{l>=1} R(l) c[k-l] / E^2 - S c[k] / E^3)`.
pub(crate) fn acsl_linear_grad(interleaved: &[f64], out: &mut [f64]) {
    let sym = to_symbols(interleaved);
    let n = sym.len();
    if n < 2 {
        out.iter_mut().for_each(|g| *g = 0.0);
        return;
    }
    let r = raw_correlations(&sym);
    let e = r[0].re;
    let s: f64 = r[1..].iter().map(|z| z.norm_sqr()).sum();
    let c0 = 4.0 / ((n - 1) as f64);
    let inv_e2 = 1.0 / (e * e);
    let s_e3 = s / (e * e * e);
    for k in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, rl) in r.iter().enumerate().skip(1) {
            acc += rl * sym[(k + n - l) % n];
        }
        let g = (acc * inv_e2 - sym[k] * s_e3) * c0;
        out[2 * k] = g.re;
        out[2 * k + 1] = g.im;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real(v: &[f64]) -> Codeword {
        Codeword::from_real(v)
    }

    fn random_codeword(rng: &mut ChaCha8Rng, n: usize) -> Codeword {
        let data = (0..2 * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        Codeword::from_interleaved(data).unwrap()
    }

    #[test]
    fn circular_shift_examples() {
        let c = real(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(circular_shift(&c, 0).unwrap(), c);
        assert_eq!(circular_shift(&c, 1).unwrap(), real(&[4.0, 1.0, 2.0, 3.0]));
        let back = circular_shift(&circular_shift(&c, 1).unwrap(), 3).unwrap();
        assert_eq!(back, c);
        assert!(circular_shift(&c, 4).is_err());
    }

    #[test]
    fn acf_examples() {
        let ones = periodic_acf(&real(&[1.0; 8])).unwrap();
        assert!(ones.values().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));

        // [1,1,1,-1]: R(1) = 1*(-1) + 1*1 + 1*1 + (-1)*1 = 0, R(2) = 1 - 1 + 1 - 1 = 0
        let p = periodic_acf(&real(&[1.0, 1.0, 1.0, -1.0])).unwrap();
        assert!(p.max_sidelobe() < 1e-15);
        assert_eq!(acsl(&real(&[1.0, 1.0, 1.0, -1.0])).unwrap().linear, 0.0);
        assert_eq!(acsl(&real(&[1.0, 1.0, 1.0, -1.0])).unwrap().db, f64::NEG_INFINITY);

        let a = acsl(&real(&[1.0; 8])).unwrap();
        assert!((a.linear - 1.0).abs() < 1e-15 && a.db.abs() < 1e-12);
    }

    #[test]
    fn zero_energy_is_domain_error() {
        let z = real(&[0.0; 4]);
        assert!(matches!(periodic_acf(&z), Err(Error::Domain(_))));
        assert!(acsl(&z).is_err());
        assert!(acf_fft_oracle(&z).is_err());
    }

    #[test]
    fn oracle_special_cases() {
        let ones = acf_fft_oracle(&real(&[1.0; 8])).unwrap();
        assert!(ones.values().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-12));
        let mut imp = vec![0.0; 8];
        imp[0] = 1.0;
        assert!(acf_fft_oracle(&real(&imp)).unwrap().max_sidelobe() < 1e-15);
        assert!(periodic_acf(&real(&imp)).unwrap().max_sidelobe() < 1e-15);
    }

    #[test]
    fn direct_matches_transform_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let c = random_codeword(&mut rng, 32);
            let d = periodic_acf(&c).unwrap();
            let o = acf_fft_oracle(&c).unwrap();
            worst = worst.max(d.max_abs_deviation(&o));
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn acsl_gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [4, 7, 32] {
            let c = random_codeword(&mut rng, n);
            let x = c.interleaved().to_vec();
            let mut g = vec![0.0; x.len()];
            acsl_linear_grad(&x, &mut g);
            for j in 0..x.len() {
                let h = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = (acsl_linear(&xp) - acsl_linear(&xm)) / (2.0 * h);
                let denom = g[j].abs().max(fd.abs()).max(1e-6);
                assert!((g[j] - fd).abs() / denom < 1e-5, "n={n} j={j}: {} vs {fd}", g[j]);
            }
        }
    }

    proptest! {
        #[test]
        fn acsl_is_phase_and_scale_invariant(
            seed in any::<u64>(),
            mag in 0.01f64..100.0,
            phase in 0.0f64..std::f64::consts::TAU,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = random_codeword(&mut rng, 16);
            let a = acsl(&c).unwrap().linear;
            let b = acsl(&c.scaled(Complex64::from_polar(mag, phase))).unwrap().linear;
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn acf_has_conjugate_symmetry(seed in any::<u64>(), n in 2usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = periodic_acf(&random_codeword(&mut rng, n)).unwrap();
            for l in 1..n {
                prop_assert!((p.at(n - l) - p.at(l).conj()).norm() < 1e-12);
                prop_assert!(p.at(l).norm() <= 1.0 + 1e-12);
            }
        }
    }
}
