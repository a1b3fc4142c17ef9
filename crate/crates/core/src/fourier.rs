//! 1-periodic complex functions stored as truncated Fourier series.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Fourier coefficients c_k of f(s) = Σ c_k e^{2πiks} for k ∈ {−K/2, …, K/2 − 1}, stored at index k + K/2.
///
/// The Nyquist coefficient c_{−K/2} is evaluated symmetrically as c_{−K/2}·cos(πKs).
#[derive(Clone, Debug, PartialEq)]
pub struct FourierFn {
    pub coeffs: Vec<C64>,
}

impl FourierFn {
    /// Zero function with `k` modes.
    pub fn zeros(k: usize) -> Self {
        Self { coeffs: vec![C64::new(0.0, 0.0); k] }
    }

    /// Number of stored modes K.
    pub fn k(&self) -> usize {
        self.coeffs.len()
    }

    /// Coefficient of mode `m`, zero outside the stored range.
    pub fn coeff(&self, m: i64) -> C64 {
        let h = (self.k() / 2) as i64;
        if m < -h || m >= h {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(m + h) as usize]
        }
    }

    /// Sets the coefficient of mode `m` (must be in range).
    pub fn set_coeff(&mut self, m: i64, v: C64) {
        let h = (self.k() / 2) as i64;
        self.coeffs[(m + h) as usize] = v;
    }

    /// Forward transform of samples at s_j = j/K.
    pub fn from_samples(samples: &[C64]) -> Result<Self> {
        let k = samples.len();
        if k < 2 || !k.is_power_of_two() {
            return Err(Error::Dimension(format!("sample count must be a power of two, got {k}")));
        }
        let mut buf = samples.to_vec();
        FftPlanner::new().plan_fft_forward(k).process(&mut buf);
        let h = k / 2;
        let inv = 1.0 / k as f64;
        let mut coeffs = vec![C64::new(0.0, 0.0); k];
        for (j, v) in buf.into_iter().enumerate() {
            // bin j holds mode j for j < K/2 and mode j − K otherwise
            let m = if j < h { j as i64 } else { j as i64 - k as i64 };
            coeffs[(m + h as i64) as usize] = v * inv;
        }
        Ok(Self { coeffs })
    }

    /// Samples on the native grid s_j = j/K (exact inverse of [`FourierFn::from_samples`]).
    pub fn to_samples(&self) -> Vec<C64> {
        let k = self.k();
        let h = k / 2;
        let mut buf = vec![C64::new(0.0, 0.0); k];
        for (idx, c) in self.coeffs.iter().enumerate() {
            let m = idx as i64 - h as i64;
            let bin = if m >= 0 { m as usize } else { (m + k as i64) as usize };
            buf[bin] = *c;
        }
        FftPlanner::new().plan_fft_inverse(k).process(&mut buf);
        buf
    }

    /// Trigonometric interpolant sampled on s_j = j/n, n ≥ K a power of two.
    pub fn samples_on(&self, n: usize) -> Vec<C64> {
        self.resized(n).to_samples()
    }

    /// Same function with `n` stored modes: zero padding (Nyquist split evenly) or truncation.
    pub fn resized(&self, n: usize) -> Self {
        let k = self.k();
        if n == k {
            return self.clone();
        }
        let mut out = FourierFn::zeros(n);
        let hk = (k / 2) as i64;
        let hn = (n / 2) as i64;
        if n > k {
            for m in -hk + 1..hk {
                out.set_coeff(m, self.coeff(m));
            }
            let c = self.coeff(-hk) * 0.5;
            out.set_coeff(-hk, c);
            out.set_coeff(hk, c);
        } else {
            for m in -hn + 1..hn {
                out.set_coeff(m, self.coeff(m));
            }
            let c = self.coeff(-hn) + self.coeff(hn);
            out.set_coeff(-hn, c);
        }
        out
    }

    /// f(s) by direct summation.
    pub fn eval(&self, s: f64) -> C64 {
        let h = (self.k() / 2) as i64;
        let mut v = self.coeff(-h) * (std::f64::consts::PI * self.k() as f64 * s).cos();
        for m in -h + 1..h {
            v += self.coeff(m) * C64::from_polar(1.0, TWO_PI * m as f64 * s);
        }
        v
    }

    /// Fraction of Σ|c_k|² carried by modes with |k| > `cut`.
    pub fn tail_fraction(&self, cut: i64) -> f64 {
        let h = (self.k() / 2) as i64;
        let mut tot = 0.0;
        let mut tail = 0.0;
        for m in -h..h {
            let e = self.coeff(m).norm_sqr();
            tot += e;
            if m.abs() > cut {
                tail += e;
            }
        }
        if tot == 0.0 {
            0.0
        } else {
            tail / tot
        }
    }

    /// Pointwise scaling.
    pub fn scale(&self, a: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * a).collect() }
    }

    /// max_s |f(s)| estimated on an n-point grid.
    pub fn sup_norm(&self, n: usize) -> f64 {
        self.samples_on(n.max(self.k())).iter().fold(0.0f64, |a, v| a.max(v.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_single_mode() {
        let k = 16;
        let one = FourierFn::from_samples(&vec![C64::new(1.0, 0.0); k]).unwrap();
        for m in -8..8 {
            let want = if m == 0 { 1.0 } else { 0.0 };
            assert!((one.coeff(m) - want).norm() < 1e-15);
        }
        let e: Vec<C64> = (0..k).map(|j| C64::from_polar(1.0, TWO_PI * j as f64 / k as f64)).collect();
        let f = FourierFn::from_samples(&e).unwrap();
        assert!((f.coeff(1) - 1.0).norm() < 1e-14);
        assert!((f.eval(0.123) - C64::from_polar(1.0, TWO_PI * 0.123)).norm() < 1e-14);
    }

    #[test]
    fn round_trip() {
        let k = 64;
        let s: Vec<C64> = (0..k).map(|j| C64::new((j as f64 * 0.7).sin(), (j as f64 * 1.3).cos())).collect();
        let f = FourierFn::from_samples(&s).unwrap();
        for (a, b) in s.iter().zip(f.to_samples()) {
            assert!((a - b).norm() < 1e-12);
        }
        let fine = f.samples_on(256);
        for j in 0..k {
            assert!((fine[4 * j] - s[j]).norm() < 1e-12);
            assert!((f.eval(j as f64 / k as f64) - s[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn resize_roundtrip() {
        let k = 32;
        let s: Vec<C64> = (0..k).map(|j| C64::new((j as f64).sin(), 0.0)).collect();
        let f = FourierFn::from_samples(&s).unwrap();
        let g = f.resized(128).resized(32);
        for (a, b) in f.coeffs.iter().zip(&g.coeffs) {
            assert!((a - b).norm() < 1e-14);
        }
    }
}
