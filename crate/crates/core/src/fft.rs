//! Radix-2 complex FFT for the power-of-two grids used throughout the crate.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

/// Precomputed twiddles and bit-reversal table for one transform length.
#[derive(Debug)]
pub(crate) struct FftPlan {
    n: usize,
    // exp(-2πik/n), k < n/2
    twiddles: Vec<Complex64>,
    bitrev: Vec<u32>,
}

impl FftPlan {
    pub(crate) fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two() && n >= 2);
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -2.0 * PI * (k as f64) / (n as f64);
                Complex64::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        let bits = n.trailing_zeros();
        let bitrev = (0..n as u32).map(|i| i.reverse_bits() >> (32 - bits)).collect();
        Self { n, twiddles, bitrev }
    }

    /// In-place `X_k = Σ_j x_j exp(-2πi jk/n)`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    /// In-place `x_j = Σ_k X_k exp(+2πi jk/n)` (no 1/n factor).
    pub(crate) fn backward(&self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    fn run(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n, "fft length mismatch");
        for i in 0..n {
            let j = self.bitrev[i] as usize;
            if i < j {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        let angle = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                        v * Complex64::new(libm::cos(angle), libm::sin(angle))
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let n = 32;
        let x: Vec<Complex64> = (0..n)
            .map(|j| Complex64::new(libm::sin(j as f64 * 0.7) + 0.1 * j as f64, libm::cos(j as f64 * 1.3)))
            .collect();
        let expected = naive_dft(&x);
        let mut y = x.clone();
        FftPlan::new(n).forward(&mut y);
        for (a, b) in y.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn backward_inverts_forward_up_to_n() {
        let n = 64;
        let plan = FftPlan::new(n);
        let x: Vec<Complex64> = (0..n).map(|j| Complex64::new(j as f64, -(j as f64) * 0.5)).collect();
        let mut y = x.clone();
        plan.forward(&mut y);
        plan.backward(&mut y);
        for (a, b) in y.iter().zip(&x) {
            assert!((a / n as f64 - b).norm() < 1e-12);
        }
    }
}
