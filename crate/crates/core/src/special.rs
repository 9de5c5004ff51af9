//! Sine and cosine integrals and the oscillatory kernel of the space-side representation.
//!
//! `Si(x) = ∫₀ˣ sin t/t dt`, `Ci(x) = γ + ln x − Cin(x)`, `Cin(x) = ∫₀ˣ (1 − cos t)/t dt`.
//! Power series up to `x = 4`, continued fraction for `E₁(ix)` beyond.

use core::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_LIMIT: f64 = 4.0;
const EPS: f64 = 1e-16;
const MAX_ITER: usize = 200;

/// `Si(x)`, odd in `x`.
pub fn si(x: f64) -> f64 {
    if x < 0.0 {
        return -si(-x);
    }
    if x <= SERIES_LIMIT {
        si_series(x)
    } else {
        FRAC_PI_2 + e1_imaginary(x).im
    }
}

/// `Ci(x)` for `x > 0`.
pub fn ci(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x <= SERIES_LIMIT {
        EULER_GAMMA + libm::log(x) - cin_series(x)
    } else {
        -e1_imaginary(x).re
    }
}

/// Entire function `Cin(x) = ∫₀ˣ (1 − cos t)/t dt`, even in `x`.
pub fn cin(x: f64) -> f64 {
    let x = x.abs();
    if x <= SERIES_LIMIT {
        cin_series(x)
    } else {
        EULER_GAMMA + libm::log(x) - ci(x)
    }
}

fn si_series(x: f64) -> f64 {
    // Σ (-1)^k x^{2k+1} / ((2k+1)(2k+1)!)
    let x2 = x * x;
    let mut term = x; // x^{2k+1}/(2k+1)!
    let mut sum = x;
    let mut k = 0usize;
    loop {
        k += 1;
        let m = (2 * k) as f64;
        term *= -x2 / (m * (m + 1.0));
        let add = term / (m + 1.0);
        sum += add;
        if add.abs() < EPS * sum.abs() || k > MAX_ITER {
            break;
        }
    }
    sum
}

fn cin_series(x: f64) -> f64 {
    // Σ_{k≥1} (-1)^{k+1} x^{2k} / (2k (2k)!)
    let x2 = x * x;
    if x2 == 0.0 {
        return 0.0;
    }
    let mut term = 1.0; // (-1)^{k+1} x^{2k}/(2k)! up to sign bookkeeping
    let mut sum = 0.0;
    let mut k = 0usize;
    loop {
        k += 1;
        let m = (2 * k) as f64;
        term *= -x2 / ((m - 1.0) * m);
        let add = -term / m;
        sum += add;
        if add.abs() < EPS * sum.abs() || k > MAX_ITER {
            break;
        }
    }
    sum
}

/// `E₁(ix) = −Ci(x) + i(Si(x) − π/2)` for `x > 2` by modified Lentz evaluation
/// of the continued fraction.
fn e1_imaginary(x: f64) -> Complex64 {
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = Complex64::new(1.0, 0.0) / b;
    let mut h = d;
    for i in 2..MAX_ITER {
        let a = -(((i - 1) * (i - 1)) as f64);
        b += 2.0;
        d = Complex64::new(1.0, 0.0) / (d * a + b);
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < EPS {
            break;
        }
    }
    let (s, co) = libm::sincos(x);
    Complex64::new(co, -s) * h
}

/// `W(a) = ∫₀¹ t⁻¹ exp(−i a/(4t)) dt = −Ci(|a|/4) − i·sign(a)·(π/2 − Si(|a|/4))`.
///
/// The integral diverges logarithmically at `a = 0`; arguments with
/// `|a| < delta_min` are rejected.
pub fn kernel_phase(a: f64, delta_min: f64) -> Result<Complex64> {
    if !(a.abs() >= delta_min) || a == 0.0 {
        return Err(Error::NearSingular(a));
    }
    Ok(kernel_phase_unchecked(a))
}

pub(crate) fn kernel_phase_unchecked(a: f64) -> Complex64 {
    let b = 0.25 * a.abs();
    let im = FRAC_PI_2 - si(b);
    Complex64::new(-ci(b), if a > 0.0 { -im } else { im })
}

/// `Φ(a) = ∫₀¹ exp(i t a) dt = (exp(ia) − 1)/(ia)`, with `Φ(0) = 1`.
pub fn phase_average(a: f64) -> Complex64 {
    if a.abs() < 1e-4 {
        // Taylor: 1 + ia/2 − a²/6 − i a³/24
        let a2 = a * a;
        return Complex64::new(1.0 - a2 / 6.0 + a2 * a2 / 120.0, a / 2.0 - a * a2 / 24.0);
    }
    let (s, c) = libm::sincos(a);
    Complex64::new(s / a, (1.0 - c) / a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Abramowitz & Stegun table 5.1
        assert!((si(1.0) - 0.946_083_070_367_183).abs() < 1e-15);
        assert!((ci(1.0) - 0.337_403_922_900_968_1).abs() < 1e-15);
        assert!((si(10.0) - 1.658_347_594_218_874).abs() < 1e-14);
        assert!((ci(10.0) + 0.045_456_433_004_455_37).abs() < 1e-14);
    }

    #[test]
    fn continuous_across_series_limit() {
        let lo = SERIES_LIMIT * (1.0 - 1e-12);
        let hi = SERIES_LIMIT * (1.0 + 1e-12);
        // both derivatives are below 0.2 in magnitude at x = 4
        assert!((si_series(lo) - (FRAC_PI_2 + e1_imaginary(hi).im)).abs() < 5e-12);
        assert!(((EULER_GAMMA + libm::log(lo) - cin_series(lo)) + e1_imaginary(hi).re).abs() < 5e-12);
    }

    #[test]
    fn kernel_phase_conjugate_symmetry() {
        for &a in &[0.3, 1.0, 4.0, 17.0, 123.0] {
            let p = kernel_phase(a, 1e-3).unwrap();
            let m = kernel_phase(-a, 1e-3).unwrap();
            assert!((p.conj() - m).norm() < 1e-15);
        }
    }

    #[test]
    fn kernel_phase_at_four() {
        let w = kernel_phase(4.0, 0.1).unwrap();
        let expected = Complex64::new(-ci(1.0), -(FRAC_PI_2 - si(1.0)));
        assert!((w - expected).norm() < 1e-15);
    }

    #[test]
    fn kernel_phase_rejects_band() {
        assert_eq!(kernel_phase(0.01, 0.1), Err(Error::NearSingular(0.01)));
        assert!(kernel_phase(0.0, 0.0).is_err());
    }

    #[test]
    fn phase_average_limits() {
        assert_eq!(phase_average(0.0), Complex64::new(1.0, 0.0));
        let a = 2e-4;
        let direct = Complex64::new(libm::sin(a) / a, (1.0 - libm::cos(a)) / a);
        assert!((phase_average(a) - direct).norm() < 1e-15);
        let small = 0.9e-4;
        let series = phase_average(small);
        assert!((series - Complex64::new(libm::sin(small) / small, (1.0 - libm::cos(small)) / small)).norm() < 1e-12);
    }

    // ∫₁^∞ e^{-ibu}/u du by Gauss–Legendre panels up to bU ≈ 4000, plus
    // the asymptotic tail e^{-ibU}/(ibU)·Σ k!/(ibU)^k.
    fn oscillatory_oracle(a: f64) -> Complex64 {
        let b = 0.25 * a;
        let rule = crate::quadrature::SQuadrature::gauss_legendre(20).unwrap();
        let width = (core::f64::consts::PI / b.abs()).min(0.5);
        let panels = (4000.0 / (b.abs() * width)) as usize;
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..panels {
            let lo = 1.0 + k as f64 * width;
            for (s, w) in rule.iter() {
                let u = lo + s * width;
                let (sn, cs) = libm::sincos(-b * u);
                sum += Complex64::new(cs, sn) * (w * width / u);
            }
        }
        let upper = 1.0 + panels as f64 * width;
        let z = Complex64::new(0.0, b * upper);
        let mut series = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0);
        for k in 0..6 {
            series += term;
            term *= -((k + 1) as f64) / z;
        }
        let (sn, cs) = libm::sincos(-b * upper);
        sum + Complex64::new(cs, sn) / z * series
    }

    #[test]
    fn kernel_phase_matches_quadrature_oracle() {
        for &a in &[0.5, 2.0, 4.0, 15.0, -7.0, 60.0] {
            let w = kernel_phase(a, 1e-3).unwrap();
            let oracle = oscillatory_oracle(a);
            assert!((w - oracle).norm() < 1e-10, "a = {a}: {w} vs {oracle}");
        }
    }

    #[test]
    fn kernel_phase_decay_envelope() {
        let mut a = 1.0;
        while a < 1e4 {
            assert!(kernel_phase_unchecked(a).norm() <= 8.0 / a, "a = {a}");
            assert!(kernel_phase_unchecked(-a).norm() <= 8.0 / a);
            a *= 1.37;
        }
    }
}
