//! Space-side lattice sum with the oscillatory kernel `W(a)`.
//!
//! With offsets `p = x₁ − x₂`, `q = x₃ − x₂` the constraint gives
//! `x₄ = x₂ + p + q` and `a = −2pq`, so
//!
//! ```text
//! 𝒬 = (4π)⁻¹ ∬ W(−2pq) G(p, q) dp dq,
//! G(p, q) = ∫ conj f₁(x+p) f₂(x) conj f₃(x+q) f₄(x+p+q) dx.
//! ```
//!
//! `W` splits as `R(pq) − ln|p| − ln|q| + i(π/2)·sgn p·sgn q` with `R`
//! smooth. The two logarithms get the corrected trapezoidal weight
//! `ln(h/2π)` on their singular line plus the `ζ′(−2)·h³·∂²G` curvature
//! term, and the sign jumps get the `h²/6 · ∂G` endpoint correction.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::LatticeWindow;
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::grid::{ComplexField, Side};
use crate::special::{kernel_phase_unchecked, EULER_GAMMA};

const ZETA_PRIME_MINUS_2: f64 = -0.030_448_457_058_393_27;

/// Lattice value split at the near-singular band.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelValue {
    /// Plain sum over off-axis nodes with `|a| ≥ δ`.
    pub value: Complex64,
    /// Contribution of the band `|a| < δ`, the singular axes and the
    /// jump corrections.
    pub excluded_mass: Complex64,
}

impl KernelValue {
    pub fn total(&self) -> Complex64 {
        self.value + self.excluded_mass
    }
}

/// Totals over a `δ` schedule and their linear extrapolation to `δ = 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelExtrapolation {
    pub deltas: Vec<f64>,
    pub values: Vec<KernelValue>,
    pub extrapolated: Complex64,
}

/// The correlation table `G(p, q)` for offsets in a centred window.
#[derive(Debug, Clone)]
pub struct KernelLattice {
    h: f64,
    half: isize,
    g: Vec<Complex64>,
}

impl KernelLattice {
    /// Builds `G` for `p, q ∈ [−size/2, size/2)`. Samples outside the grid
    /// count as zero, so the fields should vanish near the box edges.
    pub fn new(
        f1: &ComplexField,
        f2: &ComplexField,
        f3: &ComplexField,
        f4: &ComplexField,
        window: LatticeWindow,
    ) -> Result<Self> {
        for f in [f1, f2, f3, f4] {
            f.expect_side(Side::Space)?;
            f1.check_same_grid(f)?;
        }
        if window.stride != 1 {
            return Err(Error::InvalidParameter("kernel lattice needs unit stride"));
        }
        let grid = f1.grid();
        let n = grid.n() as isize;
        window.indices(grid.n())?;
        let h = grid.dx();
        let half = (window.size / 2) as isize;
        let side = 2 * half;
        let c1: Vec<Complex64> = f1.values().iter().map(|v| v.conj()).collect();
        let c3: Vec<Complex64> = f3.values().iter().map(|v| v.conj()).collect();
        let v2 = f2.values();
        let v4 = f4.values();
        let support: Vec<isize> = (0..n).filter(|&j| v2[j as usize] != Complex64::new(0.0, 0.0)).collect();
        let mut g = vec![Complex64::new(0.0, 0.0); (side * side) as usize];
        for p in -half..half {
            for q in -half..half {
                let mut acc = Complex64::new(0.0, 0.0);
                for &j in &support {
                    let (j1, j3, j4) = (j + p, j + q, j + p + q);
                    if j1 < 0 || j1 >= n || j3 < 0 || j3 >= n || j4 < 0 || j4 >= n {
                        continue;
                    }
                    acc += c1[j1 as usize] * v2[j as usize] * c3[j3 as usize] * v4[j4 as usize];
                }
                g[((p + half) * side + q + half) as usize] = acc * h;
            }
        }
        Ok(Self { h, half, g })
    }

    fn at(&self, p: isize, q: isize) -> Complex64 {
        if p < -self.half || p >= self.half || q < -self.half || q >= self.half {
            return Complex64::new(0.0, 0.0);
        }
        let side = 2 * self.half;
        self.g[((p + self.half) * side + q + self.half) as usize]
    }

    // Sixth-order central difference of k ↦ G at offsets around 0 along one axis.
    fn derivative(&self, g: impl Fn(isize) -> Complex64) -> Complex64 {
        (-g(-3) + g(-2) * 9.0 - g(-1) * 45.0 + g(1) * 45.0 - g(2) * 9.0 + g(3)) / (60.0 * self.h)
    }

    fn second_derivative(&self, g: impl Fn(isize) -> Complex64) -> Complex64 {
        (g(-3) * 2.0 - g(-2) * 27.0 + g(-1) * 270.0 - g(0) * 490.0 + g(1) * 270.0 - g(2) * 27.0 + g(3) * 2.0)
            / (180.0 * self.h * self.h)
    }

    /// Splits the lattice sum at `|a| = delta_min`.
    pub fn evaluate(&self, delta_min: f64) -> Result<KernelValue> {
        if !(delta_min > 0.0) {
            return Err(Error::InvalidParameter("delta_min must be positive"));
        }
        let h = self.h;
        let r0 = core::f64::consts::LN_2 - EULER_GAMMA;
        let log_axis = libm::log(h / (2.0 * PI));
        let log_off = |k: isize| {
            if k == 0 {
                log_axis
            } else {
                libm::log(k.unsigned_abs() as f64 * h)
            }
        };
        let mut value = Complex64::new(0.0, 0.0);
        let mut band = Complex64::new(0.0, 0.0);
        for p in -self.half..self.half {
            for q in -self.half..self.half {
                let g = self.at(p, q);
                if p == 0 || q == 0 {
                    band += g * (r0 - log_off(p) - log_off(q));
                    continue;
                }
                let a = -2.0 * (p * q) as f64 * h * h;
                let term = g * kernel_phase_unchecked(a);
                if a.abs() >= delta_min {
                    value += term;
                } else {
                    band += term;
                }
            }
        }
        let mut jump = Complex64::new(0.0, 0.0);
        let mut curvature = Complex64::new(0.0, 0.0);
        for k in -self.half..self.half {
            curvature += self.second_derivative(|p| self.at(p, k));
            curvature += self.second_derivative(|q| self.at(k, q));
            if k == 0 {
                continue;
            }
            let s = k.signum() as f64;
            jump += self.derivative(|p| self.at(p, k)) * s;
            jump += self.derivative(|q| self.at(k, q)) * s;
        }
        let scale = h * h / (4.0 * PI);
        let corrections = Complex64::new(0.0, FRAC_PI_2) * jump * (h / 6.0) + curvature * (-ZETA_PRIME_MINUS_2 * h * h);
        Ok(KernelValue {
            value: value * scale,
            excluded_mass: (band + corrections) * scale,
        })
    }
}

/// `𝒬(f₁,f₂,f₃,f₄)` through the space-kernel lattice.
pub fn eval_q4_kernel(
    f1: &ComplexField,
    f2: &ComplexField,
    f3: &ComplexField,
    f4: &ComplexField,
    delta_min: f64,
    window: LatticeWindow,
) -> Result<KernelValue> {
    KernelLattice::new(f1, f2, f3, f4, window)?.evaluate(delta_min)
}

/// Evaluates the totals over a decreasing `δ` schedule and extrapolates
/// linearly in `δ` to zero.
pub fn extrapolate_kernel(lattice: &KernelLattice, schedule: &[f64]) -> Result<KernelExtrapolation> {
    if schedule.len() < 2 {
        return Err(Error::TooFewPoints(schedule.len(), 2));
    }
    let values = schedule
        .iter()
        .map(|&d| lattice.evaluate(d))
        .collect::<Result<Vec<_>>>()?;
    let re: Vec<f64> = values.iter().map(|v| v.total().re).collect();
    let im: Vec<f64> = values.iter().map(|v| v.total().im).collect();
    let extrapolated = Complex64::new(
        linear_fit(schedule, &re)?.intercept,
        linear_fit(schedule, &im)?.intercept,
    );
    Ok(KernelExtrapolation {
        deltas: schedule.to_vec(),
        values,
        extrapolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::qfunc::eval_q4_direct;
    use crate::quadrature::SQuadrature;

    #[test]
    fn corrected_log_rule_1d() {
        // ∫ e^{-p²} ln|p| dp = −(√π/2)(γ + 2 ln 2)
        let exact = -libm::sqrt(PI) / 2.0 * (EULER_GAMMA + 2.0 * core::f64::consts::LN_2);
        for h in [0.2, 0.1, 0.05] {
            let mut s = libm::log(h / (2.0 * PI));
            for k in 1..2000 {
                let p = k as f64 * h;
                s += 2.0 * libm::exp(-p * p) * libm::log(p);
            }
            let plain = (s * h - exact).abs();
            // g''(0) = −2
            let corrected = (s * h - 2.0 * ZETA_PRIME_MINUS_2 * h * h * h - exact).abs();
            assert!(plain < 0.07 * h * h * h, "h = {h}: {plain}");
            assert!(corrected < 0.02 * h * h * h * h * h, "h = {h}: {corrected}");
        }
    }

    fn packet(grid: &crate::grid::Grid, c: f64, k: f64, phase: f64) -> ComplexField {
        ComplexField::from_space_fn(grid, |x| {
            let (s, co) = libm::sincos(k * x + phase);
            Complex64::new(co, s) * libm::exp(-(x - c) * (x - c) / 2.0)
        })
    }

    #[test]
    fn zero_inputs() {
        let g = make_grid(64, 16.0).unwrap();
        let z = ComplexField::zeros(&g, Side::Space);
        let v = eval_q4_kernel(&z, &z, &z, &z, 0.05, LatticeWindow::centered(32)).unwrap();
        assert_eq!(v.total(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn matches_direct() {
        let g = make_grid(256, 16.0).unwrap();
        let q = SQuadrature::gauss_legendre(32).unwrap();
        let fs = [
            packet(&g, 0.0, 0.3, 0.0),
            packet(&g, 0.4, -0.5, 1.0),
            packet(&g, -0.3, 0.2, 2.0),
            packet(&g, 0.1, 0.6, 0.5),
        ];
        let direct = eval_q4_direct(&fs[0], &fs[1], &fs[2], &fs[3], &q).unwrap();
        let lattice = KernelLattice::new(&fs[0], &fs[1], &fs[2], &fs[3], LatticeWindow::centered(160)).unwrap();
        let ex = extrapolate_kernel(&lattice, &[0.1, 0.05, 0.025]).unwrap();
        let gap = (ex.extrapolated - direct).norm() / direct.norm();
        assert!(gap < 1e-6, "gap {gap}: {} vs {direct}", ex.extrapolated);
    }

    #[test]
    fn diagonal_value_is_real() {
        let g = make_grid(128, 16.0).unwrap();
        let f = packet(&g, 0.2, 0.4, 0.0);
        let v = eval_q4_kernel(&f, &f, &f, &f, 0.05, LatticeWindow::centered(96)).unwrap();
        assert!(v.total().im.abs() < 1e-10 * v.total().re, "{}", v.total());
    }
}
