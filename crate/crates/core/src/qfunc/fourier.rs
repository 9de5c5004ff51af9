use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::{leakage, LatticeWindow, Multiplier};
use crate::error::Result;
use crate::grid::{ComplexField, Side};
use crate::special::phase_average;

/// Result of the frequency-lattice evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FourierValue {
    pub value: Complex64,
    /// Largest fraction of `Σ|f̂_j|²` lying outside the window.
    pub leakage: f64,
}

/// `(2π)⁻¹ Σ Φ(a(η)) M(η) conj(f̂₁)f̂₂ conj(f̂₃)f̂₄ dξ³` over lattice triples
/// `(η₁,η₂,η₃)` with `η₄ = η₁ − η₂ + η₃`; triples whose `η₄` leaves the
/// window are dropped. `a(η) = η₁² − η₂² + η₃² − η₄²`.
///
/// With `multiplier = None` this is `𝒬` itself; with a multiplier it is
/// `(2π)⁻¹ K²_M`.
pub fn eval_q4_fourier(
    f1h: &ComplexField,
    f2h: &ComplexField,
    f3h: &ComplexField,
    f4h: &ComplexField,
    multiplier: Option<&dyn Multiplier>,
    window: LatticeWindow,
) -> Result<FourierValue> {
    for f in [f1h, f2h, f3h, f4h] {
        f.expect_side(Side::Frequency)?;
        f1h.check_same_grid(f)?;
    }
    let grid = f1h.grid();
    let idx = window.indices(grid.n())?;
    let size = idx.len();
    let h = grid.dxi() * window.stride as f64;
    let pick = |f: &ComplexField| -> Vec<Complex64> { idx.iter().map(|&i| f.values()[i]).collect() };
    let g1: Vec<Complex64> = pick(f1h).into_iter().map(|v| v.conj()).collect();
    let g2 = pick(f2h);
    let g3: Vec<Complex64> = pick(f3h).into_iter().map(|v| v.conj()).collect();
    let g4 = pick(f4h);
    let leak = [f1h, f2h, f3h, f4h]
        .iter()
        .map(|f| leakage(f.values(), &idx))
        .fold(0.0, f64::max);

    // a = 2h²(i₁ − i₂)(i₂ − i₃); tabulate Φ over the integer products.
    let span = (size * size) as isize;
    let phi: Vec<Complex64> = (-span..=span).map(|d| phase_average(2.0 * h * h * d as f64)).collect();
    let eta = |i: usize| (i as f64 - (size / 2) as f64) * h;

    let mut total = Complex64::new(0.0, 0.0);
    for i1 in 0..size {
        if g1[i1] == Complex64::new(0.0, 0.0) {
            continue;
        }
        let mut row = Complex64::new(0.0, 0.0);
        for i2 in 0..size {
            let a12 = g1[i1] * g2[i2];
            if a12 == Complex64::new(0.0, 0.0) {
                continue;
            }
            // i₄ = i₁ − i₂ + i₃ ∈ [0, size)
            let lo = i2.saturating_sub(i1);
            let hi = (size + i2).saturating_sub(i1).min(size);
            let d12 = i1 as isize - i2 as isize;
            for i3 in lo..hi {
                let i4 = i1 + i3 - i2;
                let d = d12 * (i2 as isize - i3 as isize);
                let mut term = a12 * g3[i3] * g4[i4] * phi[(d + span) as usize];
                if let Some(m) = multiplier {
                    term *= m.value([eta(i1), eta(i2), eta(i3), eta(i4)]);
                }
                row += term;
            }
        }
        total += row;
    }
    Ok(FourierValue {
        value: total * (h * h * h / (2.0 * PI)),
        leakage: leak,
    })
}
