//! The averaged nonlinearity `Q` and the quadrilinear functional `𝒬`.
//!
//! Three independent routes to `𝒬(f₁,f₂,f₃,f₄)`:
//!
//! * [`eval_q4_direct`]: space-time quadrature of `conj(T f₁) T f₂ conj(T f₃) T f₄`
//!   (the production path);
//! * [`eval_q4_fourier`]: lattice sum over frequency triples with the
//!   averaged phase `Φ(a)` and an optional multiplier;
//! * [`eval_q4_kernel`]: lattice sum over space triples with the oscillatory
//!   kernel `W(a)`, its logarithmic singularity treated by a corrected rule.

mod direct;
mod fourier;
mod kernel;

pub use direct::{eval_nonlinearity, eval_nonlinearity_cubic, eval_q4_direct, strichartz_value};
pub use fourier::{eval_q4_fourier, FourierValue};
pub use kernel::{eval_q4_kernel, extrapolate_kernel, KernelLattice, KernelValue};

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Weight `M(η₁,η₂,η₃,η₄)` inserted into the lattice representations.
pub trait Multiplier: Sync {
    fn value(&self, eta: [f64; 4]) -> Complex64;
}

/// `M ≡ 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitMultiplier;

impl Multiplier for UnitMultiplier {
    fn value(&self, _eta: [f64; 4]) -> Complex64 {
        Complex64::new(1.0, 0.0)
    }
}

impl<F> Multiplier for F
where
    F: Fn([f64; 4]) -> Complex64 + Sync,
{
    fn value(&self, eta: [f64; 4]) -> Complex64 {
        self(eta)
    }
}

/// Samples `|M|` on the constraint set `η₁ − η₂ + η₃ − η₄ = 0` with
/// `|η_j| ≤ radius` and returns the largest value seen, or an error if it
/// exceeds the declared bound.
pub fn check_multiplier_bound<R: Rng + ?Sized>(
    m: &dyn Multiplier,
    declared: f64,
    radius: f64,
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let e1 = rng.random_range(-radius..=radius);
        let e2 = rng.random_range(-radius..=radius);
        let e3 = rng.random_range(-radius..=radius);
        let e4 = e1 - e2 + e3;
        worst = worst.max(m.value([e1, e2, e3, e4]).norm());
    }
    if worst > declared {
        return Err(Error::InvalidParameter("multiplier exceeds its declared bound"));
    }
    Ok(worst)
}

/// Centred sub-lattice used by the `O(n³)` lattice sums: `size` nodes taken
/// every `stride` grid nodes around the origin.
///
/// A stride above one periodises the problem to a box of length `L/stride`,
/// so it is only meaningful for fields localised well inside that box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LatticeWindow {
    pub size: usize,
    pub stride: usize,
}

impl LatticeWindow {
    pub fn new(size: usize, stride: usize) -> Self {
        Self { size, stride }
    }

    /// Window covering `size` nodes at unit stride.
    pub fn centered(size: usize) -> Self {
        Self { size, stride: 1 }
    }

    /// Grid indices of the window nodes, or an error if they leave the grid.
    pub(crate) fn indices(&self, n: usize) -> Result<Vec<usize>> {
        if self.size < 2 || self.stride == 0 || !self.size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(
                "lattice window needs an even size ≥ 2 and stride ≥ 1",
            ));
        }
        let half = (self.size / 2) as isize;
        let c = (n / 2) as isize;
        let s = self.stride as isize;
        let lo = c - half * s;
        let hi = c + (half - 1) * s;
        if lo < 0 || hi >= n as isize {
            return Err(Error::OffLattice);
        }
        Ok((0..self.size as isize).map(|i| (lo + i * s) as usize).collect())
    }
}

/// Fraction of `Σ|v|²` that falls outside the window nodes.
pub(crate) fn leakage(values: &[Complex64], idx: &[usize]) -> f64 {
    let total: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let inside: f64 = idx.iter().map(|&i| values[i].norm_sqr()).sum();
    ((total - inside) / total).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn window_indices() {
        let w = LatticeWindow::new(4, 2);
        assert_eq!(w.indices(16).unwrap(), alloc::vec![4, 6, 8, 10]);
        assert_eq!(LatticeWindow::centered(16).indices(16).unwrap().len(), 16);
        assert!(LatticeWindow::new(32, 1).indices(16).is_err());
        assert!(LatticeWindow::new(3, 1).indices(16).is_err());
    }

    #[test]
    fn unit_multiplier_passes_bound_check() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let worst = check_multiplier_bound(&UnitMultiplier, 1.0, 5.0, 100, &mut rng).unwrap();
        assert_eq!(worst, 1.0);
        let big = |_: [f64; 4]| Complex64::new(2.0, 0.0);
        assert!(check_multiplier_bound(&big, 1.0, 5.0, 10, &mut rng).is_err());
    }
}
