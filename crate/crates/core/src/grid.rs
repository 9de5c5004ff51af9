//! Periodic spatial grid, its frequency lattice, and fields sampled on them.
//!
//! Conventions (used everywhere else in the crate):
//!
//! * `x_j = -L/2 + j·dx`, `j = 0..n`, `dx = L/n`;
//! * `ξ_k = k·dξ`, `k = -n/2 .. n/2-1`, `dξ = 2π/L`, stored in increasing order;
//! * `f̂(ξ) = (2π)^{-1/2} ∫ exp(-ixξ) f(x) dx`, discretised as a Riemann sum,
//!   which makes the pair unitary for the weights `dx` and `dξ`;
//! * `T_r = exp(i r ∂ₓ²)` is the multiplier `exp(-i r ξ²)`.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fft::FftPlan;

/// Which variable a field is sampled in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Side {
    Space,
    Frequency,
}

/// Uniform periodic grid on `[-L/2, L/2)` with its matched frequency lattice.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    length: f64,
    plan: Arc<FftPlan>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length.to_bits() == other.length.to_bits()
    }
}

/// Builds a grid with `n` points (a power of two, at least 8) on a box of length `length`.
pub fn make_grid(n: usize, length: f64) -> Result<Grid> {
    if n < 8 || !n.is_power_of_two() {
        return Err(Error::BadPointCount(n));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::BadLength(length));
    }
    Ok(Grid {
        n,
        length,
        plan: Arc::new(FftPlan::new(n)),
    })
}

impl Grid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn dxi(&self) -> f64 {
        2.0 * PI / self.length
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.length + j as f64 * self.dx()
    }

    /// Frequency node `m` in increasing order, i.e. `(m - n/2)·dξ`.
    pub fn xi(&self, m: usize) -> f64 {
        (m as f64 - (self.n / 2) as f64) * self.dxi()
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    pub fn xi_nodes(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.xi(m)).collect()
    }

    /// Index of the node `x = 0` (and of `ξ = 0` on the frequency side).
    pub fn center(&self) -> usize {
        self.n / 2
    }

    /// Quadrature weight for a side.
    pub fn weight(&self, side: Side) -> f64 {
        match side {
            Side::Space => self.dx(),
            Side::Frequency => self.dxi(),
        }
    }

    /// Space samples to frequency samples (monotone lattice order).
    pub fn forward_values(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut buf = values.to_vec();
        self.plan.forward(&mut buf);
        let c = self.dx() / libm::sqrt(2.0 * PI);
        (0..n)
            .map(|m| {
                let v = buf[(m + n / 2) % n] * c;
                if m % 2 == 0 {
                    v
                } else {
                    -v
                }
            })
            .collect()
    }

    /// Frequency samples (monotone lattice order) back to space samples.
    pub fn inverse_values(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (m, v) in values.iter().enumerate() {
            buf[(m + n / 2) % n] = if m % 2 == 0 { *v } else { -*v };
        }
        self.plan.backward(&mut buf);
        let c = self.dxi() / libm::sqrt(2.0 * PI);
        for v in &mut buf {
            *v *= c;
        }
        buf
    }

    /// The free-propagator multiplier `exp(-i r ξ_m²)` on the lattice.
    pub fn propagator_symbol(&self, r: f64) -> Vec<Complex64> {
        (0..self.n)
            .map(|m| {
                let xi = self.xi(m);
                let (s, c) = libm::sincos(-r * xi * xi);
                Complex64::new(c, s)
            })
            .collect()
    }
}

/// Complex samples of a function on a [`Grid`], in space or in frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    side: Side,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: &Grid, side: Side, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                found: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            side,
            values,
        })
    }

    pub fn zeros(grid: &Grid, side: Side) -> Self {
        Self {
            grid: grid.clone(),
            side,
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    /// Samples `f` at the space nodes.
    pub fn from_space_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid: grid.clone(),
            side: Side::Space,
            values: grid.x_nodes().into_iter().map(f).collect(),
        }
    }

    /// Samples `f` at the frequency nodes.
    pub fn from_frequency_fn(grid: &Grid, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid: grid.clone(),
            side: Side::Frequency,
            values: grid.xi_nodes().into_iter().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Node coordinates matching this field's side.
    pub fn nodes(&self) -> Vec<f64> {
        match self.side {
            Side::Space => self.grid.x_nodes(),
            Side::Frequency => self.grid.xi_nodes(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.weight(self.side) * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        self.map(|v| v * c)
    }

    pub fn conj(&self) -> Self {
        self.map(|v| v.conj())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            side: self.side,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Applies `f(t, v)` with `t` the node coordinate on this field's side.
    pub fn map_indexed(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let values = self
            .nodes()
            .into_iter()
            .zip(&self.values)
            .map(|(t, v)| f(t, *v))
            .collect();
        Self {
            grid: self.grid.clone(),
            side: self.side,
            values,
        }
    }

    /// Pointwise `a·self + b·other`.
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            side: self.side,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&u, &v)| a * u + b * v)
                .collect(),
        })
    }

    /// Largest pointwise modulus of `self - other`.
    pub fn max_diff(&self, other: &Self) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        self.check_same_grid(other)?;
        if self.side != other.side {
            return Err(Error::SideMismatch {
                expected: self.side,
                found: other.side,
            });
        }
        Ok(())
    }

    pub(crate) fn expect_side(&self, side: Side) -> Result<()> {
        if self.side != side {
            return Err(Error::SideMismatch {
                expected: side,
                found: self.side,
            });
        }
        Ok(())
    }
}

/// `⟨f, g⟩ = Σ conj(f_j) g_j · w`, conjugate-linear in the first slot.
pub fn inner(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    f.check_compatible(g)?;
    let w = f.grid.weight(f.side);
    let s: Complex64 = f.values.iter().zip(&g.values).map(|(a, b)| a.conj() * b).sum();
    Ok(s * w)
}

pub fn forward_transform(f: &ComplexField) -> Result<ComplexField> {
    f.expect_side(Side::Space)?;
    Ok(ComplexField {
        grid: f.grid.clone(),
        side: Side::Frequency,
        values: f.grid.forward_values(&f.values),
    })
}

pub fn inverse_transform(fhat: &ComplexField) -> Result<ComplexField> {
    fhat.expect_side(Side::Frequency)?;
    Ok(ComplexField {
        grid: fhat.grid.clone(),
        side: Side::Space,
        values: fhat.grid.inverse_values(&fhat.values),
    })
}

/// Applies `T_r`. Works on either side and returns a field on the same side.
pub fn propagate(f: &ComplexField, r: f64) -> ComplexField {
    if r == 0.0 {
        return f.clone();
    }
    let grid = &f.grid;
    let symbol = grid.propagator_symbol(r);
    match f.side {
        Side::Frequency => ComplexField {
            grid: grid.clone(),
            side: Side::Frequency,
            values: f.values.iter().zip(&symbol).map(|(a, b)| a * b).collect(),
        },
        Side::Space => {
            let mut hat = grid.forward_values(&f.values);
            for (v, s) in hat.iter_mut().zip(&symbol) {
                *v *= s;
            }
            ComplexField {
                grid: grid.clone(),
                side: Side::Space,
                values: grid.inverse_values(&hat),
            }
        }
    }
}

/// Second derivative through the multiplier `-ξ²`.
pub fn second_derivative(f: &ComplexField) -> Result<ComplexField> {
    f.expect_side(Side::Space)?;
    let grid = &f.grid;
    let mut hat = grid.forward_values(&f.values);
    for (m, v) in hat.iter_mut().enumerate() {
        let xi = grid.xi(m);
        *v *= -xi * xi;
    }
    Ok(ComplexField {
        grid: grid.clone(),
        side: Side::Space,
        values: grid.inverse_values(&hat),
    })
}

/// `‖f′‖²` computed on the frequency side.
pub fn gradient_norm_sqr(f: &ComplexField) -> Result<f64> {
    f.expect_side(Side::Space)?;
    let grid = &f.grid;
    let hat = grid.forward_values(&f.values);
    Ok(grid.dxi()
        * hat
            .iter()
            .enumerate()
            .map(|(m, v)| {
                let xi = grid.xi(m);
                xi * xi * v.norm_sqr()
            })
            .sum::<f64>())
}

/// Shifts a space-side field by `c` (the result samples `f(x − c)`), exactly
/// for trigonometric interpolants.
pub fn translate(f: &ComplexField, c: f64) -> Result<ComplexField> {
    f.expect_side(Side::Space)?;
    let grid = &f.grid;
    let mut hat = grid.forward_values(&f.values);
    for (m, v) in hat.iter_mut().enumerate() {
        let (s, co) = libm::sincos(-grid.xi(m) * c);
        *v *= Complex64::new(co, s);
    }
    Ok(ComplexField {
        grid: grid.clone(),
        side: Side::Space,
        values: grid.inverse_values(&hat),
    })
}

/// Complex white noise on the frequency lattice shaped by
/// `exp(−ξ²/(2·bandwidth²))`, returned on the space side with unit norm.
pub fn random_smooth_field<R: Rng + ?Sized>(grid: &Grid, bandwidth: f64, rng: &mut R) -> ComplexField {
    let hat: Vec<Complex64> = (0..grid.n())
        .map(|m| {
            let xi = grid.xi(m) / bandwidth;
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * libm::exp(-0.5 * xi * xi)
        })
        .collect();
    let f = ComplexField {
        grid: grid.clone(),
        side: Side::Space,
        values: grid.inverse_values(&hat),
    };
    let norm = f.norm();
    f.scaled(Complex64::new(1.0 / norm, 0.0))
}

/// Complex white noise on the lattice nodes with `|ξ| ≤ cutoff`, tapered by
/// `cos²(πξ/(2·cutoff))`; exactly zero beyond the cutoff. Unit norm on the
/// space side.
pub fn band_limited_field<R: Rng + ?Sized>(grid: &Grid, cutoff: f64, rng: &mut R) -> Result<ComplexField> {
    if !(cutoff >= grid.dxi()) {
        return Err(Error::InvalidParameter("cutoff must cover at least one nonzero mode"));
    }
    let hat: Vec<Complex64> = (0..grid.n())
        .map(|m| {
            let xi = grid.xi(m);
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            if xi.abs() <= cutoff {
                let c = libm::cos(0.5 * PI * xi / cutoff);
                Complex64::new(re, im) * (c * c)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let f = ComplexField {
        grid: grid.clone(),
        side: Side::Space,
        values: grid.inverse_values(&hat),
    };
    let norm = f.norm();
    Ok(f.scaled(Complex64::new(1.0 / norm, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_spacings() {
        let g = make_grid(8, 16.0).unwrap();
        assert_eq!(g.dx(), 2.0);
        assert!((g.dxi() - PI / 8.0).abs() < 1e-15);
        let g = make_grid(256, 64.0).unwrap();
        assert_eq!(g.dx(), 0.25);
        assert!((g.dxi() - PI / 32.0).abs() < 1e-15);
        assert!((g.dx() * g.dxi() * g.n() as f64 - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert_eq!(make_grid(10, 16.0).unwrap_err(), Error::BadPointCount(10));
        assert_eq!(make_grid(4, 16.0).unwrap_err(), Error::BadPointCount(4));
        assert!(matches!(make_grid(16, 0.0), Err(Error::BadLength(_))));
        assert!(matches!(make_grid(16, -1.0), Err(Error::BadLength(_))));
    }

    #[test]
    fn nodes_monotone_and_symmetric() {
        let g = make_grid(16, 8.0).unwrap();
        let x = g.x_nodes();
        let xi = g.xi_nodes();
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!(xi.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(x[g.center()], 0.0);
        assert_eq!(xi[g.center()], 0.0);
        for j in 1..16 {
            assert!((x[j] + x[16 - j]).abs() < 1e-14);
            assert!((xi[j] + xi[16 - j]).abs() < 1e-14);
        }
    }

    #[test]
    fn inner_of_constant() {
        let g = make_grid(64, 8.0).unwrap();
        let one = ComplexField::from_space_fn(&g, |_| c(1.0));
        let v = inner(&one, &one).unwrap();
        assert!((v - c(8.0)).norm() < 1e-13);
    }

    #[test]
    fn inner_rejects_side_mismatch() {
        let g = make_grid(16, 8.0).unwrap();
        let a = ComplexField::zeros(&g, Side::Space);
        let b = ComplexField::zeros(&g, Side::Frequency);
        assert!(matches!(inner(&a, &b), Err(Error::SideMismatch { .. })));
        let h = make_grid(32, 8.0).unwrap();
        let d = ComplexField::zeros(&h, Side::Space);
        assert_eq!(inner(&a, &d).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn transform_rejects_wrong_side() {
        let g = make_grid(16, 8.0).unwrap();
        let a = ComplexField::zeros(&g, Side::Frequency);
        assert!(forward_transform(&a).is_err());
        assert!(inverse_transform(&forward_transform(&ComplexField::zeros(&g, Side::Space)).unwrap()).is_ok());
    }

    #[test]
    fn zero_field_has_zero_norm() {
        let g = make_grid(16, 8.0).unwrap();
        assert_eq!(ComplexField::zeros(&g, Side::Space).norm(), 0.0);
    }

    #[test]
    fn propagate_zero_is_identity() {
        let g = make_grid(32, 8.0).unwrap();
        let f = ComplexField::from_space_fn(&g, |x| Complex64::new(libm::exp(-x * x), x));
        assert_eq!(propagate(&f, 0.0), f);
    }

    #[test]
    fn second_derivative_of_gaussian() {
        let g = make_grid(256, 32.0).unwrap();
        let f = ComplexField::from_space_fn(&g, |x| c(libm::exp(-x * x / 2.0)));
        let d2 = second_derivative(&f).unwrap();
        for (j, v) in d2.values().iter().enumerate() {
            let x = g.x(j);
            let exact = (x * x - 1.0) * libm::exp(-x * x / 2.0);
            assert!((v.re - exact).abs() < 1e-12);
        }
        // ‖f′‖² = ∫ x² e^{-x²} = √π/2
        let gn = gradient_norm_sqr(&f).unwrap();
        assert!((gn - libm::sqrt(PI) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn band_limited_field_has_compact_spectrum() {
        use rand::SeedableRng;
        let g = make_grid(128, 32.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let f = band_limited_field(&g, 1.0, &mut rng).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-14);
        let hat = forward_transform(&f).unwrap();
        for (v, xi) in hat.values().iter().zip(g.xi_nodes()) {
            if xi.abs() > 1.0 {
                assert!(v.norm() < 1e-15);
            }
        }
        assert!(band_limited_field(&g, 0.01, &mut rng).is_err());
    }
}
