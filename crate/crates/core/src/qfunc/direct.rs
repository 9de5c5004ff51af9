use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::Result;
use crate::grid::{ComplexField, Grid, Side};
use crate::quadrature::SQuadrature;

/// `Q(v₁,v₂,v₃) = ∫₀¹ T_s⁻¹(T_s v₁ · conj(T_s v₂) · T_s v₃) ds` with the rule `q`.
pub fn eval_nonlinearity(
    v1: &ComplexField,
    v2: &ComplexField,
    v3: &ComplexField,
    q: &SQuadrature,
) -> Result<ComplexField> {
    for v in [v1, v2, v3] {
        v.expect_side(Side::Space)?;
    }
    v1.check_same_grid(v2)?;
    v1.check_same_grid(v3)?;
    let grid = v1.grid();
    let hats = [
        grid.forward_values(v1.values()),
        grid.forward_values(v2.values()),
        grid.forward_values(v3.values()),
    ];
    let acc = nonlinearity_hat(grid, &hats, q, |u| u[0] * u[1].conj() * u[2]);
    ComplexField::new(grid, Side::Space, grid.inverse_values(&acc))
}

/// `Q(f,f,f)`, with one propagation per node instead of three.
pub fn eval_nonlinearity_cubic(f: &ComplexField, q: &SQuadrature) -> Result<ComplexField> {
    f.expect_side(Side::Space)?;
    let grid = f.grid();
    let hat = [grid.forward_values(f.values())];
    let acc = nonlinearity_hat(grid, &hat, q, |u| u[0] * u[0].norm_sqr());
    ComplexField::new(grid, Side::Space, grid.inverse_values(&acc))
}

// Σ_k w_k exp(+i s_k ξ²) · F[ product(T_{s_k} v_j) ], accumulated on the frequency side.
fn nonlinearity_hat<const K: usize>(
    grid: &Grid,
    hats: &[Vec<Complex64>; K],
    q: &SQuadrature,
    product: impl Fn([Complex64; K]) -> Complex64,
) -> Vec<Complex64> {
    let n = grid.n();
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    for (s, w) in q.iter() {
        let symbol = grid.propagator_symbol(s);
        let evolved: [Vec<Complex64>; K] = core::array::from_fn(|j| {
            for ((dst, h), m) in scratch.iter_mut().zip(&hats[j]).zip(&symbol) {
                *dst = h * m;
            }
            grid.inverse_values(&scratch)
        });
        let prod: Vec<Complex64> = (0..n)
            .map(|i| product(core::array::from_fn(|j| evolved[j][i])))
            .collect();
        let prod_hat = grid.forward_values(&prod);
        for ((a, p), m) in acc.iter_mut().zip(&prod_hat).zip(&symbol) {
            *a += p * m.conj() * w;
        }
    }
    acc
}

/// `𝒬(f₁,f₂,f₃,f₄) = ∫₀¹ ∫ conj(T_s f₁) T_s f₂ conj(T_s f₃) T_s f₄ dx ds`.
pub fn eval_q4_direct(
    f1: &ComplexField,
    f2: &ComplexField,
    f3: &ComplexField,
    f4: &ComplexField,
    q: &SQuadrature,
) -> Result<Complex64> {
    for f in [f1, f2, f3, f4] {
        f.expect_side(Side::Space)?;
        f1.check_same_grid(f)?;
    }
    let grid = f1.grid();
    let hats: [Vec<Complex64>; 4] = [f1, f2, f3, f4].map(|f| grid.forward_values(f.values()));
    let n = grid.n();
    let mut scratch = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    for (s, w) in q.iter() {
        let symbol = grid.propagator_symbol(s);
        let u: [Vec<Complex64>; 4] = core::array::from_fn(|j| {
            for ((dst, h), m) in scratch.iter_mut().zip(&hats[j]).zip(&symbol) {
                *dst = h * m;
            }
            grid.inverse_values(&scratch)
        });
        let slice: Complex64 = (0..n)
            .map(|i| u[0][i].conj() * u[1][i] * u[2][i].conj() * u[3][i])
            .sum();
        total += slice * w;
    }
    Ok(total * grid.dx())
}

/// `𝒬(f,f,f,f) = ∫₀¹∫ |T_s f|⁴`, real and non-negative.
pub fn strichartz_value(f: &ComplexField, q: &SQuadrature) -> Result<f64> {
    Ok(eval_q4_direct(f, f, f, f, q)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, make_grid};
    use core::f64::consts::PI;

    fn gaussian(grid: &Grid) -> ComplexField {
        ComplexField::from_space_fn(grid, |x| Complex64::new(libm::exp(-x * x / 2.0), 0.0))
    }

    fn packet(grid: &Grid, c: f64, k: f64, phase: f64) -> ComplexField {
        ComplexField::from_space_fn(grid, |x| {
            let (s, co) = libm::sincos(k * x + phase);
            Complex64::new(co, s) * libm::exp(-(x - c) * (x - c) / 2.0)
        })
    }

    #[test]
    fn zero_slot_gives_zero() {
        let g = make_grid(64, 16.0).unwrap();
        let q = SQuadrature::gauss_legendre(8).unwrap();
        let f = gaussian(&g);
        let z = ComplexField::zeros(&g, Side::Space);
        let out = eval_nonlinearity(&z, &f, &f, &q).unwrap();
        assert_eq!(out.max_abs(), 0.0);
    }

    #[test]
    fn slot_linearity() {
        let g = make_grid(128, 32.0).unwrap();
        let q = SQuadrature::gauss_legendre(16).unwrap();
        let f = packet(&g, 0.3, 0.5, 0.1);
        let c = Complex64::new(0.7, -1.3);
        let base = eval_nonlinearity(&f, &f, &f, &q).unwrap();
        let cf = f.scaled(c);
        let s1 = eval_nonlinearity(&cf, &f, &f, &q).unwrap();
        let s2 = eval_nonlinearity(&f, &cf, &f, &q).unwrap();
        assert!(s1.max_diff(&base.scaled(c)).unwrap() < 1e-12);
        assert!(s2.max_diff(&base.scaled(c.conj())).unwrap() < 1e-12);
        let cubic = eval_nonlinearity_cubic(&f, &q).unwrap();
        assert!(cubic.max_diff(&base).unwrap() < 1e-13);
    }

    #[test]
    fn q4_slot_conjugation_pattern() {
        let g = make_grid(128, 32.0).unwrap();
        let q = SQuadrature::gauss_legendre(16).unwrap();
        let fs = [
            packet(&g, 0.0, 0.2, 0.0),
            packet(&g, 0.5, -0.3, 1.0),
            packet(&g, -0.4, 0.1, 2.0),
            packet(&g, 0.2, 0.4, 3.0),
        ];
        let base = eval_q4_direct(&fs[0], &fs[1], &fs[2], &fs[3], &q).unwrap();
        let c = Complex64::new(-0.4, 0.9);
        for slot in 0..4 {
            let mut scaled = fs.clone();
            scaled[slot] = fs[slot].scaled(c);
            let v = eval_q4_direct(&scaled[0], &scaled[1], &scaled[2], &scaled[3], &q).unwrap();
            let expected = if slot % 2 == 0 { base * c.conj() } else { base * c };
            assert!((v - expected).norm() < 1e-13 * base.norm().max(1.0), "slot {slot}");
        }
    }

    #[test]
    fn gaussian_closed_form() {
        // |T_t e^{-x²/2}|⁴ integrates to √(π/2)(1+4t²)^{-1/2}; ∫₀¹ gives asinh(2)/2.
        let g = make_grid(1024, 64.0).unwrap();
        let q = SQuadrature::gauss_legendre(32).unwrap();
        let v = strichartz_value(&gaussian(&g), &q).unwrap();
        let exact = libm::sqrt(PI / 2.0) * libm::asinh(2.0) / 2.0;
        assert!((v - exact).abs() < 1e-10 * exact, "{v} vs {exact}");
        assert!((exact - 0.9047).abs() < 1e-4);
    }

    #[test]
    fn homogeneity_of_strichartz_value() {
        let g = make_grid(128, 32.0).unwrap();
        let q = SQuadrature::gauss_legendre(16).unwrap();
        let f = packet(&g, 0.1, 0.3, 0.0);
        let c = Complex64::new(1.5, -0.5);
        let a = strichartz_value(&f, &q).unwrap();
        let b = strichartz_value(&f.scaled(c), &q).unwrap();
        assert!((b - c.norm_sqr() * c.norm_sqr() * a).abs() < 1e-12 * b);
    }

    #[test]
    fn duality_with_same_rule() {
        let g = make_grid(128, 32.0).unwrap();
        let q = SQuadrature::gauss_legendre(12).unwrap();
        let f = packet(&g, 0.2, 0.7, 0.4);
        let h = packet(&g, -0.6, -0.2, 1.1);
        let lhs = inner(&h, &eval_nonlinearity(&f, &f, &f, &q).unwrap()).unwrap();
        let rhs = eval_q4_direct(&h, &f, &f, &f, &q).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }
}
