//! Mass-constrained maximizers of `𝒬`: solutions of
//! `ω f = d_av f″ + Q(f,f,f)` with `‖f‖² = λ`.
//!
//! The iteration is a normalized fixed point: `g = Q(f,f,f)` (or
//! `ĝ = Q̂ / (ω + d_av ξ²)` when `d_av > 0`), then
//! `f ← (1−θ) f + θ √λ g/‖g‖`, renormalized.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{
    gradient_norm_sqr, inner, random_smooth_field, second_derivative, translate, ComplexField, Grid, Side,
};
use crate::qfunc::{eval_nonlinearity_cubic, strichartz_value};
use crate::quadrature::{SQuadrature, DEFAULT_NODES};

/// Starting profile before scaling to mass `λ`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum InitialProfile {
    /// `exp(−x²/(2w²))`.
    Gaussian { width: f64 },
    /// Unit Gaussian plus a seeded smooth random perturbation of relative
    /// size `amplitude`.
    Perturbed { seed: u64, amplitude: f64 },
    /// Explicit space samples.
    Samples(Vec<Complex64>),
}

impl Default for InitialProfile {
    fn default() -> Self {
        Self::Gaussian { width: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SolverOptions {
    pub lambda: f64,
    pub d_av: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub s_nodes: usize,
    pub init: InitialProfile,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            d_av: 0.0,
            tol: 1e-8,
            max_iter: 500,
            damping: 1.0,
            s_nodes: DEFAULT_NODES,
            init: InitialProfile::default(),
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be positive"));
        }
        if !(self.d_av >= 0.0 && self.d_av.is_finite()) {
            return Err(Error::InvalidParameter("d_av must be non-negative"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter("damping must lie in (0, 1]"));
        }
        if self.max_iter == 0 || self.s_nodes == 0 {
            return Err(Error::InvalidParameter("max_iter and s_nodes must be positive"));
        }
        match &self.init {
            InitialProfile::Gaussian { width } if !(*width > 0.0) => {
                Err(Error::InvalidParameter("initial width must be positive"))
            }
            InitialProfile::Perturbed { amplitude, .. } if !(*amplitude >= 0.0) => {
                Err(Error::InvalidParameter("perturbation amplitude must be non-negative"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceEntry {
    pub iteration: usize,
    /// `𝒬(f_n,f_n,f_n,f_n)` from the pairing `⟨f_n, Q(f_n)⟩`.
    pub q_value: f64,
    pub residual: f64,
    pub damping: f64,
}

#[derive(Debug, Clone)]
pub struct SolitonResult {
    pub profile: ComplexField,
    pub omega: f64,
    pub residual: f64,
    pub iterations: usize,
    pub q_value: f64,
    pub p_ratio: f64,
    pub lambda: f64,
    pub d_av: f64,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

/// `‖ω f − d_av f″ − Q(f,f,f)‖ / ‖f‖` with the default rule.
pub fn residual(f: &ComplexField, omega: f64, d_av: f64) -> Result<f64> {
    residual_with(f, omega, d_av, &SQuadrature::default())
}

pub fn residual_with(f: &ComplexField, omega: f64, d_av: f64, q: &SQuadrature) -> Result<f64> {
    f.expect_side(Side::Space)?;
    let norm = f.norm();
    if norm == 0.0 {
        return Err(Error::ZeroField);
    }
    let qf = eval_nonlinearity_cubic(f, q)?;
    residual_from(f, &qf, omega, d_av, norm)
}

fn residual_from(f: &ComplexField, qf: &ComplexField, omega: f64, d_av: f64, norm: f64) -> Result<f64> {
    let mut r = f.combine(Complex64::new(omega, 0.0), qf, Complex64::new(-1.0, 0.0))?;
    if d_av != 0.0 {
        r = r.combine(
            Complex64::new(1.0, 0.0),
            &second_derivative(f)?,
            Complex64::new(-d_av, 0.0),
        )?;
    }
    Ok(r.norm() / norm)
}

fn initial_profile(grid: &Grid, init: &InitialProfile, lambda: f64) -> Result<ComplexField> {
    let f = match init {
        InitialProfile::Gaussian { width } => {
            ComplexField::from_space_fn(grid, |x| Complex64::new(libm::exp(-0.5 * x * x / (width * width)), 0.0))
        }
        InitialProfile::Perturbed { seed, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let base = ComplexField::from_space_fn(grid, |x| Complex64::new(libm::exp(-0.5 * x * x), 0.0));
            let noise = random_smooth_field(grid, 2.0, &mut rng);
            let windowed: Vec<Complex64> = noise
                .values()
                .iter()
                .zip(grid.x_nodes())
                .map(|(v, x)| v * libm::exp(-0.125 * x * x))
                .collect();
            let windowed = ComplexField::new(grid, Side::Space, windowed)?;
            let scale = amplitude * base.norm() / windowed.norm();
            base.combine(Complex64::new(1.0, 0.0), &windowed, Complex64::new(scale, 0.0))?
        }
        InitialProfile::Samples(v) => ComplexField::new(grid, Side::Space, v.clone())?,
    };
    normalized(&f, lambda)
}

fn normalized(f: &ComplexField, lambda: f64) -> Result<ComplexField> {
    let norm = f.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::Collapse);
    }
    Ok(f.scaled(Complex64::new(libm::sqrt(lambda) / norm, 0.0)))
}

// ĝ = Q̂ / (ω + d ξ²)
fn resolvent(qf: &ComplexField, omega: f64, d_av: f64) -> ComplexField {
    let grid = qf.grid();
    let mut hat = grid.forward_values(qf.values());
    for (m, v) in hat.iter_mut().enumerate() {
        let xi = grid.xi(m);
        *v /= omega + d_av * xi * xi;
    }
    ComplexField::new(grid, Side::Space, grid.inverse_values(&hat)).expect("grid-sized")
}

/// Runs the fixed-point iteration. A run that exhausts `max_iter` returns
/// `Ok` with `converged == false`; a collapse to zero is an error.
pub fn solve(grid: &Grid, opts: &SolverOptions) -> Result<SolitonResult> {
    opts.validate()?;
    let q = SQuadrature::gauss_legendre(opts.s_nodes)?;
    let lambda = opts.lambda;
    let d_av = opts.d_av;
    let mut f = initial_profile(grid, &opts.init, lambda)?;
    let mut theta = opts.damping;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut rising = 0usize;
    for n in 0..opts.max_iter {
        iterations = n;
        let qf = eval_nonlinearity_cubic(&f, &q)?;
        let q_value = inner(&f, &qf)?.re;
        let kinetic = if d_av > 0.0 { d_av * gradient_norm_sqr(&f)? } else { 0.0 };
        let omega = (q_value - kinetic) / lambda;
        let res = residual_from(&f, &qf, omega, d_av, libm::sqrt(lambda))?;
        trace.push(TraceEntry {
            iteration: n,
            q_value,
            residual: res,
            damping: theta,
        });
        if res <= opts.tol {
            converged = true;
            break;
        }
        if let Some(prev) = trace.len().checked_sub(2).map(|i| trace[i].residual) {
            rising = if res > prev { rising + 1 } else { 0 };
            if rising >= 3 && theta > 0.5 {
                theta = 0.5;
                rising = 0;
            }
        }
        let g = if d_av > 0.0 {
            if !(omega > 0.0) {
                return Err(Error::InvalidParameter(
                    "non-positive omega; increase lambda or the initial width",
                ));
            }
            resolvent(&qf, omega, d_av)
        } else {
            qf
        };
        let g = normalized(&g, lambda)?;
        f = if theta < 1.0 {
            normalized(
                &f.combine(Complex64::new(1.0 - theta, 0.0), &g, Complex64::new(theta, 0.0))?,
                lambda,
            )?
        } else {
            g
        };
        iterations = n + 1;
    }
    let profile = gauge(&f)?;
    let q_value = strichartz_value(&profile, &q)?;
    let kinetic = if d_av > 0.0 {
        d_av * gradient_norm_sqr(&profile)?
    } else {
        0.0
    };
    let omega = (q_value - kinetic) / lambda;
    let res = residual_with(&profile, omega, d_av, &q)?;
    Ok(SolitonResult {
        profile,
        omega,
        residual: res,
        iterations,
        q_value,
        p_ratio: q_value / (lambda * lambda),
        lambda,
        d_av,
        converged: converged && res <= opts.tol,
        trace,
    })
}

/// `P̂₁ = 𝒬(f,f,f,f)/λ²` of a converged run.
pub fn estimate_p1(result: &SolitonResult) -> Result<f64> {
    if !result.converged {
        return Err(Error::NoConvergence {
            iterations: result.iterations,
            residual: result.residual,
        });
    }
    Ok(result.q_value / (result.lambda * result.lambda))
}

/// Fixes the symmetries of the problem: zero mean momentum, centre of mass
/// at the origin, and a real positive value at `x = 0`.
pub fn gauge(f: &ComplexField) -> Result<ComplexField> {
    f.expect_side(Side::Space)?;
    let grid = f.grid();
    let mass = f.norm_sqr();
    if mass == 0.0 {
        return Err(Error::ZeroField);
    }
    let hat = grid.forward_values(f.values());
    let momentum = grid.dxi()
        * hat
            .iter()
            .enumerate()
            .map(|(m, v)| grid.xi(m) * v.norm_sqr())
            .sum::<f64>()
        / mass;
    let mut g = f.clone();
    for (v, x) in g.values_mut().iter_mut().zip(grid.x_nodes()) {
        let (s, c) = libm::sincos(-momentum * x);
        *v *= Complex64::new(c, s);
    }
    let centre = grid.dx()
        * g.values()
            .iter()
            .zip(grid.x_nodes())
            .map(|(v, x)| x * v.norm_sqr())
            .sum::<f64>()
        / mass;
    let g = translate(&g, -centre)?;
    let v0 = g.values()[grid.center()];
    if v0.norm() == 0.0 {
        return Ok(g);
    }
    Ok(g.scaled(v0.conj() / v0.norm()))
}
