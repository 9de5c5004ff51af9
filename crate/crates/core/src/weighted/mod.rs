//! Exponential weights `F_{μ,ε}(x) = μ|x|/(1+ε|x|)`, weighted norms, the
//! twisted functionals and the decay diagnostics.

mod decay;
mod probe;

pub use decay::{envelope_diagnostic, fit_decay, fit_decay_with, DecayFit, EnvelopeReport, TailSamples};
pub use probe::{
    boundedness_point, boundedness_probe, bump, probe_quadruple, separation_point, separation_probe, BoundednessPoint,
    ProbeKind, ProbeReport, ProbeRow, SlotPattern, PROBE_BANDWIDTH, PROBE_ENVELOPE,
};

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Side};
use crate::qfunc::{eval_q4_direct, eval_q4_fourier, KernelLattice, LatticeWindow};
use crate::quadrature::SQuadrature;

/// Largest exponent accepted for `e^{F}`.
pub const MAX_EXPONENT: f64 = 700.0;

/// `F_{μ,ε}(x)`.
pub fn weight_value(x: f64, mu: f64, eps: f64) -> Result<f64> {
    if !(mu >= 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidParameter("mu and eps must be non-negative"));
    }
    Ok(weight_unchecked(x, mu, eps))
}

fn weight_unchecked(x: f64, mu: f64, eps: f64) -> f64 {
    let a = x.abs();
    mu * a / (1.0 + eps * a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightSpec {
    pub mu: f64,
    pub eps: f64,
    /// Variable the weight multiplies: `x` on the space side, `ξ` on the
    /// frequency side.
    pub side: Side,
}

impl WeightSpec {
    pub fn new(mu: f64, eps: f64, side: Side) -> Result<Self> {
        weight_value(0.0, mu, eps)?;
        Ok(Self { mu, eps, side })
    }

    pub fn at(&self, t: f64) -> f64 {
        weight_unchecked(t, self.mu, self.eps)
    }

    /// `sup F = μ/ε`, or `None` when `ε = 0`.
    pub fn bound(&self) -> Option<f64> {
        (self.eps > 0.0).then(|| self.mu / self.eps)
    }
}

/// `‖e^{F} f‖`, with the weight taken in the field's own variable.
pub fn weighted_norm(f: &ComplexField, w: &WeightSpec) -> Result<f64> {
    f.expect_side(w.side)?;
    let h = f.grid().weight(f.side());
    let mut total = 0.0;
    for (v, t) in f.values().iter().zip(f.nodes()) {
        let e = w.at(t);
        if e > MAX_EXPONENT && v.norm() > 0.0 {
            return Err(Error::WeightOverflow);
        }
        total += v.norm_sqr() * libm::exp(2.0 * e);
    }
    Ok(libm::sqrt(h * total))
}

/// How a twisted value is computed once the weights are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Route {
    /// Direct when `μ = 0` or the first-slot amplification stays below
    /// `max_amplification`, lattice otherwise.
    #[default]
    Auto,
    /// Space-time quadrature of the weighted fields.
    Direct,
    /// Kernel lattice (space side) or frequency lattice (frequency side).
    Lattice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistedOptions {
    pub quadrature: SQuadrature,
    pub route: Route,
    /// Offset window of the kernel lattice; defaults to `n` offsets.
    pub kernel_window: Option<LatticeWindow>,
    /// Frequency window of the Fourier lattice; defaults to the inner half.
    pub fourier_window: Option<LatticeWindow>,
    /// `max e^{F}` over the support of the first slot above which `Auto`
    /// leaves the direct route. Round-off of the direct route grows like
    /// `1e-16` times this factor.
    pub max_amplification: f64,
}

impl Default for TwistedOptions {
    fn default() -> Self {
        Self {
            quadrature: SQuadrature::default(),
            route: Route::Auto,
            kernel_window: None,
            fourier_window: None,
            max_amplification: 1e3,
        }
    }
}

const KERNEL_DELTA: f64 = 0.05;

/// `𝒬(e^{F}h₁, e^{−F}h₂, e^{−F}h₃, e^{−F}h₄)` with the weights applied in the
/// variable of `w.side`. Inputs are space-side fields.
///
/// With `ε = 0` the first slot must vanish at the ends of its lattice, and
/// `F` may not exceed [`MAX_EXPONENT`] on its support.
pub fn twisted_q(
    h1: &ComplexField,
    h2: &ComplexField,
    h3: &ComplexField,
    h4: &ComplexField,
    w: &WeightSpec,
    opts: &TwistedOptions,
) -> Result<Complex64> {
    for h in [h1, h2, h3, h4] {
        h.expect_side(Side::Space)?;
        h1.check_same_grid(h)?;
    }
    if w.mu == 0.0 {
        return eval_q4_direct(h1, h2, h3, h4, &opts.quadrature);
    }
    let grid = h1.grid();
    let n = grid.n();
    let mut vals: [Vec<Complex64>; 4] = match w.side {
        Side::Space => [h1, h2, h3, h4].map(|h| h.values().to_vec()),
        Side::Frequency => [h1, h2, h3, h4].map(|h| grid.forward_values(h.values())),
    };
    let exps: Vec<f64> = match w.side {
        Side::Space => grid.x_nodes(),
        Side::Frequency => grid.xi_nodes(),
    }
    .into_iter()
    .map(|t| w.at(t))
    .collect();
    let zero = Complex64::new(0.0, 0.0);
    if w.eps == 0.0 && (vals[0][0] != zero || vals[0][n - 1] != zero) {
        return Err(Error::NotCompactlySupported);
    }
    let peak = vals[0]
        .iter()
        .zip(&exps)
        .filter(|(v, _)| **v != zero)
        .map(|(_, e)| *e)
        .fold(0.0, f64::max);
    if peak > MAX_EXPONENT {
        return Err(Error::WeightOverflow);
    }
    for (j, e) in exps.iter().enumerate() {
        vals[0][j] *= libm::exp(*e);
        let damp = libm::exp(-*e);
        for v in vals.iter_mut().skip(1) {
            v[j] *= damp;
        }
    }
    let route = match opts.route {
        Route::Auto if libm::exp(peak) <= opts.max_amplification => Route::Direct,
        Route::Auto => Route::Lattice,
        r => r,
    };
    match (route, w.side) {
        (Route::Direct, side) => {
            let fields = vals
                .into_iter()
                .map(|v| {
                    let v = if side == Side::Frequency {
                        grid.inverse_values(&v)
                    } else {
                        v
                    };
                    ComplexField::new(grid, Side::Space, v)
                })
                .collect::<Result<Vec<_>>>()?;
            eval_q4_direct(&fields[0], &fields[1], &fields[2], &fields[3], &opts.quadrature)
        }
        (_, side) => {
            let fields = vals
                .into_iter()
                .map(|v| ComplexField::new(grid, side, v))
                .collect::<Result<Vec<_>>>()?;
            if side == Side::Space {
                let window = opts.kernel_window.unwrap_or(LatticeWindow::centered(n));
                let lattice = KernelLattice::new(&fields[0], &fields[1], &fields[2], &fields[3], window)?;
                Ok(lattice.evaluate(KERNEL_DELTA)?.total())
            } else {
                let window = opts.fourier_window.unwrap_or(LatticeWindow::centered(n / 2));
                Ok(eval_q4_fourier(&fields[0], &fields[1], &fields[2], &fields[3], None, window)?.value)
            }
        }
    }
}
