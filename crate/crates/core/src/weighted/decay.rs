//! Exponential tail fits and the oscillating-envelope diagnostic.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::{linear_fit, poly_fit};
use crate::grid::{ComplexField, Side};

/// Which tail samples enter the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TailSamples {
    #[default]
    All,
    /// Only samples at least as large as every sample further out, which
    /// drops the dips of an oscillating tail and keeps a monotone one whole.
    OuterMaximum,
}

/// Straight-line fit of `ln|f|` against `|t|` on the two tails.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecayFit {
    pub side: Side,
    pub samples: TailSamples,
    /// Minus the fitted slope.
    pub mu_hat: f64,
    pub intercept: f64,
    pub r2: f64,
    /// `[min |t|, max |t|]` over the fitted samples.
    pub window: [f64; 2],
    /// Absolute amplitude cutoff.
    pub floor: f64,
    pub points: usize,
    /// Coefficient of `|t|²` in a quadratic fit over the same samples; near
    /// zero for a true exponential.
    pub curvature: f64,
}

const MIN_POINTS: usize = 8;

/// Fits the tails of `|f|` in the variable of the field's side.
///
/// Going outwards from the origin, each half-line is cut at the first
/// sample with `|f| ≤ floor_rel·max|f|`; the fit uses the outermost
/// `tail_fraction` of the surviving samples at each end (so `0.5` uses all
/// of them), pooled over both ends.
pub fn fit_decay(f: &ComplexField, tail_fraction: f64, floor_rel: f64) -> Result<DecayFit> {
    fit_decay_with(f, tail_fraction, floor_rel, TailSamples::All)
}

/// [`fit_decay`] with a choice of samples inside the tail windows.
pub fn fit_decay_with(f: &ComplexField, tail_fraction: f64, floor_rel: f64, samples: TailSamples) -> Result<DecayFit> {
    if !(tail_fraction > 0.0 && tail_fraction <= 0.5) {
        return Err(Error::InvalidParameter("tail_fraction must lie in (0, 0.5]"));
    }
    if !(floor_rel > 0.0 && floor_rel < 1.0) {
        return Err(Error::InvalidParameter("floor must lie in (0, 1) relative to the peak"));
    }
    let amp: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    let nodes = f.nodes();
    let peak = amp.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::ZeroField);
    }
    let floor = floor_rel * peak;
    let c = f.grid().center();
    let n = amp.len();
    let right: Vec<usize> = (c + 1..n).take_while(|&j| amp[j] > floor).collect();
    let left: Vec<usize> = (0..c).rev().take_while(|&j| amp[j] > floor).collect();
    let total = right.len() + left.len();
    let per_end = |side: &[usize]| -> usize {
        let want = libm::ceil(tail_fraction * total as f64) as usize;
        want.min(side.len())
    };
    let mut ts = Vec::new();
    let mut ys = Vec::new();
    for side in [&right, &left] {
        let k = per_end(side);
        let mut outer: f64 = 0.0;
        for &j in side[side.len() - k..].iter().rev() {
            if samples == TailSamples::OuterMaximum && amp[j] < outer {
                continue;
            }
            outer = outer.max(amp[j]);
            ts.push(nodes[j].abs());
            ys.push(libm::log(amp[j]));
        }
    }
    if ts.len() < MIN_POINTS {
        return Err(Error::TooFewPoints(ts.len(), MIN_POINTS));
    }
    let fit = linear_fit(&ts, &ys)?;
    let curvature = poly_fit(&ts, &ys, 2).map(|c| c[2]).unwrap_or(0.0);
    let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ts.iter().copied().fold(0.0, f64::max);
    Ok(DecayFit {
        side: f.side(),
        samples,
        mu_hat: -fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        window: [lo, hi],
        floor,
        points: ts.len(),
        curvature,
    })
}

/// Parameters of `f(x) ≈ |x| cos(a₀x² + a₁x + a₂) e^{−b|x|}` read off the
/// right tail of `Re f`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EnvelopeReport {
    /// False when fewer than five zero crossings were found.
    pub resolved: bool,
    pub crossings: usize,
    pub a0: Option<f64>,
    pub a1: Option<f64>,
    pub b: Option<f64>,
    /// Fit quality of the crossing-phase model.
    pub phase_r2: Option<f64>,
    pub envelope_r2: Option<f64>,
}

const MIN_CROSSINGS: usize = 5;

/// Zero crossings `z_k` of `Re f` on `x > 0` (above the noise floor) are
/// fitted to `a₀z² + a₁z + c = kπ`; the decay `b` comes from
/// `ln(peak/|x|)` over the lobe maxima between crossings.
pub fn envelope_diagnostic(f: &ComplexField) -> Result<EnvelopeReport> {
    f.expect_side(Side::Space)?;
    let grid = f.grid();
    let peak = f.max_abs();
    if peak == 0.0 {
        return Err(Error::ZeroField);
    }
    let floor = 1e-12 * peak;
    let x = grid.x_nodes();
    let re: Vec<f64> = f.values().iter().map(|v| v.re).collect();
    let c = grid.center();
    let end = (c + 1..grid.n())
        .take_while(|&j| f.values()[j].norm() > floor)
        .last()
        .unwrap_or(c);
    let mut zeros = Vec::new();
    for j in c..end {
        let (a, b) = (re[j], re[j + 1]);
        if a == 0.0 || a * b < 0.0 {
            zeros.push(x[j] + (x[j + 1] - x[j]) * a / (a - b));
        }
    }
    let not_resolved = EnvelopeReport {
        resolved: false,
        crossings: zeros.len(),
        a0: None,
        a1: None,
        b: None,
        phase_r2: None,
        envelope_r2: None,
    };
    if zeros.len() < MIN_CROSSINGS {
        return Ok(not_resolved);
    }
    let phase: Vec<f64> = (0..zeros.len()).map(|k| k as f64 * core::f64::consts::PI).collect();
    let coeffs = poly_fit(&zeros, &phase, 2)?;
    let mean = phase.iter().sum::<f64>() / phase.len() as f64;
    let (mut sse, mut sst) = (0.0, 0.0);
    for (z, p) in zeros.iter().zip(&phase) {
        let e = p - (coeffs[0] + coeffs[1] * z + coeffs[2] * z * z);
        sse += e * e;
        sst += (p - mean) * (p - mean);
    }
    // lobe maxima between consecutive crossings
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for w in zeros.windows(2) {
        let best = (c..=end)
            .filter(|&j| x[j] > w[0] && x[j] < w[1])
            .max_by(|&i, &j| re[i].abs().total_cmp(&re[j].abs()));
        if let Some(j) = best {
            if x[j] > 0.0 {
                lx.push(x[j]);
                ly.push(libm::log(re[j].abs() / x[j]));
            }
        }
    }
    let envelope = if lx.len() >= 2 {
        Some(linear_fit(&lx, &ly)?)
    } else {
        None
    };
    Ok(EnvelopeReport {
        resolved: true,
        crossings: zeros.len(),
        a0: Some(coeffs[2]),
        a1: Some(coeffs[1]),
        b: envelope.map(|e| -e.slope),
        phase_r2: Some(if sst > 0.0 {
            (1.0 - sse / sst).clamp(0.0, 1.0)
        } else {
            1.0
        }),
        envelope_r2: envelope.map(|e| e.r2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use num_complex::Complex64;

    #[test]
    fn exact_exponential() {
        let g = make_grid(1024, 64.0).unwrap();
        let f = ComplexField::from_space_fn(&g, |x| Complex64::new(libm::exp(-x.abs()), 0.0));
        let fit = fit_decay(&f, 0.25, 1e-13).unwrap();
        assert!((fit.mu_hat - 1.0).abs() < 1e-10);
        assert!(fit.r2 >= 0.9999);
        let scaled = fit_decay(&f.scaled(Complex64::new(0.0, 37.0)), 0.25, 1e-13).unwrap();
        assert!((scaled.mu_hat - fit.mu_hat).abs() < 1e-12);
        assert_eq!(scaled.points, fit.points);
    }

    #[test]
    fn gaussian_shows_curvature() {
        let g = make_grid(1024, 64.0).unwrap();
        let f = ComplexField::from_space_fn(&g, |x| Complex64::new(libm::exp(-x * x / 2.0), 0.0));
        let narrow = fit_decay(&f, 0.1, 1e-13).unwrap();
        let wide = fit_decay(&f, 0.5, 1e-13).unwrap();
        assert!(wide.r2 < narrow.r2);
        assert!((wide.curvature + 0.5).abs() < 1e-6, "{}", wide.curvature);
    }

    #[test]
    fn outer_maximum_skips_dips() {
        let g = make_grid(1024, 64.0).unwrap();
        let mono = ComplexField::from_space_fn(&g, |x| Complex64::new(libm::exp(-x.abs()), 0.0));
        let a = fit_decay(&mono, 0.25, 1e-13).unwrap();
        let b = fit_decay_with(&mono, 0.25, 1e-13, TailSamples::OuterMaximum).unwrap();
        assert_eq!(a.points, b.points);
        assert!((a.mu_hat - b.mu_hat).abs() < 1e-12);
        let wavy = ComplexField::from_space_fn(&g, |x| {
            Complex64::new(libm::exp(-x.abs()) * (1.5 + libm::cos(3.0 * x)), 0.0)
        });
        let all = fit_decay(&wavy, 0.25, 1e-13).unwrap();
        let env = fit_decay_with(&wavy, 0.25, 1e-13, TailSamples::OuterMaximum).unwrap();
        assert!(env.points < all.points);
        assert!(env.r2 > all.r2, "{} {}", env.r2, all.r2);
        assert!((env.mu_hat - 1.0).abs() < 0.02, "{}", env.mu_hat);
    }

    #[test]
    fn rejects_bad_parameters_and_sparse_tails() {
        let g = make_grid(64, 16.0).unwrap();
        let f = ComplexField::from_space_fn(&g, |x| Complex64::new(libm::exp(-8.0 * x * x), 0.0));
        assert!(fit_decay(&f, 0.0, 1e-13).is_err());
        assert!(fit_decay(&f, 0.6, 1e-13).is_err());
        assert!(matches!(fit_decay(&f, 0.25, 1e-3), Err(Error::TooFewPoints(_, 8))));
    }

    #[test]
    fn envelope_recovers_synthetic_parameters() {
        let g = make_grid(2048, 64.0).unwrap();
        let f = ComplexField::from_space_fn(&g, |x| {
            Complex64::new(x.abs() * libm::cos(0.3 * x * x) * libm::exp(-0.5 * x.abs()), 0.0)
        });
        let r = envelope_diagnostic(&f).unwrap();
        assert!(r.resolved);
        assert!((r.a0.unwrap() - 0.3).abs() < 0.03, "{r:?}");
        assert!((r.b.unwrap() - 0.5).abs() < 0.05, "{r:?}");
    }

    #[test]
    fn pure_exponential_is_not_resolved() {
        let g = make_grid(512, 32.0).unwrap();
        let f = ComplexField::from_space_fn(&g, |x| Complex64::new(libm::exp(-x.abs()), 0.0));
        let r = envelope_diagnostic(&f).unwrap();
        assert!(!r.resolved);
        assert!(r.a0.is_none());
    }
}
