//! Numerical probes of the twisted functionals: boundedness over `(μ, ε)`
//! and decay in the separation of two supports.

use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{twisted_q, TwistedOptions, WeightSpec};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::grid::{random_smooth_field, ComplexField, Grid, Side};

/// Low-pass width of the random probe fields.
pub const PROBE_BANDWIDTH: f64 = 1.5;
/// Gaussian envelope width of the random probe fields.
pub const PROBE_ENVELOPE: f64 = 2.0;

/// Which two slots carry the separated bumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlotPattern {
    pub l: usize,
    pub k: usize,
}

impl SlotPattern {
    pub const ONE_TWO: Self = Self { l: 1, k: 2 };
    pub const ONE_THREE: Self = Self { l: 1, k: 3 };

    /// The two slots placed at distance `τ`: `k` and its partner.
    pub fn away(&self) -> [usize; 2] {
        let partner = if self.l % 2 == self.k % 2 {
            (1..=4).rev().find(|j| j % 2 != self.k % 2).unwrap_or(4)
        } else {
            (1..=4)
                .find(|j| *j != self.l && *j != self.k && j % 2 == self.l % 2)
                .unwrap_or(4)
        };
        [self.k, partner]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum ProbeKind {
    Boundedness { samples: usize },
    Separation { slots: SlotPattern, bump_width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbeRow {
    pub mu: f64,
    pub eps: f64,
    pub tau: Option<f64>,
    /// `|𝒬_{μ,ε}| / Π‖h_j‖`, maximised over samples for boundedness rows.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbeReport {
    pub kind: ProbeKind,
    pub side: Side,
    pub seed: Option<u64>,
    pub mu: Vec<f64>,
    pub eps: Vec<f64>,
    pub tau: Vec<f64>,
    pub rows: Vec<ProbeRow>,
    /// Largest ratio at `μ = 0`.
    pub baseline: Option<f64>,
    pub max_ratio: f64,
    /// Log-log slope of ratio against `τ` (separation probes).
    pub slope: Option<f64>,
    pub slope_r2: Option<f64>,
}

/// Quadruple `index` of the seeded family: smoothed complex noise under a
/// Gaussian envelope, each field of unit norm.
pub fn probe_quadruple(grid: &Grid, seed: u64, index: u64) -> [ComplexField; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    core::array::from_fn(|_| {
        let noise = random_smooth_field(grid, PROBE_BANDWIDTH, &mut rng);
        let f = noise.map_indexed(|x, v| v * libm::exp(-0.5 * x * x / (PROBE_ENVELOPE * PROBE_ENVELOPE)));
        let norm = f.norm();
        f.scaled(Complex64::new(1.0 / norm, 0.0))
    })
}

fn ratio(h: &[ComplexField; 4], w: &WeightSpec, opts: &TwistedOptions) -> Result<f64> {
    let norms: f64 = h.iter().map(|f| f.norm()).product();
    if norms == 0.0 {
        return Ok(0.0);
    }
    Ok(twisted_q(&h[0], &h[1], &h[2], &h[3], w, opts)?.norm() / norms)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundednessPoint {
    pub mu: f64,
    pub eps: f64,
    pub max_ratio: f64,
}

/// Largest ratio over the sample quadruples at one `(μ, ε)`.
pub fn boundedness_point(
    samples: &[[ComplexField; 4]],
    w: &WeightSpec,
    opts: &TwistedOptions,
) -> Result<BoundednessPoint> {
    let mut worst: f64 = 0.0;
    for h in samples {
        worst = worst.max(ratio(h, w, opts)?);
    }
    Ok(BoundednessPoint {
        mu: w.mu,
        eps: w.eps,
        max_ratio: worst,
    })
}

/// Sequential sweep over `mu × eps`; the points come back in row-major
/// order and can equally be computed in parallel with
/// [`boundedness_point`] and assembled by [`ProbeReport::boundedness`].
pub fn boundedness_probe(
    grid: &Grid,
    side: Side,
    mu: &[f64],
    eps: &[f64],
    samples: usize,
    seed: u64,
    opts: &TwistedOptions,
) -> Result<ProbeReport> {
    let quads: Vec<[ComplexField; 4]> = (0..samples as u64).map(|i| probe_quadruple(grid, seed, i)).collect();
    let mut points = Vec::with_capacity(mu.len() * eps.len());
    for &m in mu {
        for &e in eps {
            points.push(boundedness_point(&quads, &WeightSpec::new(m, e, side)?, opts)?);
        }
    }
    ProbeReport::boundedness(side, seed, mu, eps, samples, &points)
}

impl ProbeReport {
    pub fn boundedness(
        side: Side,
        seed: u64,
        mu: &[f64],
        eps: &[f64],
        samples: usize,
        points: &[BoundednessPoint],
    ) -> Result<Self> {
        if mu.is_empty() || eps.is_empty() || points.len() != mu.len() * eps.len() {
            return Err(Error::InvalidParameter("probe table does not match its axes"));
        }
        let rows: Vec<ProbeRow> = points
            .iter()
            .map(|p| ProbeRow {
                mu: p.mu,
                eps: p.eps,
                tau: None,
                ratio: p.max_ratio,
            })
            .collect();
        let baseline = rows.iter().filter(|r| r.mu == 0.0).map(|r| r.ratio).reduce(f64::max);
        let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        Ok(Self {
            kind: ProbeKind::Boundedness { samples },
            side,
            seed: Some(seed),
            mu: mu.to_vec(),
            eps: eps.to_vec(),
            tau: Vec::new(),
            rows,
            baseline,
            max_ratio,
            slope: None,
            slope_r2: None,
        })
    }

    /// `max_ratio / baseline`, when a `μ = 0` row exists.
    pub fn amplification(&self) -> Option<f64> {
        self.baseline.filter(|b| *b > 0.0).map(|b| self.max_ratio / b)
    }
}

/// `exp(1 − 1/(1 − ((t − c)/w)²))` on `|t − c| < w`, zero elsewhere, in the
/// variable of `side`; returned as a space-side field.
pub fn bump(grid: &Grid, side: Side, center: f64, width: f64) -> Result<ComplexField> {
    if !(width > 0.0) {
        return Err(Error::InvalidParameter("bump width must be positive"));
    }
    let profile = |t: f64| {
        let s = (t - center) / width;
        if s.abs() < 1.0 {
            Complex64::new(libm::exp(1.0 - 1.0 / (1.0 - s * s)), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    Ok(match side {
        Side::Space => ComplexField::from_space_fn(grid, profile),
        Side::Frequency => {
            let hat = ComplexField::from_frequency_fn(grid, profile);
            ComplexField::new(grid, Side::Space, grid.inverse_values(hat.values()))?
        }
    })
}

/// Ratio for slot `l` at the origin and slot `k` at support distance `tau`;
/// of the other two slots one sits with each bump, so that slots `{1, 3}`
/// and `{2, 4}` each hold one bump at each site.
pub fn separation_point(
    grid: &Grid,
    bump_width: f64,
    tau: f64,
    w: &WeightSpec,
    slots: SlotPattern,
    opts: &TwistedOptions,
) -> Result<f64> {
    if slots.l == slots.k || !(1..=4).contains(&slots.l) || !(1..=4).contains(&slots.k) {
        return Err(Error::InvalidParameter(
            "slot pattern needs two distinct slots in 1..=4",
        ));
    }
    if !(tau >= 0.0) {
        return Err(Error::InvalidParameter("tau must be non-negative"));
    }
    let centre = tau + 2.0 * bump_width;
    let reach = match w.side {
        Side::Space => 0.5 * grid.length() - 2.0 * grid.dx(),
        Side::Frequency => grid.xi(grid.n() - 1) - 2.0 * grid.dxi(),
    };
    if centre + bump_width > reach || bump_width > reach {
        return Err(Error::InvalidParameter("bumps do not fit in the box"));
    }
    let home = bump(grid, w.side, 0.0, bump_width)?;
    let away = bump(grid, w.side, centre, bump_width)?;
    let away_slots = slots.away();
    let h: [ComplexField; 4] = core::array::from_fn(|j| {
        if away_slots.contains(&(j + 1)) {
            away.clone()
        } else {
            home.clone()
        }
    });
    ratio(&h, w, opts)
}

/// Separation sweep with a log-log slope fit.
pub fn separation_probe(
    grid: &Grid,
    bump_width: f64,
    tau_list: &[f64],
    w: &WeightSpec,
    slots: SlotPattern,
    opts: &TwistedOptions,
) -> Result<ProbeReport> {
    if tau_list.len() < 3 {
        return Err(Error::TooFewPoints(tau_list.len(), 3));
    }
    if tau_list.iter().any(|t| !(*t >= 1.0)) {
        return Err(Error::InvalidParameter("tau values must be at least 1"));
    }
    let ratios = tau_list
        .iter()
        .map(|&t| separation_point(grid, bump_width, t, w, slots, opts))
        .collect::<Result<Vec<_>>>()?;
    ProbeReport::separation(w, bump_width, slots, tau_list, &ratios)
}

impl ProbeReport {
    pub fn separation(
        w: &WeightSpec,
        bump_width: f64,
        slots: SlotPattern,
        tau: &[f64],
        ratios: &[f64],
    ) -> Result<Self> {
        if tau.len() != ratios.len() {
            return Err(Error::LengthMismatch {
                expected: tau.len(),
                found: ratios.len(),
            });
        }
        let (lx, ly): (Vec<f64>, Vec<f64>) = tau
            .iter()
            .zip(ratios)
            .filter(|(_, r)| **r > 0.0)
            .map(|(t, r)| (libm::log(*t), libm::log(*r)))
            .unzip();
        let fit = if lx.len() >= 3 {
            Some(linear_fit(&lx, &ly)?)
        } else {
            None
        };
        let rows = tau
            .iter()
            .zip(ratios)
            .map(|(t, r)| ProbeRow {
                mu: w.mu,
                eps: w.eps,
                tau: Some(*t),
                ratio: *r,
            })
            .collect();
        Ok(Self {
            kind: ProbeKind::Separation { slots, bump_width },
            side: w.side,
            seed: None,
            mu: alloc::vec![w.mu],
            eps: alloc::vec![w.eps],
            tau: tau.to_vec(),
            rows,
            baseline: None,
            max_ratio: ratios.iter().copied().fold(0.0, f64::max),
            slope: fit.map(|f| f.slope),
            slope_r2: fit.map(|f| f.r2),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn quadruples_are_reproducible_and_normalized() {
        let g = make_grid(128, 32.0).unwrap();
        let a = probe_quadruple(&g, 5, 3);
        let b = probe_quadruple(&g, 5, 3);
        let c = probe_quadruple(&g, 5, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
        for f in &a {
            assert!((f.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_bump_gives_zero_ratio() {
        let g = make_grid(256, 32.0).unwrap();
        let w = WeightSpec::new(0.0, 0.0, Side::Space).unwrap();
        let z = ComplexField::zeros(&g, Side::Space);
        let b = bump(&g, Side::Space, 0.0, 1.0).unwrap();
        assert_eq!(
            ratio(&[b.clone(), z, b.clone(), b], &w, &TwistedOptions::default()).unwrap(),
            0.0
        );
    }

    #[test]
    fn away_slots_balance_the_pairs() {
        assert_eq!(SlotPattern::ONE_TWO.away(), [2, 3]);
        assert_eq!(SlotPattern::ONE_THREE.away(), [3, 4]);
        assert_eq!(SlotPattern { l: 2, k: 4 }.away(), [4, 3]);
        assert_eq!(SlotPattern { l: 4, k: 1 }.away(), [1, 2]);
    }

    #[test]
    fn bumps_must_fit() {
        let g = make_grid(256, 16.0).unwrap();
        let w = WeightSpec::new(0.0, 0.0, Side::Space).unwrap();
        let r = separation_point(&g, 1.0, 8.0, &w, SlotPattern::ONE_TWO, &TwistedOptions::default());
        assert!(r.is_err());
        let short = separation_probe(
            &g,
            1.0,
            &[1.0, 2.0],
            &w,
            SlotPattern::ONE_TWO,
            &TwistedOptions::default(),
        );
        assert!(matches!(short, Err(Error::TooFewPoints(2, 3))));
    }

    #[test]
    fn table_matches_axes() {
        let g = make_grid(64, 16.0).unwrap();
        let r = boundedness_probe(&g, Side::Space, &[0.0, 1.0], &[0.1], 2, 1, &TwistedOptions::default()).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.rows.iter().all(|row| row.ratio >= 0.0));
        assert_eq!(r.seed, Some(1));
        assert!(r.baseline.unwrap() > 0.0);
    }
}
