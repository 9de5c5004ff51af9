//! Time stepping for the full dispersion-managed equation
//!
//! ```text
//! i u_t + d₀(t) u_xx + ε d_av u_xx + ε |u|² u = 0
//! ```
//!
//! with `d₀ = +1` on `[−1, 0)` and `−1` on `[0, 1)` (period 2), and for the
//! averaged equation `i v_t + ε d_av v_xx + ε Q(v,v,v) = 0`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::grid::{propagate, ComplexField, Side};
use crate::qfunc::eval_nonlinearity_cubic;
use crate::quadrature::SQuadrature;

/// Length of one dispersion period.
pub const PERIOD: f64 = 2.0;
/// Default step of the split-step integrator.
pub const DEFAULT_FULL_DT: f64 = 0.0025;
/// Default step of the averaged integrator.
pub const DEFAULT_AVERAGED_DT: f64 = 0.05;

const INSTABILITY_GROWTH: f64 = 1.1;
const BOUNDARY_SLACK: f64 = 1e-12;

/// Where the stroboscopic samples sit relative to the dispersion map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Alignment {
    /// Periods start at `t = −1`; the accumulated free evolution at the
    /// samples is `T_0`, so `u(t_k)` is compared with `v(t_k)` directly.
    #[default]
    SegmentStart,
    /// Periods start at `t = 0`; the full flow starts from `T_1 v₀` and
    /// `T_{−1} u(t_k)` is compared with `v(t_k)`.
    Midpoint,
}

impl Alignment {
    fn start(self) -> f64 {
        match self {
            Alignment::SegmentStart => -1.0,
            Alignment::Midpoint => 0.0,
        }
    }

    /// Free evolution accumulated between the averaged and the full frame at
    /// stroboscopic times.
    pub fn offset(self) -> f64 {
        match self {
            Alignment::SegmentStart => 0.0,
            Alignment::Midpoint => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DispersionMap {
    pub d_av: f64,
    pub eps: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub alignment: Alignment,
}

impl DispersionMap {
    pub fn new(d_av: f64, eps: f64) -> Result<Self> {
        let map = Self {
            d_av,
            eps,
            alignment: Alignment::default(),
        };
        map.validate()?;
        Ok(map)
    }

    pub fn with_alignment(self, alignment: Alignment) -> Self {
        Self { alignment, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter("eps must be non-negative"));
        }
        if !self.d_av.is_finite() {
            return Err(Error::InvalidParameter("d_av must be finite"));
        }
        Ok(())
    }

    /// `d₀(t)`, right-continuous at the switching times.
    pub fn d0(&self, t: f64) -> f64 {
        if (t + 1.0).rem_euclid(PERIOD) < 1.0 {
            1.0
        } else {
            -1.0
        }
    }

    /// First sample time of the stroboscopic map.
    pub fn start(&self) -> f64 {
        self.alignment.start()
    }
}

/// Sampled trajectory. `values[k]` is the field at `times[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub values: Vec<ComplexField>,
    pub dt: f64,
    /// Formal order of the integrator (2 for split-step, 4 for RK4).
    pub order: u32,
}

/// Scalar observables of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observables {
    pub t: f64,
    pub mass: f64,
    pub peak: f64,
    pub center: f64,
}

impl EvolutionTrace {
    pub fn observables(&self) -> Vec<Observables> {
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, u)| {
                let x = u.nodes();
                let mass = u.norm_sqr();
                let moment: f64 = u.values().iter().zip(&x).map(|(v, x)| x * v.norm_sqr()).sum::<f64>() * u.grid().dx();
                Observables {
                    t,
                    mass: u.norm(),
                    peak: u.max_abs(),
                    center: if mass > 0.0 { moment / mass } else { 0.0 },
                }
            })
            .collect()
    }

    /// Largest relative change of `‖u‖` against the first sample.
    pub fn mass_drift(&self) -> f64 {
        let Some(first) = self.values.first() else {
            return 0.0;
        };
        let m0 = first.norm();
        if m0 == 0.0 {
            return 0.0;
        }
        self.values
            .iter()
            .map(|u| (u.norm() - m0).abs() / m0)
            .fold(0.0, f64::max)
    }

    pub fn last(&self) -> Option<&ComplexField> {
        self.values.last()
    }
}

fn strang(u: &ComplexField, h: f64, d: f64, map: &DispersionMap) -> ComplexField {
    let r = (d + map.eps * map.d_av) * h / 2.0;
    let half = propagate(u, r);
    let eps = map.eps;
    let kicked = half.map(|v| {
        let (s, c) = libm::sincos(eps * v.norm_sqr() * h);
        v * Complex64::new(c, s)
    });
    propagate(&kicked, r)
}

// Advances from t by a signed dt, cutting at the switching times of d₀.
fn advance(u: &ComplexField, t: f64, dt: f64, map: &DispersionMap) -> ComplexField {
    let target = t + dt;
    let forward = dt > 0.0;
    let mut now = t;
    let mut out = u.clone();
    while if forward { now < target } else { now > target } {
        let boundary = if forward {
            libm::floor(now + BOUNDARY_SLACK) + 1.0
        } else {
            libm::ceil(now - BOUNDARY_SLACK) - 1.0
        };
        let next = if forward {
            if boundary < target - BOUNDARY_SLACK {
                boundary
            } else {
                target
            }
        } else if boundary > target + BOUNDARY_SLACK {
            boundary
        } else {
            target
        };
        let d = map.d0(0.5 * (now + next));
        out = strang(&out, next - now, d, map);
        now = next;
    }
    out
}

/// One Strang step `[t, t + dt]`: half linear step, nonlinear phase
/// `exp(iε|u|²dt)`, half linear step, restarted at every switching time of `d₀`.
pub fn step_full(u: &ComplexField, dt: f64, map: &DispersionMap, t: f64) -> Result<ComplexField> {
    u.expect_side(Side::Space)?;
    map.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive"));
    }
    Ok(advance(u, t, dt, map))
}

/// Inverse of [`step_full`]: evolves the state at time `t` back to `t − dt`.
pub fn step_back(u: &ComplexField, dt: f64, map: &DispersionMap, t: f64) -> Result<ComplexField> {
    u.expect_side(Side::Space)?;
    map.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive"));
    }
    Ok(advance(u, t, -dt, map))
}

/// Integrates over `periods` periods from [`DispersionMap::start`], sampling
/// at each period boundary. The step is shrunk so that it divides the period.
pub fn evolve_full(u0: &ComplexField, map: &DispersionMap, periods: usize, dt: f64) -> Result<EvolutionTrace> {
    u0.expect_side(Side::Space)?;
    map.validate()?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive"));
    }
    let steps = libm::ceil(PERIOD / dt - 1e-9).max(1.0) as usize;
    let h = PERIOD / steps as f64;
    let t0 = map.start();
    let mut times = Vec::with_capacity(periods + 1);
    let mut values = Vec::with_capacity(periods + 1);
    times.push(t0);
    values.push(u0.clone());
    let mut u = u0.clone();
    for k in 0..periods {
        let base = t0 + PERIOD * k as f64;
        for j in 0..steps {
            u = advance(&u, base + j as f64 * h, h, map);
        }
        times.push(base + PERIOD);
        values.push(u.clone());
    }
    Ok(EvolutionTrace {
        times,
        values,
        dt: h,
        order: 2,
    })
}

struct Averaged<'a> {
    eps: f64,
    d_av: f64,
    q: &'a SQuadrature,
}

impl Averaged<'_> {
    fn rhs(&self, v: &ComplexField) -> Result<ComplexField> {
        Ok(eval_nonlinearity_cubic(v, self.q)?.scaled(Complex64::new(0.0, self.eps)))
    }

    fn flow(&self, v: &ComplexField, h: f64) -> ComplexField {
        propagate(v, self.eps * self.d_av * h)
    }

    // Integrating-factor RK4; plain RK4 when the linear part vanishes.
    fn step(&self, v: &ComplexField, h: f64) -> Result<ComplexField> {
        let one = Complex64::new(1.0, 0.0);
        let c = |x: f64| Complex64::new(x, 0.0);
        let v_half = self.flow(v, h / 2.0);
        let k1 = self.rhs(v)?;
        let k1_half = self.flow(&k1, h / 2.0);
        let k2 = self.rhs(&v_half.combine(one, &k1_half, c(h / 2.0))?)?;
        let k3 = self.rhs(&v_half.combine(one, &k2, c(h / 2.0))?)?;
        let k3_half = self.flow(&k3, h / 2.0);
        let k4 = self.rhs(&self.flow(v, h).combine(one, &k3_half, c(h))?)?;
        let mid = self.flow(&k2.combine(one, &k3, one)?, h / 2.0);
        let mut out = self.flow(v, h).combine(one, &self.flow(&k1, h), c(h / 6.0))?;
        out = out.combine(one, &mid, c(h / 3.0))?;
        out.combine(one, &k4, c(h / 6.0))
    }
}

fn averaged_run(
    v0: &ComplexField,
    d_av: f64,
    eps: f64,
    q: &SQuadrature,
    dt: f64,
    sample_times: &[f64],
) -> Result<EvolutionTrace> {
    v0.expect_side(Side::Space)?;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive"));
    }
    if !(eps >= 0.0 && eps.is_finite()) || !d_av.is_finite() {
        return Err(Error::InvalidParameter("eps must be non-negative and d_av finite"));
    }
    let stepper = Averaged { eps, d_av, q };
    let m0 = v0.norm();
    let mut times = Vec::with_capacity(sample_times.len() + 1);
    let mut values = Vec::with_capacity(sample_times.len() + 1);
    times.push(0.0);
    values.push(v0.clone());
    let mut v = v0.clone();
    let mut now = 0.0;
    let mut h_used: f64 = 0.0;
    for &t in sample_times {
        if !(t > now) {
            return Err(Error::InvalidParameter("sample times must be increasing and positive"));
        }
        let steps = libm::ceil((t - now) / dt - 1e-9).max(1.0) as usize;
        let h = (t - now) / steps as f64;
        h_used = h_used.max(h);
        for _ in 0..steps {
            v = stepper.step(&v, h)?;
            let m = v.norm();
            if !m.is_finite() || m > INSTABILITY_GROWTH * m0 {
                return Err(Error::Unstable(m / m0));
            }
        }
        now = t;
        times.push(t);
        values.push(v.clone());
    }
    Ok(EvolutionTrace {
        times,
        values,
        dt: h_used,
        order: 4,
    })
}

/// Fourth-order integration of the averaged equation up to `t_end`, sampled
/// after every step. The step is shrunk so that it divides `t_end`; the run
/// aborts with [`Error::Unstable`] once `‖v‖` grows by more than 10%.
pub fn evolve_averaged(
    v0: &ComplexField,
    d_av: f64,
    eps: f64,
    t_end: f64,
    dt: f64,
    q: &SQuadrature,
) -> Result<EvolutionTrace> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter("t_end must be positive"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive"));
    }
    let steps = libm::ceil(t_end / dt - 1e-9).max(1.0) as usize;
    let samples: Vec<f64> = (1..=steps).map(|j| t_end * j as f64 / steps as f64).collect();
    averaged_run(v0, d_av, eps, q, dt, &samples)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AveragingOptions {
    pub d_av: f64,
    pub dt_full: f64,
    pub dt_averaged: f64,
    pub alignment: Alignment,
}

impl Default for AveragingOptions {
    fn default() -> Self {
        Self {
            d_av: 0.0,
            dt_full: DEFAULT_FULL_DT,
            dt_averaged: DEFAULT_AVERAGED_DT,
            alignment: Alignment::default(),
        }
    }
}

/// Observables of both flows at one stroboscopic sample; `t` counts from
/// the start of the run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AveragingSample {
    pub t: f64,
    pub deviation: f64,
    pub mass_full: f64,
    pub mass_averaged: f64,
    pub peak_full: f64,
    pub peak_averaged: f64,
    pub center_full: f64,
    pub center_averaged: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AveragingRow {
    pub eps: f64,
    pub periods: usize,
    /// `max_k ‖u(t_k) − v(t_k)‖/‖v(t_k)‖` over the stroboscopic samples.
    pub deviation: f64,
    pub mass_drift_full: f64,
    pub mass_drift_averaged: f64,
    pub samples: Vec<AveragingSample>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AveragingReport {
    pub alignment: Alignment,
    pub horizon_periods: usize,
    /// `ε·t` at the end of every run.
    pub slow_time: f64,
    pub rows: Vec<AveragingRow>,
    /// Slope of `ln D` against `ln ε`.
    pub order: f64,
    pub order_r2: f64,
    /// True when `D` decreases strictly along the list.
    pub monotone: bool,
}

/// Runs the full and the averaged flow from `f` for each `ε` and compares
/// them at the stroboscopic samples. The horizon is fixed in slow time:
/// `horizon_periods` periods at the largest `ε`, and proportionally more
/// for the smaller ones.
pub fn compare_averaging(
    f: &ComplexField,
    eps_list: &[f64],
    horizon_periods: usize,
    q: &SQuadrature,
    opts: &AveragingOptions,
) -> Result<AveragingReport> {
    f.expect_side(Side::Space)?;
    if eps_list.len() < 2 {
        return Err(Error::TooFewPoints(eps_list.len(), 2));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter("eps values must be positive"));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("eps list must be strictly decreasing"));
    }
    if horizon_periods == 0 {
        return Err(Error::InvalidParameter("horizon must be at least one period"));
    }
    let eps_max = eps_list[0];
    let slow_time = eps_max * PERIOD * horizon_periods as f64;
    let offset = opts.alignment.offset();
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let periods = libm::round(horizon_periods as f64 * eps_max / eps).max(1.0) as usize;
        let map = DispersionMap::new(opts.d_av, eps)?.with_alignment(opts.alignment);
        let full = evolve_full(&propagate(f, offset), &map, periods, opts.dt_full)?;
        let samples: Vec<f64> = (1..=periods).map(|k| PERIOD * k as f64).collect();
        let avg = averaged_run(f, opts.d_av, eps, q, opts.dt_averaged, &samples)?;
        let full_obs = full.observables();
        let avg_obs = avg.observables();
        let mut deviation: f64 = 0.0;
        let mut rows_k = Vec::with_capacity(periods + 1);
        for (k, (u, v)) in full.values.iter().zip(&avg.values).enumerate() {
            let u = propagate(u, -offset);
            let d = u
                .combine(Complex64::new(1.0, 0.0), v, Complex64::new(-1.0, 0.0))?
                .norm()
                / v.norm();
            deviation = deviation.max(d);
            rows_k.push(AveragingSample {
                t: avg.times[k],
                deviation: d,
                mass_full: full_obs[k].mass,
                mass_averaged: avg_obs[k].mass,
                peak_full: full_obs[k].peak,
                peak_averaged: avg_obs[k].peak,
                center_full: full_obs[k].center,
                center_averaged: avg_obs[k].center,
            });
        }
        rows.push(AveragingRow {
            eps,
            periods,
            deviation,
            mass_drift_full: full.mass_drift(),
            mass_drift_averaged: avg.mass_drift(),
            samples: rows_k,
        });
    }
    let ln_eps: Vec<f64> = rows.iter().map(|r| libm::log(r.eps)).collect();
    let ln_dev: Vec<f64> = rows
        .iter()
        .map(|r| libm::log(r.deviation.max(f64::MIN_POSITIVE)))
        .collect();
    let fit = linear_fit(&ln_eps, &ln_dev)?;
    let monotone = rows.windows(2).all(|w| w[1].deviation < w[0].deviation);
    Ok(AveragingReport {
        alignment: opts.alignment,
        horizon_periods,
        slow_time,
        rows,
        order: fit.slope,
        order_r2: fit.r2,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner, make_grid, random_smooth_field, Grid};
    use crate::solver::{solve, SolverOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pulse(g: &Grid) -> ComplexField {
        ComplexField::from_space_fn(g, |x| {
            Complex64::new(1.2 * libm::exp(-x * x / 2.0), 0.3 * x * libm::exp(-x * x))
        })
    }

    fn rel(a: &ComplexField, b: &ComplexField) -> f64 {
        a.combine(Complex64::new(1.0, 0.0), b, Complex64::new(-1.0, 0.0))
            .unwrap()
            .norm()
            / b.norm()
    }

    #[test]
    fn map_values() {
        let m = DispersionMap::new(0.0, 0.1).unwrap();
        assert_eq!(m.d0(-1.0), 1.0);
        assert_eq!(m.d0(-0.5), 1.0);
        assert_eq!(m.d0(0.0), -1.0);
        assert_eq!(m.d0(0.99), -1.0);
        assert_eq!(m.d0(1.0), 1.0);
        assert_eq!(m.d0(-2.5), 1.0);
        assert_eq!(m.d0(-3.5), -1.0);
        assert!(DispersionMap::new(0.0, -1.0).is_err());
    }

    #[test]
    fn rejects_non_positive_step() {
        let g = make_grid(64, 16.0).unwrap();
        let m = DispersionMap::new(0.0, 0.1).unwrap();
        let u = pulse(&g);
        assert!(step_full(&u, 0.0, &m, 0.0).is_err());
        assert!(step_full(&u, -0.1, &m, 0.0).is_err());
        assert!(evolve_full(&u, &m, 1, 0.0).is_err());
    }

    #[test]
    fn linear_period_is_identity() {
        let g = make_grid(256, 32.0).unwrap();
        let u = random_smooth_field(&g, 2.0, &mut ChaCha8Rng::seed_from_u64(3));
        let m = DispersionMap::new(0.0, 0.0).unwrap();
        let tr = evolve_full(&u, &m, 3, 0.07).unwrap();
        for v in &tr.values {
            assert!(v.max_diff(&u).unwrap() < 1e-10);
        }
        // straddling step
        let one = step_full(&u, 2.0, &m, -1.0).unwrap();
        assert!(one.max_diff(&u).unwrap() < 1e-12);
    }

    #[test]
    fn mass_is_conserved() {
        let g = make_grid(256, 32.0).unwrap();
        let u = random_smooth_field(&g, 2.0, &mut ChaCha8Rng::seed_from_u64(5)).scaled(Complex64::new(3.0, 0.0));
        let m = DispersionMap::new(0.1, 1.0).unwrap();
        let v = step_full(&u, 0.3, &m, -0.1).unwrap();
        assert!((v.norm() - u.norm()).abs() <= 1e-12 * u.norm());
        let tr = evolve_full(&u, &m, 100, 0.05).unwrap();
        assert!(tr.mass_drift() <= 1e-10, "{}", tr.mass_drift());
    }

    #[test]
    fn time_reversal() {
        let g = make_grid(256, 32.0).unwrap();
        let u0 = pulse(&g);
        let m = DispersionMap::new(0.0, 1.0).unwrap();
        let dt = 0.05;
        let mut u = u0.clone();
        let mut t = -1.0;
        for _ in 0..40 {
            u = step_full(&u, dt, &m, t).unwrap();
            t += dt;
        }
        for _ in 0..40 {
            u = step_back(&u, dt, &m, t).unwrap();
            t -= dt;
        }
        assert!(rel(&u, &u0) < 1e-8);
    }

    fn full_run(u0: &ComplexField, dt: f64) -> ComplexField {
        let m = DispersionMap::new(0.0, 1.0).unwrap();
        evolve_full(u0, &m, 1, dt).unwrap().last().unwrap().clone()
    }

    #[test]
    fn split_step_is_second_order() {
        let g = make_grid(256, 32.0).unwrap();
        let u0 = pulse(&g);
        let dt = 0.1;
        let reference = full_run(&u0, dt / 8.0);
        let e1 = rel(&full_run(&u0, dt), &reference);
        let e2 = rel(&full_run(&u0, dt / 2.0), &reference);
        let ratio = e1 / e2;
        assert!((3.5..4.6).contains(&ratio), "{e1} {e2} {ratio}");
    }

    #[test]
    fn averaged_rk4_is_fourth_order() {
        let g = make_grid(128, 24.0).unwrap();
        let q = SQuadrature::gauss_legendre(8).unwrap();
        let v0 = pulse(&g);
        let run = |dt: f64| {
            evolve_averaged(&v0, 0.0, 1.0, 2.0, dt, &q)
                .unwrap()
                .last()
                .unwrap()
                .clone()
        };
        let reference = run(0.025);
        let e1 = rel(&run(0.2), &reference);
        let e2 = rel(&run(0.1), &reference);
        let ratio = e1 / e2;
        assert!((13.0..19.0).contains(&ratio), "{e1} {e2} {ratio}");
    }

    #[test]
    fn averaged_with_dispersion_is_fourth_order() {
        let g = make_grid(128, 24.0).unwrap();
        let q = SQuadrature::gauss_legendre(8).unwrap();
        let v0 = pulse(&g);
        let run = |dt: f64| {
            evolve_averaged(&v0, 0.5, 1.0, 2.0, dt, &q)
                .unwrap()
                .last()
                .unwrap()
                .clone()
        };
        let reference = run(0.025);
        let e1 = rel(&run(0.2), &reference);
        let e2 = rel(&run(0.1), &reference);
        let ratio = e1 / e2;
        assert!((13.0..19.0).contains(&ratio), "{e1} {e2} {ratio}");
    }

    #[test]
    fn averaged_frozen_at_zero_eps() {
        let g = make_grid(64, 16.0).unwrap();
        let q = SQuadrature::gauss_legendre(4).unwrap();
        let v0 = pulse(&g);
        let tr = evolve_averaged(&v0, 0.0, 0.0, 1.0, 0.1, &q).unwrap();
        assert_eq!(tr.times.len(), 11);
        for v in &tr.values {
            assert_eq!(v, &v0);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let g = make_grid(64, 16.0).unwrap();
        let q = SQuadrature::gauss_legendre(4).unwrap();
        let v0 = pulse(&g).scaled(Complex64::new(10.0, 0.0));
        assert!(matches!(
            evolve_averaged(&v0, 0.0, 1.0, 1.0, 0.5, &q),
            Err(Error::Unstable(_))
        ));
    }

    #[test]
    fn soliton_rotates_under_both_flows() {
        let g = make_grid(512, 48.0).unwrap();
        let sol = solve(&g, &SolverOptions::default()).unwrap();
        assert!(sol.converged);
        let f = &sol.profile;
        let q = SQuadrature::default();
        let eps = 0.1;
        let avg = evolve_averaged(f, 0.0, eps, 1.0, DEFAULT_AVERAGED_DT, &q).unwrap();
        assert!(avg.mass_drift() <= 1e-8);
        let v = avg.last().unwrap();
        let phase = inner(f, v).unwrap().arg();
        assert!((phase - eps * sol.omega).abs() < 1e-6, "{phase}");
        let m = DispersionMap::new(0.0, 0.05).unwrap();
        let full = evolve_full(f, &m, 10, DEFAULT_FULL_DT).unwrap();
        for (t, u) in full.times.iter().zip(&full.values) {
            let (s, c) = libm::sincos(0.05 * sol.omega * (t - m.start()));
            assert!(rel(u, &f.scaled(Complex64::new(c, s))) <= 0.05);
        }
    }

    #[test]
    fn averaging_list_is_validated() {
        let g = make_grid(64, 16.0).unwrap();
        let q = SQuadrature::gauss_legendre(4).unwrap();
        let f = pulse(&g);
        let o = AveragingOptions::default();
        assert!(compare_averaging(&f, &[0.1, 0.1], 1, &q, &o).is_err());
        assert!(compare_averaging(&f, &[0.1, 0.2], 1, &q, &o).is_err());
        assert!(compare_averaging(&f, &[0.1], 1, &q, &o).is_err());
        assert!(compare_averaging(&f, &[0.2, 0.1], 0, &q, &o).is_err());
    }

    #[test]
    fn alignments_agree_on_a_short_run() {
        let g = make_grid(256, 32.0).unwrap();
        let sol = solve(&g, &SolverOptions::default()).unwrap();
        let q = SQuadrature::default();
        for alignment in [Alignment::SegmentStart, Alignment::Midpoint] {
            let o = AveragingOptions {
                alignment,
                ..AveragingOptions::default()
            };
            let r = compare_averaging(&sol.profile, &[0.2, 0.1], 2, &q, &o).unwrap();
            assert_eq!(r.alignment, alignment);
            assert!(r.rows.iter().all(|row| row.deviation < 0.1), "{r:?}");
            assert_eq!(r.rows[1].samples.len(), 5);
            assert!(r.rows[1].samples[0].deviation < 1e-14);
        }
    }
}
