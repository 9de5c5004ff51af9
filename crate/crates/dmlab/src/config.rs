//! TOML run configuration. Every section has defaults, so an empty file is a
//! valid configuration.

use std::path::{Path, PathBuf};

use dmlab_core::evolution::{Alignment, DEFAULT_AVERAGED_DT, DEFAULT_FULL_DT};
use dmlab_core::solver::{InitialProfile, SolverOptions};
use dmlab_core::weighted::{SlotPattern, TailSamples};
use dmlab_core::{make_grid, Grid, Side};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Not echoed into reports; see [`crate::report::Environment`].
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
    pub grid: GridConfig,
    pub quadrature: QuadratureConfig,
    pub solver: SolverConfig,
    pub qcheck: QcheckConfig,
    pub decay: DecayConfig,
    pub probe: ProbeConfig,
    pub evolve: EvolveConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            out_dir: None,
            grid: GridConfig::default(),
            quadrature: QuadratureConfig::default(),
            solver: SolverConfig::default(),
            qcheck: QcheckConfig::default(),
            decay: DecayConfig::default(),
            probe: ProbeConfig::default(),
            evolve: EvolveConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 1024, length: 64.0 }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<Grid, CliError> {
        make_grid(self.n, self.length).map_err(|e| CliError::Usage(format!("grid: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub nodes: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { nodes: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Gaussian,
    /// Gaussian plus a smooth random perturbation drawn from the run seed.
    Perturbed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub lambda: f64,
    pub d_av: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub init: InitKind,
    pub width: f64,
    pub amplitude: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            lambda: o.lambda,
            d_av: o.d_av,
            tol: o.tol,
            max_iter: o.max_iter,
            damping: o.damping,
            init: InitKind::Gaussian,
            width: 1.0,
            amplitude: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn options(&self, seed: u64, s_nodes: usize) -> SolverOptions {
        SolverOptions {
            lambda: self.lambda,
            d_av: self.d_av,
            tol: self.tol,
            max_iter: self.max_iter,
            damping: self.damping,
            s_nodes,
            init: match self.init {
                InitKind::Gaussian => InitialProfile::Gaussian { width: self.width },
                InitKind::Perturbed => InitialProfile::Perturbed {
                    seed,
                    amplitude: self.amplitude,
                },
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QcheckConfig {
    pub fourier_cases: usize,
    /// Spectral cutoff of the random band-limited fields.
    pub band_cutoff: f64,
    pub fourier_window: usize,
    pub kernel_cases: usize,
    pub kernel_window: usize,
    pub delta_schedule: Vec<f64>,
    pub tol_gaussian: f64,
    pub tol_fourier: f64,
    pub tol_kernel: f64,
    pub tol_quadrature: f64,
}

impl Default for QcheckConfig {
    fn default() -> Self {
        Self {
            fourier_cases: 20,
            band_cutoff: 1.0,
            fourier_window: 64,
            kernel_cases: 5,
            kernel_window: 320,
            delta_schedule: vec![0.1, 0.05, 0.025],
            tol_gaussian: 1e-8,
            tol_fourier: 1e-6,
            tol_kernel: 1e-3,
            tol_quadrature: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayConfig {
    pub tail_fraction: f64,
    pub tail_samples: TailSamples,
    /// Floor relative to the peak amplitude.
    pub floor: f64,
    pub s_nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub min_r2: f64,
    /// Also solve on `(2n, L)` and `(n, 1.5L)` and compare the rates.
    pub refine: bool,
    pub max_refine_change: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        Self {
            tail_fraction: 0.25,
            tail_samples: TailSamples::OuterMaximum,
            floor: 1e-13,
            s_nodes: 128,
            tol: 1e-12,
            max_iter: 1000,
            min_r2: 0.98,
            refine: true,
            max_refine_change: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub sides: Vec<Side>,
    /// Grid of the boundedness sweep.
    pub grid: GridConfig,
    pub mu: Vec<f64>,
    pub eps: Vec<f64>,
    pub samples: usize,
    /// Allowed ratio of the sweep maximum to the `μ = 0` baseline.
    pub cap: f64,
    pub tau: Vec<f64>,
    pub separation_mu: Vec<f64>,
    pub separation_eps: f64,
    pub bump_width: f64,
    pub slots: Vec<[usize; 2]>,
    pub separation_s_nodes: usize,
    pub max_slope: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            sides: vec![Side::Space, Side::Frequency],
            grid: GridConfig { n: 256, length: 32.0 },
            mu: vec![0.0, 1.0, 2.0, 4.0, 8.0],
            eps: vec![0.01, 0.1, 1.0],
            samples: 50,
            cap: 10.0,
            tau: vec![1.0, 2.0, 4.0, 8.0, 16.0],
            separation_mu: vec![0.0, 1.0],
            separation_eps: 0.1,
            bump_width: 1.0,
            slots: vec![[1, 2], [1, 3]],
            separation_s_nodes: 128,
            max_slope: -0.4,
        }
    }
}

impl ProbeConfig {
    pub fn slot_patterns(&self) -> Vec<SlotPattern> {
        self.slots.iter().map(|s| SlotPattern { l: s[0], k: s[1] }).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub eps: Vec<f64>,
    /// Periods at the largest `ε`; smaller `ε` run proportionally longer.
    pub periods: usize,
    pub dt_full: f64,
    pub dt_averaged: f64,
    pub alignment: Alignment,
    pub d_av: f64,
    pub min_order: f64,
    pub stationarity_eps: f64,
    pub stationarity_t_end: f64,
    pub stationarity_tol: f64,
    /// Write every stroboscopic sample as a CSV file.
    pub snapshots: bool,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.2, 0.1, 0.05],
            periods: 5,
            dt_full: DEFAULT_FULL_DT,
            dt_averaged: DEFAULT_AVERAGED_DT,
            alignment: Alignment::SegmentStart,
            d_av: 0.0,
            min_order: 0.8,
            stationarity_eps: 0.1,
            stationarity_t_end: 1.0,
            stationarity_tol: 1e-6,
            snapshots: false,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.grid.build()?;
        self.probe.grid.build()?;
        if self.quadrature.nodes == 0 {
            return Err(usage("quadrature.nodes must be positive"));
        }
        self.solver
            .options(self.seed, self.quadrature.nodes)
            .validate()
            .map_err(|e| usage(format!("solver: {e}")))?;

        let q = &self.qcheck;
        if q.fourier_cases == 0 || q.kernel_cases == 0 {
            return Err(usage("qcheck needs at least one case per route"));
        }
        positive("qcheck.band_cutoff", q.band_cutoff)?;
        for (name, w) in [("fourier_window", q.fourier_window), ("kernel_window", q.kernel_window)] {
            if w < 2 || w % 2 != 0 {
                return Err(usage(format!("qcheck.{name} must be even and positive")));
            }
        }
        if q.delta_schedule.len() < 2 {
            return Err(usage("qcheck.delta_schedule needs at least two values"));
        }
        for d in &q.delta_schedule {
            positive("qcheck.delta_schedule entries", *d)?;
        }
        for (name, t) in [
            ("tol_gaussian", q.tol_gaussian),
            ("tol_fourier", q.tol_fourier),
            ("tol_kernel", q.tol_kernel),
            ("tol_quadrature", q.tol_quadrature),
        ] {
            positive(&format!("qcheck.{name}"), t)?;
        }

        let d = &self.decay;
        if !(d.tail_fraction > 0.0 && d.tail_fraction <= 0.5) {
            return Err(usage("decay.tail_fraction must lie in (0, 0.5]"));
        }
        if !(d.floor > 0.0 && d.floor < 1.0) {
            return Err(usage("decay.floor must lie in (0, 1)"));
        }
        if d.s_nodes == 0 || d.max_iter == 0 {
            return Err(usage("decay.s_nodes and decay.max_iter must be positive"));
        }
        positive("decay.tol", d.tol)?;

        let p = &self.probe;
        if p.sides.is_empty() {
            return Err(usage("probe.sides is empty"));
        }
        if p.mu.is_empty() || p.eps.is_empty() || p.samples == 0 {
            return Err(usage("probe.mu, probe.eps and probe.samples must be non-empty"));
        }
        if !p.mu.contains(&0.0) {
            return Err(usage("probe.mu must contain 0 for the baseline"));
        }
        if p.mu
            .iter()
            .chain(&p.eps)
            .chain(&p.separation_mu)
            .any(|v| !(*v >= 0.0 && v.is_finite()))
        {
            return Err(usage("probe weights must be non-negative"));
        }
        if p.tau.is_empty() {
            return Err(usage("probe.tau is empty"));
        }
        if p.tau.len() < 3 {
            return Err(usage("probe.tau needs at least three values to fit a slope"));
        }
        if p.tau.iter().any(|t| !(*t >= 1.0 && t.is_finite())) {
            return Err(usage("probe.tau values must be at least 1"));
        }
        if p.separation_mu.is_empty() || p.slots.is_empty() {
            return Err(usage("probe.separation_mu and probe.slots must be non-empty"));
        }
        if p.slots
            .iter()
            .any(|s| s[0] == s[1] || !(1..=4).contains(&s[0]) || !(1..=4).contains(&s[1]))
        {
            return Err(usage("probe.slots entries must be two distinct slots in 1..=4"));
        }
        if !(p.separation_eps >= 0.0) {
            return Err(usage("probe.separation_eps must be non-negative"));
        }
        positive("probe.bump_width", p.bump_width)?;
        positive("probe.cap", p.cap)?;
        if p.separation_s_nodes == 0 {
            return Err(usage("probe.separation_s_nodes must be positive"));
        }

        let e = &self.evolve;
        if e.eps.len() < 2 {
            return Err(usage("evolve.eps needs at least two values"));
        }
        for v in &e.eps {
            positive("evolve.eps entries", *v)?;
        }
        if e.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(usage("evolve.eps must be strictly decreasing"));
        }
        if e.periods == 0 {
            return Err(usage("evolve.periods must be positive"));
        }
        positive("evolve.dt_full", e.dt_full)?;
        positive("evolve.dt_averaged", e.dt_averaged)?;
        positive("evolve.stationarity_t_end", e.stationarity_t_end)?;
        positive("evolve.stationarity_tol", e.stationarity_tol)?;
        if !(e.stationarity_eps >= 0.0) || !(e.d_av >= 0.0 && e.d_av.is_finite()) {
            return Err(usage("evolve.stationarity_eps and evolve.d_av must be non-negative"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let c: RunConfig = toml::from_str("").unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn partial_sections_and_unknown_keys() {
        let c: RunConfig = toml::from_str("seed = 7\n[grid]\nn = 256\n[evolve]\nalignment = \"midpoint\"\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.grid.n, 256);
        assert_eq!(c.grid.length, 64.0);
        assert_eq!(c.evolve.alignment, Alignment::Midpoint);
        assert!(toml::from_str::<RunConfig>("[grid]\npoints = 3\n").is_err());
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = RunConfig::default();
        c.solver.lambda = 0.0;
        assert!(matches!(c.validate(), Err(CliError::Usage(_))));
        let mut c = RunConfig::default();
        c.probe.tau.clear();
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.evolve.eps = vec![0.1, 0.1];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.grid.n = 1000;
        assert!(c.validate().is_err());
    }

    #[test]
    fn perturbed_init_takes_the_run_seed() {
        let s = SolverConfig {
            init: InitKind::Perturbed,
            ..SolverConfig::default()
        };
        match s.options(42, 32).init {
            InitialProfile::Perturbed { seed, amplitude } => {
                assert_eq!(seed, 42);
                assert_eq!(amplitude, 0.1);
            }
            other => panic!("{other:?}"),
        }
    }
}
