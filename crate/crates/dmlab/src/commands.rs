//! The subcommands. Each stage adds a fragment to the run report, writes
//! its CSV side files and records its checks.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dmlab_core::evolution::{
    compare_averaging, evolve_averaged, evolve_full, AveragingOptions, AveragingReport, DispersionMap, PERIOD,
};
use dmlab_core::grid::{band_limited_field, forward_transform, inner, propagate};
use dmlab_core::qfunc::{
    eval_nonlinearity_cubic, eval_q4_direct, eval_q4_fourier, extrapolate_kernel, KernelLattice, LatticeWindow,
};
use dmlab_core::solver::{solve, SolitonResult, SolverOptions};
use dmlab_core::weighted::{
    boundedness_point, envelope_diagnostic, fit_decay_with, probe_quadruple, separation_point, BoundednessPoint,
    DecayFit, EnvelopeReport, ProbeReport, Route, TailSamples, TwistedOptions, WeightSpec,
};
use dmlab_core::{Complex64, ComplexField, Grid, SQuadrature, Side};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Stage};
use crate::io::{write_field_csv, write_json, write_table};
use crate::report::{Check, Environment, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Qcheck,
    DecayFit,
    Probe,
    Evolve,
    PaperVerify,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Qcheck => "qcheck",
            Command::DecayFit => "decay-fit",
            Command::Probe => "probe",
            Command::Evolve => "evolve",
            Command::PaperVerify => "paper-verify",
        }
    }

    /// Name of the JSON report inside the output directory.
    pub fn report_file(&self) -> String {
        format!("{}.json", self.name().replace('-', "_"))
    }
}

/// Closed form of `𝒬` on four copies of `exp(−x²/2)`.
pub fn gaussian_q4() -> f64 {
    (std::f64::consts::PI / 2.0).sqrt() * 2f64.asinh() / 2.0
}

pub struct Runner {
    pub config: RunConfig,
    pub out: PathBuf,
    pub report: RunReport,
}

impl Runner {
    pub fn new(command: Command, config: RunConfig, out: PathBuf) -> Result<Self, CliError> {
        config.validate()?;
        fs::create_dir_all(&out)?;
        let environment = Environment {
            out_dir: out.display().to_string(),
            threads: rayon::current_num_threads(),
        };
        let report = RunReport::new(command.name(), &config, environment);
        Ok(Self { config, out, report })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn check(&mut self, c: Check) {
        info!("{} {}: {:e}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value);
        self.report.checks.push(c);
    }

    fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        info!("stage {stage}");
        let start = Instant::now();
        let out = f(self);
        self.report
            .timings
            .insert(stage.to_string(), start.elapsed().as_secs_f64());
        out
    }

    /// Seals the report and writes it, recording `outcome`'s error if any.
    pub fn finish(mut self, command: Command, outcome: Result<(), CliError>) -> Result<RunReport, CliError> {
        if let Err(e) = &outcome {
            self.report.error = Some(e.to_string());
        }
        self.report.seal()?;
        write_json(&self.path(&command.report_file()), &self.report)?;
        outcome.map(|_| self.report)
    }
}

/// Runs `command` and writes `<command>.json` into `out`, also when a stage
/// fails.
pub fn run(command: Command, config: RunConfig, out: PathBuf) -> Result<RunReport, CliError> {
    let mut r = Runner::new(command, config, out)?;
    let outcome = match command {
        Command::Solve => solve_stage(&mut r).map(|_| ()),
        Command::Qcheck => qcheck_stage(&mut r),
        Command::DecayFit => decay_stage(&mut r),
        Command::Probe => probe_stage(&mut r),
        Command::Evolve => evolve_stage(&mut r),
        Command::PaperVerify => solve_stage(&mut r)
            .and_then(|_| qcheck_stage(&mut r))
            .and_then(|_| decay_stage(&mut r))
            .and_then(|_| probe_stage(&mut r)),
    };
    r.finish(command, outcome)
}

fn quadrature(nodes: usize) -> Result<SQuadrature, CliError> {
    SQuadrature::gauss_legendre(nodes).stage("quadrature")
}

fn rel_gap(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[derive(Debug, Clone, Serialize)]
pub struct SolitonSummary {
    pub n: usize,
    pub length: f64,
    pub s_nodes: usize,
    pub lambda: f64,
    pub d_av: f64,
    pub omega: f64,
    pub q_value: f64,
    pub p_ratio: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub mass: f64,
}

impl SolitonSummary {
    fn new(grid: &Grid, s_nodes: usize, s: &SolitonResult) -> Self {
        Self {
            n: grid.n(),
            length: grid.length(),
            s_nodes,
            lambda: s.lambda,
            d_av: s.d_av,
            omega: s.omega,
            q_value: s.q_value,
            p_ratio: s.p_ratio,
            residual: s.residual,
            iterations: s.iterations,
            converged: s.converged,
            mass: s.profile.norm_sqr(),
        }
    }
}

fn run_solver(grid: &Grid, opts: &SolverOptions) -> Result<SolitonResult, CliError> {
    solve(grid, opts).stage("solve")
}

fn not_converged(stage: &str, s: &SolitonResult) -> CliError {
    CliError::Numerical(format!(
        "{stage}: no convergence after {} iterations (residual {:e})",
        s.iterations, s.residual
    ))
}

#[derive(Debug, Clone, Serialize)]
struct ScalingSummary {
    lambda: f64,
    omega: f64,
    q_value: f64,
    omega_ratio: f64,
    q_ratio: f64,
}

pub fn solve_stage(r: &mut Runner) -> Result<SolitonResult, CliError> {
    r.timed("solve", |r| {
        let grid = r.config.grid.build()?;
        let nodes = r.config.quadrature.nodes;
        let opts = r.config.solver.options(r.config.seed, nodes);
        let doubled = SolverOptions {
            lambda: 2.0 * opts.lambda,
            ..opts.clone()
        };
        let (base, scaled) = rayon::join(|| run_solver(&grid, &opts), || run_solver(&grid, &doubled));
        let (base, scaled) = (base?, scaled?);
        r.report.insert("soliton", &SolitonSummary::new(&grid, nodes, &base))?;
        write_table(&r.path("solver_trace.csv"), &base.trace)?;
        write_field_csv(&r.path("profile_space.csv"), &base.profile)?;
        write_field_csv(
            &r.path("profile_frequency.csv"),
            &forward_transform(&base.profile).stage("solve")?,
        )?;
        if !base.converged {
            return Err(not_converged("solve", &base));
        }
        if !scaled.converged {
            return Err(not_converged("solve at doubled mass", &scaled));
        }
        let q = quadrature(nodes)?;
        let qf = eval_nonlinearity_cubic(&base.profile, &q).stage("solve")?;
        let pairing = inner(&base.profile, &qf).stage("solve")?.re;
        let scaling = ScalingSummary {
            lambda: scaled.lambda,
            omega: scaled.omega,
            q_value: scaled.q_value,
            omega_ratio: scaled.omega / base.omega,
            q_ratio: scaled.q_value / base.q_value,
        };
        r.report.insert("scaling", &scaling)?;
        let tol = r.config.solver.tol;
        r.check(Check::at_most("solve.residual", base.residual, tol));
        r.check(Check::at_most(
            "solve.iterations",
            base.iterations as f64,
            r.config.solver.max_iter as f64,
        ));
        r.check(Check::at_most(
            "solve.omega_vs_functional",
            (base.omega - pairing / base.lambda).abs(),
            1e-10,
        ));
        r.check(Check::at_most(
            "solve.mass",
            (base.profile.norm_sqr() - base.lambda).abs() / base.lambda,
            1e-12,
        ));
        r.check(Check::at_most(
            "solve.scaling.omega",
            (scaling.omega_ratio - 2.0).abs(),
            1e-6,
        ));
        r.check(Check::at_most("solve.scaling.q", (scaling.q_ratio - 4.0).abs(), 1e-6));
        Ok(base)
    })
}

#[derive(Debug, Clone, Serialize)]
struct GaussianCheck {
    direct: f64,
    closed_form: f64,
    gap: f64,
    doubled_nodes: f64,
    quadrature_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
struct FourierCase {
    index: usize,
    direct: Complex64,
    fourier: Complex64,
    leakage: f64,
    gap: f64,
}

#[derive(Debug, Clone, Serialize)]
struct KernelCase {
    index: usize,
    centers: [f64; 4],
    momenta: [f64; 4],
    phases: [f64; 4],
    direct: Complex64,
    totals: Vec<Complex64>,
    extrapolated: Complex64,
    gap: f64,
}

#[derive(Debug, Clone, Serialize)]
struct RouteSummary<T> {
    window: LatticeWindow,
    cases: Vec<T>,
    max_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
struct RelativeGaps {
    gaussian: f64,
    quadrature: f64,
    fourier: f64,
    kernel: f64,
}

#[derive(Debug, Clone, Serialize)]
struct GridSummary {
    n: usize,
    length: f64,
}

fn grid_summary(g: &Grid) -> GridSummary {
    GridSummary {
        n: g.n(),
        length: g.length(),
    }
}

/// Case `i` of a seeded family: one ChaCha stream per case, so cases do not
/// depend on each other or on the order they are computed in.
fn case_rng(seed: u64, family: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((family << 32) | i as u64);
    rng
}

fn packet(grid: &Grid, c: f64, k: f64, phase: f64) -> ComplexField {
    ComplexField::from_space_fn(grid, |x| {
        Complex64::from_polar((-(x - c) * (x - c) / 2.0).exp(), k * x + phase)
    })
}

pub fn qcheck_stage(r: &mut Runner) -> Result<(), CliError> {
    r.timed("qcheck", |r| {
        let grid = r.config.grid.build()?;
        let cfg = r.config.qcheck.clone();
        if cfg.fourier_window.max(cfg.kernel_window) > grid.n() {
            return Err(CliError::Usage("qcheck windows must not exceed grid.n".into()));
        }
        let seed = r.config.seed;
        let nodes = r.config.quadrature.nodes;
        let q = quadrature(nodes)?;
        let q2 = quadrature(2 * nodes)?;

        let g = ComplexField::from_space_fn(&grid, |x| Complex64::new((-x * x / 2.0).exp(), 0.0));
        let direct = eval_q4_direct(&g, &g, &g, &g, &q).stage("qcheck")?.re;
        let doubled = eval_q4_direct(&g, &g, &g, &g, &q2).stage("qcheck")?.re;
        let closed_form = gaussian_q4();
        let gaussian = GaussianCheck {
            direct,
            closed_form,
            gap: (direct - closed_form).abs() / closed_form,
            doubled_nodes: doubled,
            quadrature_gap: (direct - doubled).abs() / doubled.abs(),
        };

        let fwin = LatticeWindow::centered(cfg.fourier_window);
        let fourier_cases = (0..cfg.fourier_cases)
            .into_par_iter()
            .map(|i| {
                let mut rng = case_rng(seed, 1, i);
                let f: Vec<ComplexField> = (0..4)
                    .map(|_| band_limited_field(&grid, cfg.band_cutoff, &mut rng))
                    .collect::<Result<_, _>>()
                    .stage("qcheck.fourier")?;
                let direct = eval_q4_direct(&f[0], &f[1], &f[2], &f[3], &q).stage("qcheck.fourier")?;
                let h: Vec<ComplexField> = f
                    .iter()
                    .map(forward_transform)
                    .collect::<Result<_, _>>()
                    .stage("qcheck.fourier")?;
                let fv = eval_q4_fourier(&h[0], &h[1], &h[2], &h[3], None, fwin).stage("qcheck.fourier")?;
                Ok(FourierCase {
                    index: i,
                    direct,
                    fourier: fv.value,
                    leakage: fv.leakage,
                    gap: rel_gap(fv.value, direct),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;

        let kwin = LatticeWindow::centered(cfg.kernel_window);
        let kernel_cases = (0..cfg.kernel_cases)
            .into_par_iter()
            .map(|i| {
                let mut rng = case_rng(seed, 2, i);
                let mut centers = [0.0; 4];
                let mut momenta = [0.0; 4];
                let mut phases = [0.0; 4];
                for j in 0..4 {
                    centers[j] = rng.random_range(-0.5..0.5);
                    momenta[j] = rng.random_range(-0.6..0.6);
                    phases[j] = rng.random_range(0.0..std::f64::consts::TAU);
                }
                let f: Vec<ComplexField> = (0..4)
                    .map(|j| packet(&grid, centers[j], momenta[j], phases[j]))
                    .collect();
                let direct = eval_q4_direct(&f[0], &f[1], &f[2], &f[3], &q).stage("qcheck.kernel")?;
                let lattice = KernelLattice::new(&f[0], &f[1], &f[2], &f[3], kwin).stage("qcheck.kernel")?;
                let ex = extrapolate_kernel(&lattice, &cfg.delta_schedule).stage("qcheck.kernel")?;
                Ok(KernelCase {
                    index: i,
                    centers,
                    momenta,
                    phases,
                    direct,
                    totals: ex.values.iter().map(|v| v.total()).collect(),
                    extrapolated: ex.extrapolated,
                    gap: rel_gap(ex.extrapolated, direct),
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;

        let max = |gaps: &mut dyn Iterator<Item = f64>| gaps.fold(0.0, f64::max);
        let fourier = RouteSummary {
            window: fwin,
            max_gap: max(&mut fourier_cases.iter().map(|c| c.gap)),
            cases: fourier_cases,
        };
        let kernel = RouteSummary {
            window: kwin,
            max_gap: max(&mut kernel_cases.iter().map(|c| c.gap)),
            cases: kernel_cases,
        };
        let gaps = RelativeGaps {
            gaussian: gaussian.gap,
            quadrature: gaussian.quadrature_gap,
            fourier: fourier.max_gap,
            kernel: kernel.max_gap,
        };
        r.check(Check::at_most("qcheck.gaussian", gaps.gaussian, cfg.tol_gaussian));
        r.check(Check::at_most("qcheck.quadrature", gaps.quadrature, cfg.tol_quadrature));
        r.check(Check::at_most("qcheck.fourier", gaps.fourier, cfg.tol_fourier));
        r.check(Check::at_most("qcheck.kernel", gaps.kernel, cfg.tol_kernel));
        r.report.insert(
            "qcheck",
            &serde_json::json!({
                "grid": grid_summary(&grid),
                "quadrature": nodes,
                "delta_min_schedule": cfg.delta_schedule,
                "band_cutoff": cfg.band_cutoff,
                "gaussian": gaussian,
                "fourier": fourier,
                "kernel": kernel,
                "relative_gaps": gaps,
            }),
        )?;
        Ok(())
    })
}

#[derive(Debug, Clone, Serialize)]
struct Refinement {
    n: usize,
    length: f64,
    omega: f64,
    residual: f64,
    mu_space: f64,
    mu_frequency: f64,
    change_space: f64,
    change_frequency: f64,
}

#[derive(Debug, Clone, Serialize)]
struct DecaySummary {
    soliton: SolitonSummary,
    tail_fraction: f64,
    floor_relative: f64,
    space: DecayFit,
    frequency: DecayFit,
    /// Diagnostic of `T_{1/2} f`.
    envelope: EnvelopeReport,
    refinement: Vec<Refinement>,
}

fn fits(f: &ComplexField, tail: f64, floor: f64, samples: TailSamples) -> Result<(DecayFit, DecayFit), CliError> {
    let space = fit_decay_with(f, tail, floor, samples).stage("decay")?;
    let freq = fit_decay_with(&forward_transform(f).stage("decay")?, tail, floor, samples).stage("decay")?;
    Ok((space, freq))
}

pub fn decay_stage(r: &mut Runner) -> Result<(), CliError> {
    r.timed("decay", |r| {
        let cfg = r.config.decay.clone();
        let base_grid = r.config.grid.build()?;
        let mut grids = vec![base_grid.clone()];
        if cfg.refine {
            grids.push(dmlab_core::make_grid(2 * base_grid.n(), base_grid.length()).stage("decay")?);
            grids.push(dmlab_core::make_grid(base_grid.n(), 1.5 * base_grid.length()).stage("decay")?);
        }
        let opts = SolverOptions {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            ..r.config.solver.options(r.config.seed, cfg.s_nodes)
        };
        let solved = grids
            .par_iter()
            .map(|g| run_solver(g, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(bad) = solved.iter().find(|s| !s.converged) {
            return Err(not_converged("decay", bad));
        }
        let base = &solved[0];
        write_field_csv(&r.path("decay_profile_space.csv"), &base.profile)?;
        let (space, frequency) = fits(&base.profile, cfg.tail_fraction, cfg.floor, cfg.tail_samples)?;
        let envelope = envelope_diagnostic(&propagate(&base.profile, 0.5)).stage("decay")?;
        let mut refinement = Vec::new();
        for (g, s) in grids.iter().zip(&solved).skip(1) {
            let (sp, fr) = fits(&s.profile, cfg.tail_fraction, cfg.floor, cfg.tail_samples)?;
            refinement.push(Refinement {
                n: g.n(),
                length: g.length(),
                omega: s.omega,
                residual: s.residual,
                mu_space: sp.mu_hat,
                mu_frequency: fr.mu_hat,
                change_space: (sp.mu_hat - space.mu_hat).abs() / space.mu_hat.abs(),
                change_frequency: (fr.mu_hat - frequency.mu_hat).abs() / frequency.mu_hat.abs(),
            });
        }
        for (name, fit) in [("space", &space), ("frequency", &frequency)] {
            r.check(Check::at_least(
                format!("decay.{name}.mu_hat"),
                fit.mu_hat,
                f64::MIN_POSITIVE,
            ));
            r.check(Check::at_least(format!("decay.{name}.r2"), fit.r2, cfg.min_r2));
        }
        for rf in &refinement {
            let tag = format!("decay.refine.n{}_l{}", rf.n, rf.length);
            r.check(Check::at_most(
                format!("{tag}.space"),
                rf.change_space,
                cfg.max_refine_change,
            ));
            r.check(Check::at_most(
                format!("{tag}.frequency"),
                rf.change_frequency,
                cfg.max_refine_change,
            ));
        }
        let summary = DecaySummary {
            soliton: SolitonSummary::new(&base_grid, cfg.s_nodes, base),
            tail_fraction: cfg.tail_fraction,
            floor_relative: cfg.floor,
            space,
            frequency,
            envelope,
            refinement,
        };
        r.report.insert("decay", &summary)?;
        Ok(())
    })
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    side: Side,
    mu: f64,
    eps: f64,
    ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SeparationRow {
    side: Side,
    l: usize,
    k: usize,
    mu: f64,
    eps: f64,
    tau: f64,
    ratio: f64,
}

pub fn probe_stage(r: &mut Runner) -> Result<(), CliError> {
    r.timed("probe", |r| {
        let cfg = r.config.probe.clone();
        let seed = r.config.seed;
        let probe_grid = cfg.grid.build()?;
        let main_grid = r.config.grid.build()?;
        let bounded_opts = TwistedOptions {
            quadrature: quadrature(r.config.quadrature.nodes)?,
            ..TwistedOptions::default()
        };
        let quads: Vec<[ComplexField; 4]> = (0..cfg.samples as u64)
            .into_par_iter()
            .map(|i| probe_quadruple(&probe_grid, seed, i))
            .collect();
        let mut boundedness = Vec::new();
        let mut sweep_rows = Vec::new();
        for &side in &cfg.sides {
            let axes: Vec<(f64, f64)> = cfg
                .mu
                .iter()
                .flat_map(|&m| cfg.eps.iter().map(move |&e| (m, e)))
                .collect();
            let points = axes
                .par_iter()
                .map(|&(m, e)| {
                    let w = WeightSpec::new(m, e, side).stage("probe")?;
                    boundedness_point(&quads, &w, &bounded_opts).stage("probe")
                })
                .collect::<Result<Vec<BoundednessPoint>, _>>()?;
            let rep = ProbeReport::boundedness(side, seed, &cfg.mu, &cfg.eps, cfg.samples, &points).stage("probe")?;
            let amp = rep.amplification().unwrap_or(f64::INFINITY);
            r.check(Check::at_most(
                format!("probe.boundedness.{}", side_name(side)),
                amp,
                cfg.cap,
            ));
            sweep_rows.extend(rep.rows.iter().map(|row| SweepRow {
                side,
                mu: row.mu,
                eps: row.eps,
                ratio: row.ratio,
            }));
            boundedness.push(rep);
        }
        write_table(&r.path("probe_boundedness.csv"), &sweep_rows)?;

        let sep_q = quadrature(cfg.separation_s_nodes)?;
        let mut jobs = Vec::new();
        for &side in &cfg.sides {
            for slots in cfg.slot_patterns() {
                for &mu in &cfg.separation_mu {
                    jobs.push((side, slots, mu));
                }
            }
        }
        let points: Vec<_> = jobs
            .iter()
            .flat_map(|&(side, slots, mu)| cfg.tau.iter().map(move |&tau| (side, slots, mu, tau)))
            .collect();
        let ratios = points
            .par_iter()
            .map(|&(side, slots, mu, tau)| {
                let opts = TwistedOptions {
                    quadrature: sep_q.clone(),
                    route: match side {
                        Side::Space => Route::Auto,
                        Side::Frequency => Route::Lattice,
                    },
                    ..TwistedOptions::default()
                };
                let w = WeightSpec::new(mu, cfg.separation_eps, side).stage("probe")?;
                separation_point(&main_grid, cfg.bump_width, tau, &w, slots, &opts).stage("probe")
            })
            .collect::<Result<Vec<f64>, _>>()?;
        let mut separation = Vec::new();
        let mut sep_rows = Vec::new();
        for (&(side, slots, mu), chunk) in jobs.iter().zip(ratios.chunks(cfg.tau.len())) {
            let w = WeightSpec::new(mu, cfg.separation_eps, side).stage("probe")?;
            let rep = ProbeReport::separation(&w, cfg.bump_width, slots, &cfg.tau, chunk).stage("probe")?;
            r.check(Check::at_most(
                format!(
                    "probe.separation.{}.slots{}{}.mu{}",
                    side_name(side),
                    slots.l,
                    slots.k,
                    mu
                ),
                rep.slope.unwrap_or(f64::INFINITY),
                cfg.max_slope,
            ));
            sep_rows.extend(cfg.tau.iter().zip(chunk).map(|(&tau, &ratio)| SeparationRow {
                side,
                l: slots.l,
                k: slots.k,
                mu,
                eps: cfg.separation_eps,
                tau,
                ratio,
            }));
            separation.push(rep);
        }
        write_table(&r.path("probe_separation.csv"), &sep_rows)?;
        r.report.insert(
            "probe",
            &serde_json::json!({
                "seed": seed,
                "boundedness_grid": grid_summary(&probe_grid),
                "separation_grid": grid_summary(&main_grid),
                "cap": cfg.cap,
                "max_slope": cfg.max_slope,
                "boundedness": boundedness,
                "separation": separation,
            }),
        )?;
        Ok(())
    })
}

fn side_name(side: Side) -> &'static str {
    match side {
        Side::Space => "space",
        Side::Frequency => "frequency",
    }
}

#[derive(Debug, Clone, Serialize)]
struct TraceRow {
    eps: f64,
    t: f64,
    deviation: f64,
    mass_full: f64,
    mass_averaged: f64,
    peak_full: f64,
    peak_averaged: f64,
    center_full: f64,
    center_averaged: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Stationarity {
    eps: f64,
    omega: f64,
    t_end: f64,
    dt: f64,
    /// `max_t max_x ||v| − |f|| / max|f|`.
    amplitude_deviation: f64,
    /// `max_t |⟨f, v⟩/‖f‖² − e^{iεωt}|`.
    phase_deviation: f64,
    mass_drift: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ZeroEps {
    /// One period of the full flow at `ε = 0`, relative sup distance.
    linear_period_gap: f64,
    /// Averaged flow at `ε = 0` over unit time.
    averaged_frozen_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
struct EvolveSummary {
    soliton: SolitonSummary,
    averaging: AveragingReport,
    stationarity: Stationarity,
    zero_eps: ZeroEps,
}

pub fn evolve_stage(r: &mut Runner) -> Result<(), CliError> {
    let sol = solve_stage(r)?;
    r.timed("evolve", |r| {
        let cfg = r.config.evolve.clone();
        let grid = r.config.grid.build()?;
        let nodes = r.config.quadrature.nodes;
        let q = quadrature(nodes)?;
        let f = &sol.profile;
        let opts = AveragingOptions {
            d_av: cfg.d_av,
            dt_full: cfg.dt_full,
            dt_averaged: cfg.dt_averaged,
            alignment: cfg.alignment,
        };
        let averaging = compare_averaging(f, &cfg.eps, cfg.periods, &q, &opts).stage("evolve")?;
        let rows: Vec<TraceRow> = averaging
            .rows
            .iter()
            .flat_map(|row| {
                row.samples.iter().map(move |s| TraceRow {
                    eps: row.eps,
                    t: s.t,
                    deviation: s.deviation,
                    mass_full: s.mass_full,
                    mass_averaged: s.mass_averaged,
                    peak_full: s.peak_full,
                    peak_averaged: s.peak_averaged,
                    center_full: s.center_full,
                    center_averaged: s.center_averaged,
                })
            })
            .collect();
        write_table(&r.path("evolve_trace.csv"), &rows)?;
        if cfg.snapshots {
            write_snapshots(&r.path("snapshots"), f, &averaging, &opts, &q)?;
        }

        let eps = cfg.stationarity_eps;
        let trace = evolve_averaged(f, cfg.d_av, eps, cfg.stationarity_t_end, cfg.dt_averaged, &q).stage("evolve")?;
        let peak = f.max_abs();
        let mass = f.norm_sqr();
        let mut amplitude_deviation: f64 = 0.0;
        let mut phase_deviation: f64 = 0.0;
        for (t, v) in trace.times.iter().zip(&trace.values) {
            let d = f
                .values()
                .iter()
                .zip(v.values())
                .map(|(a, b)| (a.norm() - b.norm()).abs())
                .fold(0.0, f64::max);
            amplitude_deviation = amplitude_deviation.max(d / peak);
            let overlap = inner(f, v).stage("evolve")? / mass;
            phase_deviation = phase_deviation.max((overlap - Complex64::from_polar(1.0, eps * sol.omega * t)).norm());
        }
        let stationarity = Stationarity {
            eps,
            omega: sol.omega,
            t_end: cfg.stationarity_t_end,
            dt: trace.dt,
            amplitude_deviation,
            phase_deviation,
            mass_drift: trace.mass_drift(),
        };

        let map = DispersionMap::new(cfg.d_av, 0.0).stage("evolve")?;
        let linear = evolve_full(f, &map, 1, cfg.dt_full).stage("evolve")?;
        let frozen = evolve_averaged(f, cfg.d_av, 0.0, 1.0, cfg.dt_averaged, &q).stage("evolve")?;
        let gap = |t: &dmlab_core::evolution::EvolutionTrace| -> Result<f64, CliError> {
            let last = t
                .last()
                .ok_or_else(|| CliError::Numerical("evolve: empty trace".into()))?;
            Ok(last.max_diff(f).stage("evolve")? / peak)
        };
        let zero_eps = ZeroEps {
            linear_period_gap: if cfg.d_av == 0.0 { gap(&linear)? } else { 0.0 },
            averaged_frozen_gap: if cfg.d_av == 0.0 { gap(&frozen)? } else { 0.0 },
        };

        r.check(Check::at_least("evolve.order", averaging.order, cfg.min_order));
        r.check(Check::holds("evolve.monotone", averaging.monotone));
        r.check(Check::at_most(
            "evolve.stationarity.amplitude",
            amplitude_deviation,
            cfg.stationarity_tol,
        ));
        r.check(Check::at_most(
            "evolve.stationarity.phase",
            phase_deviation,
            cfg.stationarity_tol,
        ));
        r.check(Check::at_most(
            "evolve.zero_eps.linear",
            zero_eps.linear_period_gap,
            1e-10,
        ));
        r.check(Check::at_most(
            "evolve.zero_eps.averaged",
            zero_eps.averaged_frozen_gap,
            1e-12,
        ));
        r.report.insert(
            "evolve",
            &EvolveSummary {
                soliton: SolitonSummary::new(&grid, nodes, &sol),
                averaging,
                stationarity,
                zero_eps,
            },
        )?;
        Ok(())
    })
}

/// One CSV per stroboscopic sample and flow, in the frame of the averaged
/// flow.
fn write_snapshots(
    dir: &Path,
    f: &ComplexField,
    averaging: &AveragingReport,
    opts: &AveragingOptions,
    q: &SQuadrature,
) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    let offset = opts.alignment.offset();
    for (i, row) in averaging.rows.iter().enumerate() {
        let map = DispersionMap::new(opts.d_av, row.eps)
            .stage("evolve")?
            .with_alignment(opts.alignment);
        let full = evolve_full(&propagate(f, offset), &map, row.periods, opts.dt_full).stage("evolve")?;
        for (k, u) in full.values.iter().enumerate() {
            write_field_csv(&dir.join(format!("eps{i}_full_{k:04}.csv")), &propagate(u, -offset))?;
        }
        let t_end = PERIOD * row.periods as f64;
        let avg = evolve_averaged(f, opts.d_av, row.eps, t_end, opts.dt_averaged, q).stage("evolve")?;
        write_field_csv(&dir.join(format!("eps{i}_averaged_{:04}.csv", 0)), f)?;
        let mut k = 1;
        for (t, v) in avg.times.iter().zip(&avg.values) {
            if (t - PERIOD * k as f64).abs() < 1e-9 {
                write_field_csv(&dir.join(format!("eps{i}_averaged_{k:04}.csv")), v)?;
                k += 1;
            }
        }
    }
    Ok(())
}
