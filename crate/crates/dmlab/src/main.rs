use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dmlab::{run, CliError, Command, RunConfig};

const DEFAULT_OUT: &str = "dmlab-out";

#[derive(Debug, Parser)]
#[command(name = "dmlab", version, about = "Dispersion-managed soliton experiments")]
struct Cli {
    /// TOML configuration; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "DMLAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Compute the soliton and write its profile.
    Solve,
    /// Compare the three evaluations of the quadrilinear functional.
    Qcheck,
    /// Fit the exponential tails of the soliton.
    DecayFit,
    /// Sweep the twisted functionals.
    Probe,
    /// Compare the full and the averaged dynamics.
    Evolve,
    /// solve, qcheck, decay-fit and probe in one report.
    PaperVerify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Qcheck => Command::Qcheck,
            Cmd::DecayFit => Command::DecayFit,
            Cmd::Probe => Command::Probe,
            Cmd::Evolve => Command::Evolve,
            Cmd::PaperVerify => Command::PaperVerify,
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    let out = cli
        .out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let command = Command::from(cli.command);
    let report = run(command, config, out.clone())?;
    for c in &report.checks {
        println!(
            "{} {} = {:e} ({:?} {:e})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.relation,
            c.bound
        );
    }
    println!("report: {}", out.join(command.report_file()).display());
    println!("determinism hash: {}", report.determinism_hash);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
