//! `twistspec` command-line front end.

pub mod commands;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "twistspec", version, about = "Spectra of twisted tubes: sweeps, certificates, mesh export")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-section eigenvalues over a list of constant twist rates.
    Xsection(CommonArgs),
    /// Truncated-tube eigenvalues over half-lengths and end conditions.
    Spectrum(CommonArgs),
    /// Theorem-level certificates and eigenvalue brackets as JSON.
    Certify(CommonArgs),
    /// Tube surface mesh (VTK) and quasi-boundedness probe.
    Geometry(CommonArgs),
    /// Dense-versus-iterative checks on the bundled operators.
    Oracle(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Runs one invocation and returns the process exit code. Diagnostics go to
/// standard error, written file paths to standard output.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("twistspec: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: &Command) -> Result<(), CliError> {
    let (common, body): (_, fn(&ExperimentConfig, commands::RunOptions) -> Result<commands::Outcome, CliError>) = match command {
        Command::Xsection(a) => (a, commands::cmd_xsection),
        Command::Spectrum(a) => (a, commands::cmd_spectrum),
        Command::Certify(a) => (a, commands::cmd_certify),
        Command::Geometry(a) => (a, commands::cmd_geometry),
        Command::Oracle(a) => (a, commands::cmd_oracle),
    };
    let cfg = ExperimentConfig::load(&common.config)?;
    if common.jobs == Some(0) {
        return Err(CliError::config("--jobs must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let outcome = pool.install(|| body(&cfg, commands::RunOptions { seed: common.seed }))?;
    std::fs::create_dir_all(&common.out)?;
    for artifact in &outcome.artifacts {
        let path = common.out.join(artifact.name);
        std::fs::write(&path, &artifact.bytes)?;
        println!("{}", path.display());
    }
    outcome.status
}
