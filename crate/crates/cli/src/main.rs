mod commands;
mod suites;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ohara", version, about = "O'Hara knot energies of closed curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Energy and its quadrature error estimate.
    Energy(Common),
    /// First variation along --phi.
    Gradient(Common),
    /// Second variation along --phi and --psi.
    HessianForm(Common),
    /// Pair-grid export of the density, or of G / H when --phi / --psi are set.
    Density(Common),
    /// Diagonal-limit reports at 8 sample points.
    Limits(Common),
    /// Seminorm reports of phi' (or of the tangent when --phi is absent).
    Norms(Common),
    /// Length-preserving L2 gradient flow.
    Flow {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, default_value_t = 0.05)]
        dt: f64,
    },
    /// Oracle suites.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = suites::Suite::All)]
        suite: suites::Suite,
    },
}

#[derive(Args, Clone)]
pub struct Common {
    /// Curve file (JSON or CSV); a seeded random smooth curve when absent.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub p: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    /// Number of arclength samples.
    #[arg(long = "M")]
    pub m: Option<usize>,
    /// Half-width of the diagonal band.
    #[arg(long, default_value_t = 2)]
    pub band: usize,
    /// Field file or `synthetic:K`.
    #[arg(long)]
    pub phi: Option<String>,
    #[arg(long)]
    pub psi: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Failure classes mapped to exit codes 1 and 2.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
}

impl From<ohara::Error> for CliError {
    fn from(e: ohara::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[validation]: {first}");
            return ExitCode::from(1);
        }
    };
    let common = match &cli.command {
        Command::Energy(c)
        | Command::Gradient(c)
        | Command::HessianForm(c)
        | Command::Density(c)
        | Command::Limits(c)
        | Command::Norms(c) => c,
        Command::Flow { common, .. } | Command::Verify { common, .. } => common,
    };
    if let Some(n) = common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error[validation]: cannot configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Energy(c) => commands::energy(c),
        Command::Gradient(c) => commands::gradient(c),
        Command::HessianForm(c) => commands::hessian_form(c),
        Command::Density(c) => commands::density(c),
        Command::Limits(c) => commands::limits(c),
        Command::Norms(c) => commands::norms(c),
        Command::Flow { common, steps, dt } => commands::flow(common, *steps, *dt),
        Command::Verify { common, suite } => suites::run(common, *suite),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(m)) => {
            eprintln!("error[validation]: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(m)) => {
            eprintln!("error[numerical]: {m}");
            ExitCode::from(2)
        }
    }
}
