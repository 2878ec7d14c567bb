use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pnorm_design_cli::commands::{self, VectorDistribution};
use pnorm_design_cli::formats::PSpec;

#[derive(Parser)]
#[command(
    name = "pnorm-design",
    about = "Experimental design under the p-norm-of-inverse-eigenvalues objective: \
             generate instances, solve the convex relaxation, round by randomized \
             exchange, and verify reports",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DistributionArg {
    Gaussian,
    Heavy,
    Identity,
}

impl From<DistributionArg> for VectorDistribution {
    fn from(value: DistributionArg) -> Self {
        match value {
            DistributionArg::Gaussian => VectorDistribution::Gaussian,
            DistributionArg::Heavy => VectorDistribution::Heavy,
            DistributionArg::Identity => VectorDistribution::Identity,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic instance file.
    Generate {
        #[arg(long, value_enum, default_value = "gaussian")]
        distribution: DistributionArg,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Exponent: a number, "zero", or "infinity".
        #[arg(long)]
        p: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the convex relaxation and persist the sparsified solution.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 200_000)]
        max_iters: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run randomized-exchange rounding over a seed range.
    Round {
        instance: PathBuf,
        /// Seed range "a..b" (half-open) or a single seed.
        #[arg(long, default_value = "0..1")]
        seeds: String,
        /// Override the instance exponent for this run.
        #[arg(long)]
        p: Option<String>,
        /// Override the instance accuracy for this run.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Reuse a solution artifact written by `solve`.
        #[arg(long)]
        solution: Option<PathBuf>,
        /// Directory for per-seed trace files (one record per line).
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute a report from the instance and compare field by field.
    Verify { instance: PathBuf, report: PathBuf },
    /// Re-run rounding with budget floor((1 - epsilon) k) so the returned
    /// sets tend to fit the original budget (true-approximation mode).
    Rescale {
        instance: PathBuf,
        #[arg(long, default_value = "0..1")]
        seeds: String,
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn configure_threads() {
    #[cfg(feature = "parallel")]
    if let Ok(raw) = std::env::var("PNORM_DESIGN_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: ignoring unparsable PNORM_DESIGN_THREADS={raw:?}"),
        }
    }
}

fn dispatch(cli: Cli) -> commands::CliResult {
    match cli.command {
        Command::Generate { distribution, d, n, k, p, epsilon, seed, out } => {
            let p = PSpec::parse(&p).map_err(commands::CliError::Invalid)?;
            commands::cmd_generate(distribution.into(), d, n, k, &p, epsilon, seed, &out)
        }
        Command::Solve { instance, tol, max_iters, out } => {
            commands::cmd_solve(&instance, tol, max_iters, &out)
        }
        Command::Round { instance, seeds, p, epsilon, solution, trace_out, out } => {
            let seeds = commands::parse_seed_range(&seeds).map_err(commands::CliError::Invalid)?;
            let p = p
                .map(|raw| PSpec::parse(&raw))
                .transpose()
                .map_err(commands::CliError::Invalid)?;
            commands::cmd_round(
                &instance,
                &seeds,
                p.as_ref(),
                epsilon,
                solution.as_deref(),
                trace_out.as_deref(),
                &out,
            )
        }
        Command::Verify { instance, report } => commands::cmd_verify(&instance, &report),
        Command::Rescale { instance, seeds, trace_out, out } => {
            let seeds = commands::parse_seed_range(&seeds).map_err(commands::CliError::Invalid)?;
            commands::cmd_rescale(&instance, &seeds, trace_out.as_deref(), &out)
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
