use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pcuq_cli::{
    pipeline, pod_stage, project_stage, solve, sparsify_stage, CliError, Overrides, RunConfig,
    Setup,
};

/// Polynomial chaos collocation, sparsification and POD for parametric
/// transient models.
#[derive(Debug, Parser)]
#[command(name = "pcuq", version)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override one key, e.g. `--set chaos.degree=2`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Worker threads for the node solves, 0 for one per core.
    #[arg(short, long, global = true)]
    workers: Option<usize>,

    /// Output directory.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    /// Benchmark profile: default or fast.
    #[arg(long, global = true)]
    profile: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the model at every cubature node and cache the trajectories.
    Solve,
    /// Project the cached trajectories onto the chaos basis.
    Project,
    /// Sweep the sparsification tolerances.
    Sparsify,
    /// Reduce the coefficient snapshots by POD.
    Pod,
    /// All stages in sequence.
    Pipeline,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        set: cli.set,
        workers: cli.workers,
        output: cli.output,
        profile: cli.profile,
    };
    let config = RunConfig::load(cli.config.as_deref(), &overrides)?;
    let setup = Setup::new(&config)?;
    let dir = setup.config.output.directory.display();
    match cli.command {
        Command::Solve | Command::Pipeline => {
            let report = if matches!(cli.command, Command::Solve) {
                solve(&setup)?
            } else {
                pipeline(&setup)?
            };
            println!(
                "{} nodes, {} model solves, outputs in {dir}",
                report.nodes, report.solves
            );
        }
        Command::Project => {
            let c = project_stage(&setup)?;
            println!(
                "{} coefficients x {} snapshots written to {dir}",
                c.num_terms(),
                c.num_times()
            );
        }
        Command::Sparsify => {
            sparsify_stage(&setup)?;
            println!("sparsity sweep written to {dir}");
        }
        Command::Pod => {
            pod_stage(&setup)?;
            println!("POD error curve written to {dir}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
