use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nlpq_cli::config::ExperimentConfig;
use nlpq_cli::run::{run, summary};
use nlpq_cli::sweep::{parse_values, sweep, write_sweep, SweepParam};
use nlpq_cli::{CliError, Task};

#[derive(Parser)]
#[command(name = "nlpq", version, about = "Experiments with nonlocal (p,q)-Orlicz functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output` in the config. Defaults to `nlpq-out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the growth lemma suite on the configured growth function.
    GrowthCheck(Common),
    /// Minimize the energy for every s.
    Minimize(Common),
    /// Minimize, then sample the De Giorgi class inequality.
    DgCheck(Common),
    /// Minimize, sample, then check the Hölder estimate.
    Holder(Common),
    /// Minimize, then check the local sup bound for every δ.
    Bound(Common),
    /// Sobolev and isoperimetric checks.
    Inequalities(Common),
    /// Repeat the config's task for each value of one parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// One of s, delta, h, p, q.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
    },
}

fn load(common: &Common, task: Option<Task>) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(t) = task {
        cfg.task = Some(t);
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("nlpq-out"));
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(CliError::Schema("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Schema(format!("cannot size the worker pool: {e}")))?;
    }
    Ok((cfg, out))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (common, task) = match cli.command {
        Command::GrowthCheck(c) => (c, Task::GrowthCheck),
        Command::Minimize(c) => (c, Task::Minimize),
        Command::DgCheck(c) => (c, Task::DgCheck),
        Command::Holder(c) => (c, Task::Holder),
        Command::Bound(c) => (c, Task::Bound),
        Command::Inequalities(c) => (c, Task::Inequalities),
        Command::Sweep { common, param, values } => {
            let param: SweepParam = param.parse()?;
            let values = parse_values(&values)?;
            let (cfg, out) = load(&common, None)?;
            let rep = sweep(&cfg, param, &values)?;
            write_sweep(&out, &rep)?;
            println!("sweep over {param}: {} values, {} failed", rep.entries.len(), rep.failed());
            if rep.failed() == rep.entries.len() {
                return Err(CliError::Run(nonlocal_pq::Error::Numeric("every sweep value failed".into())));
            }
            return Ok(());
        }
    };
    let (cfg, out) = load(&common, Some(task))?;
    let report = run(cfg, &out)?;
    println!("{}", summary(&report));
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nlpq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
