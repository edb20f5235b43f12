use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use reachverify::commands::{self, Engine, Status};
use reachverify::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "reachverify", version, about = "Reachable-set safety verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Overrides the configured seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum, default_value_t = EngineArg::Oracle)]
    engine: EngineArg,

    /// Overrides the configured output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Label random scenarios with the oracle and write the dataset.
    Generate,
    /// Train the surrogate on a generated dataset.
    Train,
    /// Verify the configured initial vehicle sets over the horizon.
    Verify,
    /// Run the closed-loop traffic simulation with online verification.
    Simulate,
    /// Compare surrogate and oracle on fresh scenarios.
    Evaluate,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum EngineArg {
    Oracle,
    Surrogate,
    Both,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Oracle => Engine::Oracle,
            EngineArg::Surrogate => Engine::Surrogate,
            EngineArg::Both => Engine::Both,
        }
    }
}

fn thread_cap() -> anyhow::Result<Option<usize>> {
    match std::env::var("REACHVERIFY_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("REACHVERIFY_THREADS={v:?} is not a positive integer"))?;
            anyhow::ensure!(n > 0, "REACHVERIFY_THREADS must be positive");
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}

fn run(cli: &Cli) -> anyhow::Result<Status> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(n) = thread_cap()? {
        reachverify::parallel::init_thread_pool(n);
    }
    let engine = Engine::from(cli.engine);
    let status = match cli.command {
        Command::Generate => commands::cmd_generate(&cfg)?.1,
        Command::Train => commands::cmd_train(&cfg)?.1,
        Command::Verify => commands::cmd_verify(&cfg, engine, cli.svg)?.1,
        Command::Simulate => commands::cmd_simulate(&cfg, engine, cli.svg)?.1,
        Command::Evaluate => commands::cmd_evaluate(&cfg, cli.svg)?.1,
    };
    Ok(status)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
