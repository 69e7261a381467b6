use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use carousel_eval::cli::{self, Command, Overrides, RunConfig};
use carousel_eval::Error;
use clap::{Parser, Subcommand};

/// Offline evaluation of recommenders shown as carousels.
#[derive(Parser)]
#[command(version, about)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true, env = "CAROUSEL_CONFIG")]
    config: Option<PathBuf>,
    /// Seed for splitting and tuning.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Row weight of the two-dimensional discount.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Column weight of the two-dimensional discount.
    #[arg(long, global = true)]
    beta: Option<f64>,
    /// Length of every recommendation list.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Fixed carousel: algorithm id or grid:<path>[#row]. Repeat for several rows.
    #[arg(long, global = true)]
    fixed: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Validate the configuration and print the plan without running it.
    #[arg(long, global = true)]
    dry_run: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Parse ratings, implicitize, split and persist the split.
    Prepare,
    /// Random hyperparameter search on the validation part.
    Tune,
    /// Train, evaluate individually and as carousels, write the report.
    Run,
    /// Render report.md from report.csv.
    Report,
}

fn run(args: Args) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: args.seed,
        alpha: args.alpha,
        beta: args.beta,
        cutoff: args.cutoff,
        fixed: args.fixed.clone(),
        out: args.out.clone(),
    });
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let command = match args.command {
        Cmd::Prepare => Command::Prepare,
        Cmd::Tune => Command::Tune,
        Cmd::Run => Command::Run,
        Cmd::Report => Command::Report,
    };
    if args.dry_run {
        println!("{}", cli::plan(&cfg, command)?);
        return Ok(());
    }
    match command {
        Command::Prepare => println!("{}", cli::cmd_prepare(&cfg)?),
        Command::Tune => {
            let summary = cli::cmd_tune(&cfg)?;
            for (a, (params, score)) in &summary.tuned {
                let values: Vec<String> =
                    params.relevant(*a).iter().map(|(n, v)| format!("{n}={v}")).collect();
                println!("{a}\tMAP={score:.4}\t{}", values.join(" "));
            }
            for (a, e) in &summary.failures {
                println!("{a}\tfailed: {e}");
            }
        }
        Command::Run => print!("{}", cli::cmd_run(&cfg)?.to_markdown()),
        Command::Report => print!("{}", cli::cmd_report(&cfg)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.downcast_ref::<Error>().map_or(4, |e| e.category().exit_code());
            ExitCode::from(code as u8)
        }
    }
}
