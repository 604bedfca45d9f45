mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{eval, fixtures, gradcam, monitor, psnr, report, similarity};
use output::Output;

/// Restoration-quality evaluation harness.
#[derive(Debug, Parser)]
#[command(name = "restorex", version, propagate_version = true)]
struct Cli {
    /// Worker threads for parallel stages (default: logical cores).
    #[arg(long, global = true, env = "RESTOREX_THREADS")]
    threads: Option<usize>,
    /// Suppress summaries and warnings.
    #[arg(long, global = true)]
    quiet: bool,
    /// Print only the JSON document on stdout.
    #[arg(long, global = true)]
    json_only: bool,
    /// Record the generation time in report provenance.
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-class AP and mAP for one detection file.
    Eval(eval::Args),
    /// Stage score for one detection/ground-truth pair.
    Phi(monitor::PhiArgs),
    /// Stage scores, differences and guidance over a manifest (exit 3 on stop).
    Monitor(monitor::Args),
    /// Grad-CAM map from exported activations and gradients.
    Gradcam(gradcam::Args),
    /// PSNR between two PNGs or two directories of PNGs.
    Psnr(psnr::Args),
    /// Generate a deterministic synthetic fixture set.
    Fixtures(fixtures::Args),
    /// Similarity (0 or 1) of a predicted and an actual label.
    Similarity(similarity::Args),
    /// Per-stage AP table with stage scores, as JSON and Markdown.
    Report(report::Args),
}

fn init(cli: &Cli) -> anyhow::Result<()> {
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        anyhow::ensure!(n > 0, "--threads must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    init(&cli)?;
    let out = Output {
        quiet: cli.quiet,
        json_only: cli.json_only,
        timestamp: cli.timestamp,
    };
    match cli.command {
        Command::Eval(a) => eval::run(a, &out),
        Command::Phi(a) => monitor::run_phi(a, &out),
        Command::Monitor(a) => monitor::run(a, &out),
        Command::Gradcam(a) => gradcam::run(a, &out),
        Command::Psnr(a) => psnr::run(a, &out),
        Command::Fixtures(a) => fixtures::run(a, &out),
        Command::Similarity(a) => similarity::run(a, &out),
        Command::Report(a) => report::run(a, &out),
    }
}

fn main() -> ExitCode {
    // clap exits 2 on usage errors and 0 for --help / --version
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
