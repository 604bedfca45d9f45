use std::path::PathBuf;
use std::process::ExitCode;

use restorex_core::{Label, SimilarityMode};

use super::load_table;
use crate::output::Output;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Label table (default: built-in grouped table).
    #[arg(long)]
    table: Option<PathBuf>,
    /// Predicted label.
    #[arg(long)]
    p: String,
    /// Actual label.
    #[arg(long)]
    a: String,
    /// Override the table's mode.
    #[arg(long, value_parser = ["grouped", "strict"])]
    mode: Option<String>,
}

pub fn run(args: Args, out: &Output) -> anyhow::Result<ExitCode> {
    let mut table = load_table(args.table.as_deref())?;
    match args.mode.as_deref() {
        Some("strict") => table = table.with_mode(SimilarityMode::Strict),
        Some("grouped") => table = table.with_mode(SimilarityMode::Grouped),
        _ => {}
    }
    let (p, a) = (Label::new(&args.p)?, Label::new(&args.a)?);
    let s = table.similarity(&p, &a);
    if out.json_only {
        out.emit(
            &serde_json::json!({"p": p.as_str(), "a": a.as_str(), "mode": table.mode(), "similarity": s}),
            None,
        )?;
    } else {
        println!("{s}");
    }
    Ok(ExitCode::SUCCESS)
}
