use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use restorex_core::eval::{psnr, Psnr};
use restorex_core::io::read_png;
use serde_json::json;

use crate::output::Output;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Reference PNG, or a directory of PNGs.
    #[arg(long)]
    reference: PathBuf,
    /// Restored PNG, or a directory with the same file names.
    #[arg(long)]
    restored: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn pair(a: &Path, b: &Path) -> anyhow::Result<Psnr> {
    let (x, y) = (read_png(a)?, read_png(b)?);
    psnr(&x, &y).with_context(|| format!("{} vs {}", a.display(), b.display()))
}

pub fn run(a: Args, out: &Output) -> anyhow::Result<ExitCode> {
    let doc = if a.reference.is_dir() {
        if !a.restored.is_dir() {
            bail!("--reference is a directory but --restored is not");
        }
        let mut names: Vec<_> = std::fs::read_dir(&a.reference)
            .with_context(|| format!("listing {}", a.reference.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
            .filter_map(|p| p.file_name().map(|n| n.to_owned()))
            .collect();
        names.sort();
        if names.is_empty() {
            bail!("no PNG files in {}", a.reference.display());
        }
        let mut rows = serde_json::Map::new();
        for n in &names {
            let v = pair(&a.reference.join(n), &a.restored.join(n))?;
            out.say(format!("{}: {v} dB", n.to_string_lossy()));
            rows.insert(n.to_string_lossy().into_owned(), json!(v));
        }
        json!({ "images": rows })
    } else {
        let v = pair(&a.reference, &a.restored)?;
        out.say(format!("{v} dB"));
        json!({ "psnr": v })
    };
    if a.out.is_some() || out.json_only {
        out.emit(&doc, a.out.as_deref())?;
    }
    Ok(ExitCode::SUCCESS)
}
