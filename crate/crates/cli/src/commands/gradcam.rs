use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use restorex_core::gradcam::{gradcam, normalize, upsample};
use restorex_core::io::{read_png, read_tensor, write_png, write_tensor_file};
use restorex_core::report::render_overlay;

use crate::output::Output;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    gradients: PathBuf,
    /// Where to write the raw (unnormalized) map as a 1-channel tensor.
    #[arg(long)]
    out: PathBuf,
    /// Image to blend the normalized map onto.
    #[arg(long, requires = "out_png")]
    overlay: Option<PathBuf>,
    #[arg(long, requires = "overlay")]
    out_png: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

pub fn run(a: Args, out: &Output) -> anyhow::Result<ExitCode> {
    let features = read_tensor(&a.features)?;
    let gradients = read_tensor(&a.gradients)?;
    let map = gradcam(&features, &gradients)?;
    write_tensor_file(&a.out, &map.to_tensor())?;

    let heat = normalize(&map);
    if let (Some(img_path), Some(png)) = (&a.overlay, &a.out_png) {
        let img = read_png(img_path)?;
        let (w, h) = img.dimensions();
        let full = upsample(&heat, h as usize, w as usize).with_context(|| format!("overlay {}", img_path.display()))?;
        write_png(png, &render_overlay(&img, &full, a.alpha)?)?;
    }

    let doc = serde_json::json!({
        "height": map.height,
        "width": map.width,
        "max": map.max(),
        "blank": heat.is_blank,
    });
    if out.json_only {
        out.emit(&doc, None)?;
    }
    out.say(format!(
        "cam {}x{} max={:.6}{}",
        map.height,
        map.width,
        map.max(),
        if heat.is_blank { " (blank)" } else { "" }
    ));
    Ok(ExitCode::SUCCESS)
}
