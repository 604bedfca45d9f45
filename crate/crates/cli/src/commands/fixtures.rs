use std::path::PathBuf;
use std::process::ExitCode;

use restorex_core::fixtures::{generate, FixtureSpec};

use super::default_classes;
use crate::output::Output;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    images: usize,
    #[arg(long, default_value_t = 5)]
    stages: usize,
    #[arg(long, value_delimiter = ',', default_values_t = default_classes())]
    classes: Vec<String>,
    /// Comma-separated stage scores to construct, one per stage.
    #[arg(long, value_delimiter = ',')]
    phi: Option<Vec<f64>>,
    /// Tensor dims as channels,height,width.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [4, 8, 8])]
    tensor: Vec<usize>,
    /// Image dims as height,width.
    #[arg(long, value_delimiter = ',', num_args = 2, default_values_t = [32, 32])]
    image: Vec<u32>,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(a: Args, out: &Output) -> anyhow::Result<ExitCode> {
    let spec = FixtureSpec {
        seed: a.seed,
        n_images: a.images,
        n_stages: a.stages,
        classes: a.classes,
        phi_targets: a.phi,
        tensor_dims: (a.tensor[0], a.tensor[1], a.tensor[2]),
        image_dims: (a.image[0], a.image[1]),
        ..Default::default()
    };
    let fx = generate(&spec, &a.out)?;
    if out.json_only {
        out.emit(
            &serde_json::json!({
                "manifest": fx.manifest_path.display().to_string(),
                "similarity": fx.similarity_path.display().to_string(),
                "policy": fx.policy_path.display().to_string(),
                "stages": fx.manifest.stages.len(),
                "images": spec.n_images,
            }),
            None,
        )?;
    }
    out.say(format!(
        "wrote {} stages x {} images to {}",
        fx.manifest.stages.len(),
        spec.n_images,
        a.out.display()
    ));
    Ok(ExitCode::SUCCESS)
}
