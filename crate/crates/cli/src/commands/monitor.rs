use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use restorex_core::monitor::{build_samples, phi, trajectory};
use restorex_core::{GuidancePolicy, PairingMode, StageManifest};

use super::{load_detections, load_ground_truth, load_table};
use crate::output::{flags, opt_path, Output};

/// Exit status when the policy recommends stopping.
pub const STOP_EXIT: u8 = 3;

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// Policy JSON (default: tolerance 0.05, patience 2, floor 0).
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value = "primary_object", value_parser = ["primary_object", "per_detection"])]
    pairing: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct PhiArgs {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long)]
    similarity: Option<PathBuf>,
    #[arg(long, default_value = "primary_object", value_parser = ["primary_object", "per_detection"])]
    pairing: String,
    #[arg(long, default_value_t = 1)]
    stage_id: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn load_policy(path: Option<&Path>) -> anyhow::Result<GuidancePolicy> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            GuidancePolicy::from_json(&text).with_context(|| format!("policy {}", p.display()))
        }
        None => Ok(GuidancePolicy::default()),
    }
}

/// Manifest, then each stage's detection and ground-truth files, without repeats.
pub fn manifest_inputs(manifest_path: &Path, manifest: &StageManifest) -> Vec<PathBuf> {
    let mut inputs = vec![manifest_path.to_path_buf()];
    for s in &manifest.stages {
        for p in [&s.detections, &s.ground_truth] {
            if !inputs.contains(p) {
                inputs.push(p.clone());
            }
        }
    }
    inputs
}

pub fn run(a: Args, out: &Output) -> anyhow::Result<ExitCode> {
    let manifest = StageManifest::load(&a.manifest)?;
    let table = load_table(a.similarity.as_deref())?;
    let policy = load_policy(a.policy.as_deref())?;
    let pairing: PairingMode = a.pairing.parse().map_err(anyhow::Error::msg)?;
    let t = trajectory(&manifest, &table, &policy, pairing)?;

    let mut inputs = manifest_inputs(&a.manifest, &manifest);
    inputs.extend(a.similarity.iter().chain(&a.policy).cloned());
    let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let prov = out.provenance(
        &refs,
        flags([
            ("pairing", a.pairing.clone()),
            ("similarity", opt_path(&a.similarity)),
            ("drop_tolerance", policy.drop_tolerance.to_string()),
            ("patience", policy.patience.to_string()),
            ("min_phi", policy.min_phi.to_string()),
        ]),
    )?;
    let mut doc = t.to_json();
    doc.as_object_mut()
        .expect("trajectory is an object")
        .insert("provenance".into(), prov.to_json());
    out.emit(&doc, a.out.as_deref())?;

    for s in &t.stages {
        out.say(format!(
            "stage {}: phi={:.4} n={} {}",
            s.quality.stage_id, s.quality.phi, s.quality.n, s.decision
        ));
    }
    if let Some(r) = t.rollback_to {
        out.say(format!("rollback to stage {r}"));
    }
    Ok(if t.stop_recommended() {
        ExitCode::from(STOP_EXIT)
    } else {
        ExitCode::SUCCESS
    })
}

pub fn run_phi(a: PhiArgs, out: &Output) -> anyhow::Result<ExitCode> {
    let table = load_table(a.similarity.as_deref())?;
    let dets = load_detections(&a.detections)?;
    let gts = load_ground_truth(&a.ground_truth)?;
    let pairing: PairingMode = a.pairing.parse().map_err(anyhow::Error::msg)?;
    let samples = build_samples(&dets, &gts, &table, pairing)?;
    let q = phi(a.stage_id, &samples)?;

    let mut inputs = vec![a.detections.as_path(), a.ground_truth.as_path()];
    inputs.extend(a.similarity.as_deref());
    let prov = out.provenance(
        &inputs,
        flags([("pairing", a.pairing.clone()), ("similarity", opt_path(&a.similarity))]),
    )?;
    let mut doc = serde_json::to_value(q)?;
    doc.as_object_mut()
        .expect("stage quality is an object")
        .insert("provenance".into(), prov.to_json());
    out.emit(&doc, a.out.as_deref())?;
    out.say(format!("phi={:.6} n={}", q.phi, q.n));
    Ok(ExitCode::SUCCESS)
}
