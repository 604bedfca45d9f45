use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use rayon::prelude::*;
use restorex_core::eval::{match_detections, ApMode, ApReport, ClassSelection};
use restorex_core::monitor::trajectory;
use restorex_core::report::{render_markdown, ReportRow, RunReport};
use restorex_core::{PairingMode, StageManifest};

use super::monitor::{load_policy, manifest_inputs};
use super::{default_classes, load_detections, load_ground_truth, load_table};
use crate::output::{flags, opt_path, write_file, Output};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    similarity: Option<PathBuf>,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long, default_value = "primary_object", value_parser = ["primary_object", "per_detection"])]
    pairing: String,
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    #[arg(long, default_value = "all_point", value_parser = ["all_point", "eleven_point"])]
    ap_mode: String,
    #[arg(long, value_delimiter = ',', default_values_t = default_classes())]
    classes: Vec<String>,
    /// Heading of the Markdown table.
    #[arg(long, default_value = "Restoration run")]
    technique: String,
    /// Leave out the stage-score columns (for detections without explain_prob).
    #[arg(long)]
    no_phi: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    markdown: Option<PathBuf>,
}

pub fn run(a: Args, out: &Output) -> anyhow::Result<ExitCode> {
    let manifest = StageManifest::load(&a.manifest)?;
    let table = load_table(a.similarity.as_deref())?;
    let mode: ApMode = a.ap_mode.parse().map_err(anyhow::Error::msg)?;
    let selection = ClassSelection::Configured(a.classes.clone());

    let aps = manifest
        .stages
        .par_iter()
        .map(|s| -> anyhow::Result<ApReport> {
            let dets = load_detections(&s.detections)?;
            let gts = load_ground_truth(&s.ground_truth)?;
            let d: Vec<_> = dets.all().cloned().collect();
            let g: Vec<_> = gts.all().cloned().collect();
            let m = match_detections(&d, &g, a.iou, &table)?;
            ApReport::from_matches(&m, &selection, mode).with_context(|| format!("stage {}", s.id))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut rows: Vec<ReportRow> = manifest
        .stages
        .iter()
        .zip(aps)
        .map(|(s, ap)| ReportRow::new(format!("Stage {}", s.id), ap))
        .collect();

    let policy = load_policy(a.policy.as_deref())?;
    if !a.no_phi {
        let pairing: PairingMode = a.pairing.parse().map_err(anyhow::Error::msg)?;
        let t = trajectory(&manifest, &table, &policy, pairing)?;
        for (i, (row, stage)) in rows.iter_mut().zip(&t.stages).enumerate() {
            row.phi = Some(stage.quality.phi);
            row.delta_phi = i.checked_sub(1).map(|j| t.deltas[j]);
            row.decision = Some(stage.decision);
        }
    }

    let mut inputs = manifest_inputs(&a.manifest, &manifest);
    inputs.extend(a.similarity.iter().chain(&a.policy).cloned());
    let refs: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let prov = out.provenance(
        &refs,
        flags([
            ("iou", a.iou.to_string()),
            ("ap_mode", a.ap_mode.clone()),
            ("classes", a.classes.join(",")),
            ("pairing", if a.no_phi { "none".into() } else { a.pairing.clone() }),
            ("similarity", opt_path(&a.similarity)),
            ("drop_tolerance", policy.drop_tolerance.to_string()),
            ("patience", policy.patience.to_string()),
            ("min_phi", policy.min_phi.to_string()),
        ]),
    )?;
    let report = RunReport::new(a.technique.clone(), a.classes.clone(), rows, prov)?;
    out.emit(&report.to_json(), a.out.as_deref())?;
    let md = render_markdown(&report);
    match &a.markdown {
        Some(p) => write_file(p, md.as_bytes())?,
        None if a.out.is_some() => out.say(md.trim_end()),
        None => {}
    }
    Ok(ExitCode::SUCCESS)
}
