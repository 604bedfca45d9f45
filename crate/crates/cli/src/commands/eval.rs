use std::path::PathBuf;
use std::process::ExitCode;

use restorex_core::eval::{match_detections, ApMode, ApReport, ClassSelection};
use restorex_core::report::{render_markdown, ReportRow, RunReport};

use super::{default_classes, load_detections, load_ground_truth, load_table};
use crate::output::{flags, opt_path, write_file, Output};

#[derive(Debug, clap::Args)]
pub struct Args {
    #[arg(long)]
    detections: PathBuf,
    #[arg(long)]
    ground_truth: PathBuf,
    /// Label table; synonyms are scored under their group's head class.
    #[arg(long)]
    similarity: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    iou: f64,
    #[arg(long, default_value = "all_point", value_parser = ["all_point", "eleven_point"])]
    ap_mode: String,
    /// Comma-separated class list, in report order.
    #[arg(long, value_delimiter = ',', default_values_t = default_classes(), conflicts_with = "observed")]
    classes: Vec<String>,
    /// Use every class that has ground-truth objects instead of --classes.
    #[arg(long)]
    observed: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    markdown: Option<PathBuf>,
    /// Row label in the Markdown table.
    #[arg(long, default_value = "all")]
    label: String,
}

pub fn run(a: Args, out: &Output) -> anyhow::Result<ExitCode> {
    let table = load_table(a.similarity.as_deref())?;
    let dets = load_detections(&a.detections)?;
    let gts = load_ground_truth(&a.ground_truth)?;
    let mode: ApMode = a.ap_mode.parse().map_err(anyhow::Error::msg)?;

    let d: Vec<_> = dets.all().cloned().collect();
    let g: Vec<_> = gts.all().cloned().collect();
    let matches = match_detections(&d, &g, a.iou, &table)?;
    let selection = if a.observed {
        ClassSelection::Observed
    } else {
        ClassSelection::Configured(a.classes.clone())
    };
    let aps = ApReport::from_matches(&matches, &selection, mode)?;

    let mut inputs = vec![a.detections.as_path(), a.ground_truth.as_path()];
    inputs.extend(a.similarity.as_deref());
    let prov = out.provenance(
        &inputs,
        flags([
            ("iou", a.iou.to_string()),
            ("ap_mode", a.ap_mode.clone()),
            ("classes", if a.observed { "observed".into() } else { a.classes.join(",") }),
            ("similarity", opt_path(&a.similarity)),
        ]),
    )?;

    let mut doc = aps.to_json();
    doc.as_object_mut()
        .expect("ap report is an object")
        .insert("provenance".into(), prov.to_json());
    out.emit(&doc, a.out.as_deref())?;

    if let Some(md) = &a.markdown {
        let classes: Vec<String> = aps.classes.keys().cloned().collect();
        let report = RunReport::new("Detection AP", classes, vec![ReportRow::new(a.label.clone(), aps.clone())], prov)?;
        write_file(md, render_markdown(&report).as_bytes())?;
    }

    let display = aps.display();
    let summary: Vec<String> = display.iter().map(|(k, v)| format!("{k}={v}")).collect();
    out.say(format!("AP% {}", summary.join(" ")));
    Ok(ExitCode::SUCCESS)
}
