use std::fmt::Write;

use super::RunReport;

/// One header row (classes, then mAP, then the stage score columns when
/// present) and one row per stage or noise level. APs are integer percents.
pub fn render_markdown(report: &RunReport) -> String {
    let phi_cols = report.has_phi();
    let mut out = String::new();
    writeln!(out, "## {}", report.technique).unwrap();
    out.push('\n');

    let mut header = vec!["Stage".to_string()];
    header.extend(report.classes.iter().map(|c| format!("{c} AP")));
    header.push("mAP".into());
    if phi_cols {
        header.extend(["φ".to_string(), "Δφ".to_string(), "decision".to_string()]);
    }
    writeln!(out, "| {} |", header.join(" | ")).unwrap();
    let align: Vec<&str> = std::iter::once(":---")
        .chain(std::iter::repeat_n("---:", header.len() - 1))
        .collect();
    writeln!(out, "|{}|", align.join("|")).unwrap();

    for row in &report.rows {
        let display = row.aps.display();
        let mut cells = vec![row.label.clone()];
        cells.extend(report.classes.iter().map(|c| display[c.as_str()].to_string()));
        cells.push(display["map"].to_string());
        if phi_cols {
            cells.push(row.phi.map(|v| format!("{v:.4}")).unwrap_or_default());
            cells.push(row.delta_phi.map(|v| format!("{v:+.4}")).unwrap_or_default());
            cells.push(row.decision.map(|d| d.to_string()).unwrap_or_default());
        }
        writeln!(out, "| {} |", cells.join(" | ")).unwrap();
    }

    out.push('\n');
    writeln!(
        out,
        "Config hash `{}`, restorex {}.",
        report.provenance.config_hash(),
        report.provenance.tool_version
    )
    .unwrap();
    out
}
