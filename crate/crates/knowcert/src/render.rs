//! Report rendering: CSV (RFC 4180 quoting, `\n` line ends), JSON and
//! Markdown. All three carry the same cells in the same order.

use anyhow::Result;
use knowcert_core::{Report, ReportRow};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Md,
}

pub fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Csv => render_csv(report),
        Format::Json => render_json(report),
        Format::Md => Ok(render_md(report)),
    }
}

pub fn render_csv(report: &Report) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&report.columns)?;
    for row in &report.rows {
        w.write_record(row.values())?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

#[derive(Serialize)]
struct JsonReport<'a> {
    kind: knowcert_core::ReportKind,
    columns: &'a [String],
    rows: &'a [ReportRow],
}

pub fn render_json(report: &Report) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&JsonReport {
        kind: report.kind,
        columns: &report.columns,
        rows: &report.rows,
    })?;
    s.push('\n');
    Ok(s)
}

fn md_cell(value: &str) -> String {
    value
        .replace('\\', "\\\\")
        .replace('|', "\\|")
        .replace(['\n', '\r'], " ")
}

pub fn render_md(report: &Report) -> String {
    let mut out = String::new();
    out.push_str("| ");
    out.push_str(&report.columns.iter().map(|c| md_cell(c)).collect::<Vec<_>>().join(" | "));
    out.push_str(" |\n|");
    out.push_str(&"---|".repeat(report.columns.len()));
    out.push('\n');
    for row in &report.rows {
        out.push_str("| ");
        out.push_str(&row.values().map(md_cell).collect::<Vec<_>>().join(" | "));
        out.push_str(" |\n");
    }
    out
}
