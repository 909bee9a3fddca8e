//! `findings.jsonl`: a header line with the detection settings, then one
//! JSON object per finding, every line tagged with the schema version.
//!
//! The header carries the polarity table and detector options so that
//! `apply` and `serve` re-evaluate pairs exactly as `detect` did.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use knowcert_core::{DetectOptions, Finding, PolarityTable};
use serde::{Deserialize, Serialize};

pub const FINDINGS_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FindingsHeader {
    pub corpus_version: String,
    pub detect: DetectOptions,
    pub polarity: PolarityTable,
    /// Whether the findings went through `apply`.
    #[serde(default)]
    pub curated: bool,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    schema: u32,
    header: FindingsHeader,
}

#[derive(Serialize)]
struct FindingLineOut<'a> {
    schema: u32,
    #[serde(flatten)]
    finding: &'a Finding,
}

#[derive(Deserialize)]
struct FindingLineIn {
    schema: u32,
    #[serde(flatten)]
    finding: Finding,
}

pub fn write_findings<W: Write>(mut out: W, header: &FindingsHeader, findings: &[Finding]) -> io::Result<()> {
    let head = HeaderLine {
        schema: FINDINGS_SCHEMA,
        header: header.clone(),
    };
    serde_json::to_writer(&mut out, &head)?;
    out.write_all(b"\n")?;
    for f in findings {
        serde_json::to_writer(
            &mut out,
            &FindingLineOut {
                schema: FINDINGS_SCHEMA,
                finding: f,
            },
        )?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_findings<R: BufRead>(input: R) -> Result<(FindingsHeader, Vec<Finding>)> {
    let mut lines = input.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => bail!("findings file is empty (header line missing)"),
            Some((_, l)) if l.as_ref().is_ok_and(|l| l.trim().is_empty()) => continue,
            Some((i, l)) => {
                let head: HeaderLine =
                    serde_json::from_str(&l?).with_context(|| format!("findings line {}: bad header", i + 1))?;
                if head.schema != FINDINGS_SCHEMA {
                    bail!("findings schema {} is not supported", head.schema);
                }
                break head.header;
            }
        }
    };
    let mut findings = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FindingLineIn =
            serde_json::from_str(&line).with_context(|| format!("findings line {}", i + 1))?;
        if rec.schema != FINDINGS_SCHEMA {
            bail!("findings line {}: schema {} is not supported", i + 1, rec.schema);
        }
        findings.push(rec.finding);
    }
    Ok((header, findings))
}

pub fn save_findings(path: &Path, header: &FindingsHeader, findings: &[Finding]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_findings(BufWriter::new(file), header, findings)?;
    Ok(())
}

pub fn load_findings(path: &Path) -> Result<(FindingsHeader, Vec<Finding>)> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_findings(BufReader::new(file)).with_context(|| path.display().to_string())
}
