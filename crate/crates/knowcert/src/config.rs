//! Policy and vocabulary files. Every file has a shipped default, embedded
//! at build time, so the pipeline runs without any configuration.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use knowcert_core::{ConceptPolicy, CueLexicon, EvidencePolicy, PolarityTable};
use serde::Deserialize;

pub const DEFAULT_EVIDENCE_POLICY: &str = include_str!("../config/evidence_policy.toml");
pub const DEFAULT_CONCEPT_POLICY: &str = include_str!("../config/concept_policy.toml");
pub const DEFAULT_EXCLUDED_CUIS: &str = include_str!("../config/excluded_cuis.txt");

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvidenceFile {
    #[serde(default)]
    publication_types: Vec<String>,
    #[serde(default)]
    mesh_topics: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConceptFile {
    subject_semtypes: Vec<String>,
    object_semtypes: Vec<String>,
    #[serde(default)]
    excluded_subject_cuis: Vec<String>,
}

pub fn parse_evidence_policy(text: &str) -> Result<EvidencePolicy> {
    let f: EvidenceFile = toml::from_str(text).context("evidence policy")?;
    Ok(EvidencePolicy::new(f.publication_types, f.mesh_topics)?)
}

/// `excluded` is merged with any CUIs listed in the file itself.
pub fn parse_concept_policy(text: &str, excluded: &BTreeSet<String>) -> Result<ConceptPolicy> {
    let f: ConceptFile = toml::from_str(text).context("concept policy")?;
    let all: BTreeSet<String> = f.excluded_subject_cuis.into_iter().chain(excluded.iter().cloned()).collect();
    Ok(ConceptPolicy::new(f.subject_semtypes, f.object_semtypes, all)?)
}

/// One CUI per line; the first whitespace-separated token counts, the rest
/// of the line and `#` comments are ignored.
pub fn parse_excluded_cuis(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .filter_map(|l| l.split_whitespace().next())
        .map(String::from)
        .collect()
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn load_evidence_policy(path: Option<&Path>) -> Result<EvidencePolicy> {
    match path {
        Some(p) => parse_evidence_policy(&read(p)?).with_context(|| p.display().to_string()),
        None => parse_evidence_policy(DEFAULT_EVIDENCE_POLICY),
    }
}

pub fn load_concept_policy(path: Option<&Path>, excluded: Option<&Path>) -> Result<ConceptPolicy> {
    let excluded = match excluded {
        Some(p) => parse_excluded_cuis(&read(p)?),
        None => parse_excluded_cuis(DEFAULT_EXCLUDED_CUIS),
    };
    match path {
        Some(p) => parse_concept_policy(&read(p)?, &excluded).with_context(|| p.display().to_string()),
        None => parse_concept_policy(DEFAULT_CONCEPT_POLICY, &excluded),
    }
}

pub fn load_lexicon(path: Option<&Path>) -> Result<CueLexicon> {
    match path {
        Some(p) => CueLexicon::parse(&read(p)?).with_context(|| p.display().to_string()),
        None => Ok(CueLexicon::default()),
    }
}

pub fn load_polarity(path: Option<&Path>) -> Result<PolarityTable> {
    match path {
        Some(p) => PolarityTable::parse_tsv(&read(p)?).with_context(|| p.display().to_string()),
        None => Ok(PolarityTable::default()),
    }
}
