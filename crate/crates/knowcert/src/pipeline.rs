//! The stages of the command-line pipeline as plain functions, so tests and
//! the service can run them in-process.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use anyhow::{Context, Result};
use anyhow::bail;
use knowcert_core::{
    apparent_table, apply_decisions, build_units, contradiction_table, detect_all_excluding, diversity_histogram, filter_corpus_owned,
    link, sort_findings, summary, tag_corpus, ClaimCorpus, ConceptPolicy, CueLexicon, DetectOptions, EvidencePolicy,
    Finding, HedgeExclusion, LinkMode, LoggedDecision, PolarityTable, Quarantined, Report, ReportKind, ScoreCues,
    TagMap,
};

use crate::artifact::{CorpusArtifact, IngestStats, UnitsArtifact};
use crate::config;
use crate::findings::FindingsHeader;
use crate::tsv::{self, ParseMode, RowError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFile {
    Predications,
    Sentences,
    Articles,
}

impl std::fmt::Display for InputFile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InputFile::Predications => "predications",
            InputFile::Sentences => "sentences",
            InputFile::Articles => "articles",
        })
    }
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub corpus: ClaimCorpus,
    pub quarantine: Vec<Quarantined>,
    pub errors: Vec<(InputFile, RowError)>,
    pub warnings: Vec<(InputFile, RowError)>,
}

impl Ingested {
    pub fn stats(&self) -> IngestStats {
        IngestStats {
            quarantined: self.quarantine.len() as u64,
            row_errors: self.errors.len() as u64,
            warnings: self.warnings.len() as u64,
        }
    }

    pub fn into_artifact(self) -> CorpusArtifact {
        let stats = self.stats();
        CorpusArtifact {
            corpus: self.corpus,
            stats,
        }
    }
}

/// Parses and links the three inputs. Strict mode turns bad rows and
/// dangling references into errors.
pub fn ingest<P: BufRead, S: BufRead, A: BufRead>(
    predications: P,
    sentences: S,
    articles: A,
    strict: bool,
) -> Result<Ingested> {
    let mode = if strict { ParseMode::Strict } else { ParseMode::Lenient };
    let p = tsv::parse_predications(predications, mode).context("predications")?;
    let s = tsv::parse_sentences(sentences, mode).context("sentences")?;
    let a = tsv::parse_metadata(articles, mode).context("articles")?;

    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    for (file, errs, warns) in [
        (InputFile::Predications, p.errors, p.warnings),
        (InputFile::Sentences, s.errors, s.warnings),
        (InputFile::Articles, a.errors, a.warnings),
    ] {
        errors.extend(errs.into_iter().map(|e| (file, e)));
        warnings.extend(warns.into_iter().map(|e| (file, e)));
    }

    let link_mode = if strict { LinkMode::Strict } else { LinkMode::Lenient };
    let linked = link(p.records, s.records, a.records, link_mode)?;
    Ok(Ingested {
        corpus: linked.corpus,
        quarantine: linked.quarantine,
        errors,
        warnings,
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::with_capacity(1 << 20, f))
}

pub fn ingest_files(predications: &Path, sentences: &Path, articles: &Path, strict: bool) -> Result<Ingested> {
    ingest(open(predications)?, open(sentences)?, open(articles)?, strict)
}

pub fn ingest_strs(predications: &str, sentences: &str, articles: &str, strict: bool) -> Result<Ingested> {
    ingest(predications.as_bytes(), sentences.as_bytes(), articles.as_bytes(), strict)
}

pub fn make_units(corpus: &ClaimCorpus, tags: &TagMap, settings: &UnitSettings) -> UnitsArtifact {
    let built = build_units(corpus, tags);
    UnitsArtifact {
        corpus_version: settings.corpus_version.clone(),
        exclusion: settings.exclusion,
        score_cues: settings.score_cues,
        duplicates_collapsed: built.duplicates_collapsed as u64,
        units: built.units,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitSettings {
    pub corpus_version: String,
    pub exclusion: Option<HedgeExclusion>,
    pub score_cues: ScoreCues,
}

impl Default for UnitSettings {
    fn default() -> Self {
        UnitSettings {
            corpus_version: "unversioned".into(),
            exclusion: Some(HedgeExclusion::DropClaims),
            score_cues: ScoreCues::All,
        }
    }
}

/// Everything between ingest and reporting.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// `None` skips filtering.
    pub filter: Option<(EvidencePolicy, ConceptPolicy)>,
    pub lexicon: CueLexicon,
    pub polarity: PolarityTable,
    pub units: UnitSettings,
    pub detect: DetectOptions,
}

impl PipelineConfig {
    /// Shipped defaults for every stage.
    pub fn shipped() -> Result<Self> {
        Ok(PipelineConfig {
            filter: Some((config::load_evidence_policy(None)?, config::load_concept_policy(None, None)?)),
            lexicon: CueLexicon::default(),
            polarity: PolarityTable::default(),
            units: UnitSettings::default(),
            detect: DetectOptions::default(),
        })
    }

    pub fn findings_header(&self) -> FindingsHeader {
        FindingsHeader {
            corpus_version: self.units.corpus_version.clone(),
            detect: self.detect,
            polarity: self.polarity.clone(),
            curated: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub corpus: ClaimCorpus,
    pub tags: TagMap,
    pub units: UnitsArtifact,
    pub findings: Vec<Finding>,
}

pub fn run(corpus: ClaimCorpus, cfg: &PipelineConfig) -> PipelineRun {
    let corpus = match &cfg.filter {
        Some((e, c)) => filter_corpus_owned(corpus, e, c),
        None => corpus,
    };
    let tags = tag_corpus(&corpus, &cfg.lexicon);
    let units = make_units(&corpus, &tags, &cfg.units);
    let findings = detect(&units, &cfg.polarity, &cfg.detect);
    PipelineRun {
        corpus,
        tags,
        units,
        findings,
    }
}

pub fn detect(units: &UnitsArtifact, polarity: &PolarityTable, opts: &DetectOptions) -> Vec<Finding> {
    detect_all_excluding(&units.units, units.exclusion, polarity, opts)
}

/// Curated findings as written by `apply`: surviving findings and removed
/// ones (state rejected) together, in canonical order.
pub fn curate(
    header: &FindingsHeader,
    findings: &[Finding],
    units: &UnitsArtifact,
    log: &[LoggedDecision],
) -> Result<(FindingsHeader, Vec<Finding>)> {
    if header.curated {
        bail!("findings were already curated; apply decisions to detector output");
    }
    let curation = apply_decisions(findings, &units.working_units(), log, &header.polarity, &header.detect);
    let mut out = curation.findings;
    out.extend(curation.removed.into_iter().map(|r| r.finding));
    sort_findings(&mut out);
    let header = FindingsHeader {
        curated: true,
        ..header.clone()
    };
    Ok((header, out))
}

pub const REPORT_KINDS: [ReportKind; 4] = [
    ReportKind::Contradictions,
    ReportKind::Diversity,
    ReportKind::Apparent,
    ReportKind::Summary,
];

pub fn report_name(kind: ReportKind) -> &'static str {
    match kind {
        ReportKind::Contradictions => "contradictions",
        ReportKind::Diversity => "diversity",
        ReportKind::Apparent => "apparent",
        ReportKind::Summary => "summary",
    }
}

/// Builds one report. The apparent table needs the corpus for sentence
/// texts; the summary uses whichever artifacts are given.
pub fn build_report(
    kind: ReportKind,
    findings: &[Finding],
    corpus: Option<&ClaimCorpus>,
    units: Option<&UnitsArtifact>,
) -> Result<Report> {
    Ok(match kind {
        ReportKind::Contradictions => contradiction_table(findings),
        ReportKind::Diversity => diversity_histogram(findings),
        ReportKind::Apparent => match corpus {
            Some(c) => apparent_table(findings, c),
            None => bail!("the apparent report needs the corpus"),
        },
        ReportKind::Summary => summary(
            corpus,
            units.map(|u| &u.units),
            units.map_or(0, UnitsArtifact::hedged_claims_filtered),
            findings,
        )
        .to_report(),
    })
}
