//! Tabular views of findings. Rendering to CSV, JSON or Markdown happens in
//! the `knowcert` crate; this module fixes the columns, values and order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::corpus::{format_pub_date, ClaimCorpus};
use crate::curation::CurationState;
use crate::detect::{ApparentFinding, Finding, PredicateSupport};
use crate::store::UnitMap;

/// One row, its cells in column order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportRow {
    pub cells: Vec<(String, String)>,
}

impl ReportRow {
    fn new(columns: &[&str], values: Vec<String>) -> Self {
        ReportRow {
            cells: columns.iter().map(|c| c.to_string()).zip(values).collect(),
        }
    }

    pub fn get(&self, column: &str) -> Option<&str> {
        self.cells.iter().find(|(c, _)| c == column).map(|(_, v)| v.as_str())
    }

    pub fn values(&self) -> impl Iterator<Item = &str> {
        self.cells.iter().map(|(_, v)| v.as_str())
    }
}

impl Serialize for ReportRow {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.cells.len()))?;
        for (k, v) in &self.cells {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Contradictions,
    Diversity,
    Apparent,
    Summary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub kind: ReportKind,
    pub columns: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl Report {
    fn new(kind: ReportKind, columns: &[&str], rows: Vec<ReportRow>) -> Self {
        Report {
            kind,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        }
    }
}

pub const CONTRADICTION_COLUMNS: [&str; 7] =
    ["subject", "subject_cui", "predicates", "object", "object_cui", "category", "state"];
pub const DIVERSITY_COLUMNS: [&str; 2] = ["labels", "pairs"];
pub const APPARENT_COLUMNS: [&str; 7] =
    ["date", "claim_key", "text", "triple", "subject_cui", "object_cui", "cue"];
pub const SUMMARY_COLUMNS: [&str; 2] = ["metric", "value"];

fn render_side(side: &[PredicateSupport]) -> Vec<String> {
    let mut sorted: Vec<&PredicateSupport> = side.iter().collect();
    sorted.sort_by_key(|s| s.predicate.raw());
    sorted
        .into_iter()
        .map(|s| format!("{} ({})", s.predicate, s.claim_count))
        .collect()
}

/// `"P (n)"` for every predicate, excitatory side first, each side sorted by
/// predicate name.
pub fn predicate_list(excitatory: &[PredicateSupport], inhibitory: &[PredicateSupport]) -> String {
    let mut parts = render_side(excitatory);
    parts.extend(render_side(inhibitory));
    parts.join(" ")
}

pub fn contradiction_table(findings: &[Finding]) -> Report {
    let rows = findings
        .iter()
        .filter_map(|f| match f {
            Finding::Contradiction(c) => Some(ReportRow::new(
                &CONTRADICTION_COLUMNS,
                alloc::vec![
                    c.subject_name.clone(),
                    c.pair.subject_cui.clone(),
                    predicate_list(&c.excitatory, &c.inhibitory),
                    c.object_name.clone(),
                    c.pair.object_cui.clone(),
                    c.status.category_label.clone().unwrap_or_default(),
                    c.status.state.as_str().into(),
                ],
            )),
            _ => None,
        })
        .collect();
    Report::new(ReportKind::Contradictions, &CONTRADICTION_COLUMNS, rows)
}

/// Label set as shown in the histogram: sorted names joined by `", "`.
pub fn label_set(labels: &[PredicateSupport]) -> String {
    let names: BTreeSet<String> = labels.iter().map(|l| l.predicate.raw()).collect();
    names.into_iter().collect::<Vec<_>>().join(", ")
}

pub fn diversity_histogram(findings: &[Finding]) -> Report {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for f in findings {
        if let Finding::Diversity(d) = f {
            *counts.entry(label_set(&d.labels)).or_default() += 1;
        }
    }
    let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let rows = entries
        .into_iter()
        .map(|(labels, n)| ReportRow::new(&DIVERSITY_COLUMNS, alloc::vec![labels, n.to_string()]))
        .collect();
    Report::new(ReportKind::Diversity, &DIVERSITY_COLUMNS, rows)
}

/// `"Subject-PREDICATE-Object"`.
pub fn triple_text(f: &ApparentFinding) -> String {
    format!("{}-{}-{}", f.subject_name, f.unit_key.predicate, f.object_name)
}

/// `article.location.ordinal` when the sentence is known, else the raw id.
pub fn claim_key(sentence_id: &str, corpus: &ClaimCorpus) -> String {
    match corpus.sentence(sentence_id) {
        Some(s) => format!("{}.{}.{}", s.article_id, s.location.code(), s.ordinal),
        None => sentence_id.into(),
    }
}

/// Apparent findings by publication date; undated rows last. Sentence text
/// comes from `corpus` and is empty when the sentence is not in it.
pub fn apparent_table(findings: &[Finding], corpus: &ClaimCorpus) -> Report {
    let mut apparent: Vec<&ApparentFinding> = findings
        .iter()
        .filter_map(|f| match f {
            Finding::Apparent(a) => Some(a),
            _ => None,
        })
        .collect();
    let date_key = |a: &ApparentFinding| (a.claim.pub_year.is_none(), a.claim.pub_year, a.claim.pub_month);
    let mut rows: Vec<((bool, Option<i32>, Option<u8>), ReportRow)> = apparent
        .drain(..)
        .map(|a| {
            let row = ReportRow::new(
                &APPARENT_COLUMNS,
                alloc::vec![
                    format_pub_date(a.claim.pub_year, a.claim.pub_month),
                    claim_key(&a.claim.sentence_id, corpus),
                    corpus
                        .sentence(&a.claim.sentence_id)
                        .map(|s| s.text.clone())
                        .unwrap_or_default(),
                    triple_text(a),
                    a.unit_key.subject_cui.clone(),
                    a.unit_key.object_cui.clone(),
                    a.cue.clone(),
                ],
            );
            (date_key(a), row)
        })
        .collect();
    rows.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| a.1.get("claim_key").cmp(&b.1.get("claim_key")))
            .then_with(|| a.1.get("triple").cmp(&b.1.get("triple")))
            .then_with(|| a.1.get("cue").cmp(&b.1.get("cue")))
    });
    Report::new(
        ReportKind::Apparent,
        &APPARENT_COLUMNS,
        rows.into_iter().map(|(_, r)| r).collect(),
    )
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub predications: u64,
    pub sentences: u64,
    pub articles: u64,
    pub units: u64,
    pub hedged_claims_filtered: u64,
    pub apparent_findings: u64,
    /// Distinct claims behind the apparent findings.
    pub apparent_claims: u64,
    pub contradiction_candidates: u64,
    pub diversity_candidates: u64,
    pub pending: u64,
    pub accepted: u64,
    pub rejected: u64,
    pub reclassified: u64,
}

impl Summary {
    pub fn to_report(&self) -> Report {
        let metrics: [(&str, u64); 13] = [
            ("predications", self.predications),
            ("sentences", self.sentences),
            ("articles", self.articles),
            ("units", self.units),
            ("hedged_claims_filtered", self.hedged_claims_filtered),
            ("apparent_findings", self.apparent_findings),
            ("apparent_claims", self.apparent_claims),
            ("contradiction_candidates", self.contradiction_candidates),
            ("diversity_candidates", self.diversity_candidates),
            ("pending", self.pending),
            ("accepted", self.accepted),
            ("rejected", self.rejected),
            ("reclassified", self.reclassified),
        ];
        let rows = metrics
            .iter()
            .map(|(m, v)| ReportRow::new(&SUMMARY_COLUMNS, alloc::vec![m.to_string(), v.to_string()]))
            .collect();
        Report::new(ReportKind::Summary, &SUMMARY_COLUMNS, rows)
    }
}

/// Totals over whichever artifacts are at hand; missing ones count zero.
pub fn summary(
    corpus: Option<&ClaimCorpus>,
    units: Option<&UnitMap>,
    hedged_claims_filtered: u64,
    findings: &[Finding],
) -> Summary {
    let mut s = Summary {
        hedged_claims_filtered,
        ..Summary::default()
    };
    if let Some(c) = corpus {
        s.predications = c.predications().len() as u64;
        s.sentences = c.sentences().len() as u64;
        s.articles = c.articles().len() as u64;
    }
    if let Some(u) = units {
        s.units = u.len() as u64;
    }
    let mut apparent_claims = BTreeSet::new();
    for f in findings {
        match f {
            Finding::Contradiction(_) => s.contradiction_candidates += 1,
            Finding::Diversity(_) => s.diversity_candidates += 1,
            Finding::Apparent(a) => {
                s.apparent_findings += 1;
                apparent_claims.insert(a.claim.predication_id.as_str());
            }
        }
        match f.state() {
            CurationState::Pending => s.pending += 1,
            CurationState::Accepted => s.accepted += 1,
            CurationState::Rejected => s.rejected += 1,
            CurationState::Reclassified => s.reclassified += 1,
        }
    }
    s.apparent_claims = apparent_claims.len() as u64;
    s
}
