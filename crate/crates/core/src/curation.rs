//! Curator decisions and their replay over detector output.
//!
//! Decisions form an append-only log. The effective decision for a finding
//! is the latest by timestamp, ties going to the later log entry. Claim-level
//! error marks accumulate over the whole history: once a predication is
//! marked as an extraction error it stays out of every finding.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::detect::{evaluate_pair, pair_finding, units_by_pair, sort_findings, DetectOptions, Finding};
use crate::digest::FieldHasher;
use crate::polarity::PolarityTable;
use crate::store::UnitMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    /// A concept was mis-recognised.
    NerError,
    /// The predicate does not reflect the sentence.
    SreError,
    OutOfScope,
}

impl Verdict {
    pub fn is_error(self) -> bool {
        matches!(self, Verdict::NerError | Verdict::SreError)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurationState {
    #[default]
    Pending,
    Accepted,
    Rejected,
    Reclassified,
}

impl CurationState {
    pub fn as_str(self) -> &'static str {
        match self {
            CurationState::Pending => "pending",
            CurationState::Accepted => "accepted",
            CurationState::Rejected => "rejected",
            CurationState::Reclassified => "reclassified",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationStatus {
    pub state: CurationState,
    /// Ids of every decision recorded against the finding, in log order.
    #[serde(default)]
    pub applied_decisions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationDecision {
    pub finding_id: String,
    pub verdict: Verdict,
    /// Predication ids of the claims the verdict applies to. Empty means the
    /// whole finding. Only meaningful for the two error verdicts.
    #[serde(default)]
    pub affected_claims: Vec<String>,
    #[serde(default)]
    pub category_label: Option<String>,
    pub curator: String,
    pub timestamp: DateTime<Utc>,
    #[serde(default)]
    pub note: Option<String>,
    /// Content hash of the finding the curator looked at.
    pub content_hash: String,
}

impl CurationDecision {
    pub fn invalidates_whole_finding(&self) -> bool {
        self.verdict.is_error() && self.affected_claims.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoggedDecision {
    pub seq: u64,
    pub decision_id: String,
    pub decision: CurationDecision,
}

impl LoggedDecision {
    pub fn new(seq: u64, decision: CurationDecision) -> Self {
        let mut h = FieldHasher::new("knowcert/decision/v1");
        h.number(seq)
            .field(&decision.finding_id)
            .field(&decision.curator)
            .number(decision.timestamp.timestamp() as u64)
            .number(u64::from(decision.timestamp.timestamp_subsec_nanos()));
        let mut decision_id = String::from("D");
        decision_id.push_str(&h.finish_hex()[..16]);
        LoggedDecision {
            seq,
            decision_id,
            decision,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecisionError {
    #[error("unknown finding {0}")]
    UnknownFinding(String),
    #[error("finding {finding_id} has changed (current content hash {current})")]
    HashMismatch { finding_id: String, current: String },
    #[error("curator must not be empty")]
    EmptyCurator,
    #[error("affected_claims is only allowed with ner_error or sre_error")]
    ClaimsNotAllowed,
    #[error("claim {0} is not part of the finding's evidence")]
    UnknownClaim(String),
}

/// Checks a decision against the versions of its finding a curator could
/// have seen: the detector output and the curated view.
pub fn validate_decision(decision: &CurationDecision, versions: &[&Finding]) -> Result<(), DecisionError> {
    if decision.curator.trim().is_empty() {
        return Err(DecisionError::EmptyCurator);
    }
    let versions: Vec<&Finding> = versions
        .iter()
        .copied()
        .filter(|f| f.id() == decision.finding_id)
        .collect();
    let Some(latest) = versions.last() else {
        return Err(DecisionError::UnknownFinding(decision.finding_id.clone()));
    };
    if !versions.iter().any(|f| f.content_hash() == decision.content_hash) {
        return Err(DecisionError::HashMismatch {
            finding_id: decision.finding_id.clone(),
            current: latest.content_hash().into(),
        });
    }
    if !decision.affected_claims.is_empty() && !decision.verdict.is_error() {
        return Err(DecisionError::ClaimsNotAllowed);
    }
    for claim in &decision.affected_claims {
        if !versions.iter().any(|f| f.evidence_ids().contains(&claim.as_str())) {
            return Err(DecisionError::UnknownClaim(claim.clone()));
        }
    }
    Ok(())
}

/// Decisions indexed by finding.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DecisionHistory {
    by_finding: BTreeMap<String, Vec<LoggedDecision>>,
    invalid_claims: BTreeSet<String>,
    len: usize,
}

impl DecisionHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_log(log: &[LoggedDecision]) -> Self {
        let mut h = Self::new();
        for d in log {
            h.push(d.clone());
        }
        h
    }

    pub fn push(&mut self, d: LoggedDecision) {
        if d.decision.verdict.is_error() {
            self.invalid_claims.extend(d.decision.affected_claims.iter().cloned());
        }
        self.len += 1;
        self.by_finding.entry(d.decision.finding_id.clone()).or_default().push(d);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn history(&self, finding_id: &str) -> &[LoggedDecision] {
        self.by_finding.get(finding_id).map_or(&[], Vec::as_slice)
    }

    /// Latest decision by timestamp; equal timestamps go to the later entry.
    pub fn effective(&self, finding_id: &str) -> Option<&LoggedDecision> {
        self.history(finding_id)
            .iter()
            .max_by(|a, b| (a.decision.timestamp, a.seq).cmp(&(b.decision.timestamp, b.seq)))
    }

    /// Predication ids marked as extraction errors by any decision.
    pub fn invalidated_claims(&self) -> &BTreeSet<String> {
        &self.invalid_claims
    }

    /// Label of the latest decision that carries one.
    pub fn category_label(&self, finding_id: &str) -> Option<&str> {
        self.history(finding_id)
            .iter()
            .filter(|d| d.decision.category_label.is_some())
            .max_by(|a, b| (a.decision.timestamp, a.seq).cmp(&(b.decision.timestamp, b.seq)))
            .and_then(|d| d.decision.category_label.as_deref())
    }

    fn status_for(&self, finding_id: &str, state: CurationState) -> CurationStatus {
        CurationStatus {
            state,
            applied_decisions: self
                .history(finding_id)
                .iter()
                .map(|d| d.decision_id.clone())
                .collect(),
            category_label: self.category_label(finding_id).map(String::from),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    /// A whole-finding error verdict is in effect.
    Invalidated,
    /// The finding's evidence no longer satisfies the detection rule.
    NoLongerDetected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removed {
    /// The finding as last seen, with state rejected.
    pub finding: Finding,
    pub reason: RemovalReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Curation {
    pub findings: Vec<Finding>,
    pub removed: Vec<Removed>,
}

/// Replays `log` over `findings`.
///
/// Whole-finding error verdicts remove the finding. Claims marked as errors
/// are dropped from the units, and pair findings touching them are evaluated
/// again; a pair whose kind changes is reclassified. Claims must be the
/// units the findings were detected from, with the same options.
pub fn apply_decisions(
    findings: &[Finding],
    units: &UnitMap,
    log: &[LoggedDecision],
    table: &PolarityTable,
    opts: &DetectOptions,
) -> Curation {
    let history = DecisionHistory::from_log(log);
    apply_history(findings, units, &history, table, opts)
}

pub fn apply_history(
    findings: &[Finding],
    units: &UnitMap,
    history: &DecisionHistory,
    table: &PolarityTable,
    opts: &DetectOptions,
) -> Curation {
    let invalid = history.invalidated_claims();
    let by_pair = if invalid.is_empty() {
        BTreeMap::new()
    } else {
        units_by_pair(units)
    };
    let keep = |c: &crate::store::Claim| !invalid.contains(&c.predication_id);

    let mut out = Curation::default();
    for f in findings {
        let effective = history.effective(f.id()).map(|d| &d.decision);
        let reject = |f: &Finding, reason| {
            let mut f = f.clone();
            *f.status_mut() = history.status_for(f.id(), CurationState::Rejected);
            Removed { finding: f, reason }
        };
        if effective.is_some_and(CurationDecision::invalidates_whole_finding) {
            out.removed.push(reject(f, RemovalReason::Invalidated));
            continue;
        }

        let current = match f {
            Finding::Apparent(a) => {
                if invalid.contains(&a.claim.predication_id) {
                    None
                } else {
                    Some(f.clone())
                }
            }
            _ => {
                let pair = f.pair();
                match by_pair.get(&pair) {
                    Some(group) if group.iter().any(|u| u.claims.iter().any(|c| !keep(c))) => {
                        evaluate_pair(group, table, opts, keep).map(|o| pair_finding(&pair, group, o))
                    }
                    _ => Some(f.clone()),
                }
            }
        };
        let Some(mut current) = current else {
            out.removed.push(reject(f, RemovalReason::NoLongerDetected));
            continue;
        };

        let reclassified = current.kind() != f.kind() || f.state() == CurationState::Reclassified;
        let state = match effective.map(|d| d.verdict) {
            Some(Verdict::OutOfScope) => CurationState::Rejected,
            _ if reclassified => CurationState::Reclassified,
            None => CurationState::Pending,
            Some(_) => CurationState::Accepted,
        };
        *current.status_mut() = history.status_for(f.id(), state);
        out.findings.push(current);
    }
    sort_findings(&mut out.findings);
    out
}
