//! Contradiction, diversity and apparent-disagreement detection.
//!
//! All detectors work per directed concept pair. A pair whose polarized
//! predicates span both groups is a contradiction; a pair with two or more
//! polarized predicates all in one group is diverse. The two outcomes are
//! exclusive by construction. Apparent findings are claim-level: one per
//! claim and disagreement cue.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{Location, Predicate};
use crate::curation::{CurationState, CurationStatus};
use crate::digest::FieldHasher;
use crate::polarity::{Group, Polarity, PolarityTable};
use crate::store::{
    Claim, ClaimRef, HedgeExclusion, KnowledgeObject, KnowledgeUnit, NameTally, PairKey,
    UncertaintyStatus, UnitKey, UnitMap,
};

/// Which sentences may produce apparent findings.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueScope {
    #[default]
    AbstractOnly,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectOptions {
    /// A predicate needs at least this many claims to take part in a pair.
    pub min_claims: u32,
    pub cue_scope: CueScope,
    /// Leave claims from disagreement-cue sentences out of pair detection.
    pub drop_cue_claims: bool,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            min_claims: 1,
            cue_scope: CueScope::AbstractOnly,
            drop_cue_claims: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateSupport {
    pub predicate: Predicate,
    pub claim_count: u32,
    pub claims: Vec<ClaimRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContradictionFinding {
    pub id: String,
    pub content_hash: String,
    pub status: CurationStatus,
    pub pair: PairKey,
    pub subject_name: String,
    pub object_name: String,
    pub excitatory: Vec<PredicateSupport>,
    pub inhibitory: Vec<PredicateSupport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversityFinding {
    pub id: String,
    pub content_hash: String,
    pub status: CurationStatus,
    pub pair: PairKey,
    pub subject_name: String,
    pub object_name: String,
    pub group: Group,
    pub labels: Vec<PredicateSupport>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApparentFinding {
    pub id: String,
    pub content_hash: String,
    pub status: CurationStatus,
    pub unit_key: UnitKey,
    pub subject_name: String,
    pub object_name: String,
    pub claim: Claim,
    pub cue: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    Contradiction,
    Diversity,
    Apparent,
}

impl FindingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FindingKind::Contradiction => "contradiction",
            FindingKind::Diversity => "diversity",
            FindingKind::Apparent => "apparent",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Finding {
    Contradiction(ContradictionFinding),
    Diversity(DiversityFinding),
    Apparent(ApparentFinding),
}

impl Finding {
    pub fn id(&self) -> &str {
        match self {
            Finding::Contradiction(f) => &f.id,
            Finding::Diversity(f) => &f.id,
            Finding::Apparent(f) => &f.id,
        }
    }

    pub fn kind(&self) -> FindingKind {
        match self {
            Finding::Contradiction(_) => FindingKind::Contradiction,
            Finding::Diversity(_) => FindingKind::Diversity,
            Finding::Apparent(_) => FindingKind::Apparent,
        }
    }

    pub fn content_hash(&self) -> &str {
        match self {
            Finding::Contradiction(f) => &f.content_hash,
            Finding::Diversity(f) => &f.content_hash,
            Finding::Apparent(f) => &f.content_hash,
        }
    }

    pub fn status(&self) -> &CurationStatus {
        match self {
            Finding::Contradiction(f) => &f.status,
            Finding::Diversity(f) => &f.status,
            Finding::Apparent(f) => &f.status,
        }
    }

    pub fn status_mut(&mut self) -> &mut CurationStatus {
        match self {
            Finding::Contradiction(f) => &mut f.status,
            Finding::Diversity(f) => &mut f.status,
            Finding::Apparent(f) => &mut f.status,
        }
    }

    pub fn state(&self) -> CurationState {
        self.status().state
    }

    pub fn pair(&self) -> PairKey {
        match self {
            Finding::Contradiction(f) => f.pair.clone(),
            Finding::Diversity(f) => f.pair.clone(),
            Finding::Apparent(f) => f.unit_key.pair(),
        }
    }

    pub fn subject_name(&self) -> &str {
        match self {
            Finding::Contradiction(f) => &f.subject_name,
            Finding::Diversity(f) => &f.subject_name,
            Finding::Apparent(f) => &f.subject_name,
        }
    }

    pub fn object_name(&self) -> &str {
        match self {
            Finding::Contradiction(f) => &f.object_name,
            Finding::Diversity(f) => &f.object_name,
            Finding::Apparent(f) => &f.object_name,
        }
    }

    /// Every predicate with its evidence, in display order.
    pub fn supports(&self) -> Vec<&PredicateSupport> {
        match self {
            Finding::Contradiction(f) => f.excitatory.iter().chain(&f.inhibitory).collect(),
            Finding::Diversity(f) => f.labels.iter().collect(),
            Finding::Apparent(_) => Vec::new(),
        }
    }

    /// Predication ids of all evidence claims.
    pub fn evidence_ids(&self) -> Vec<&str> {
        match self {
            Finding::Apparent(f) => alloc::vec![f.claim.predication_id.as_str()],
            _ => self
                .supports()
                .into_iter()
                .flat_map(|s| s.claims.iter().map(|c| c.predication_id.as_str()))
                .collect(),
        }
    }

    /// Unit keys the finding draws on.
    pub fn unit_keys(&self) -> Vec<UnitKey> {
        match self {
            Finding::Apparent(f) => alloc::vec![f.unit_key.clone()],
            _ => {
                let pair = self.pair();
                self.supports()
                    .into_iter()
                    .map(|s| UnitKey::new(&pair.subject_cui, s.predicate.clone(), &pair.object_cui))
                    .collect()
            }
        }
    }
}

/// Canonical output order: contradictions by pair, then diversity by pair,
/// then apparent findings by unit, claim and cue.
pub fn finding_order(a: &Finding, b: &Finding) -> Ordering {
    a.kind().cmp(&b.kind()).then_with(|| match (a, b) {
        (Finding::Apparent(x), Finding::Apparent(y)) => x
            .unit_key
            .cmp(&y.unit_key)
            .then_with(|| crate::store::claim_order(&x.claim, &y.claim))
            .then_with(|| x.cue.cmp(&y.cue)),
        _ => a.pair().cmp(&b.pair()),
    })
}

pub fn sort_findings(findings: &mut [Finding]) {
    findings.sort_by(finding_order);
}

/// Result of evaluating one concept pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairOutcome {
    Contradiction {
        excitatory: Vec<PredicateSupport>,
        inhibitory: Vec<PredicateSupport>,
    },
    Diversity {
        group: Group,
        labels: Vec<PredicateSupport>,
    },
}

/// Applies the pair rules to the units of one pair. Only claims accepted by
/// `keep` count. Neutral predicates and predicates below `min_claims` are
/// ignored.
pub fn evaluate_pair<F>(
    units: &[&KnowledgeUnit],
    table: &PolarityTable,
    opts: &DetectOptions,
    keep: F,
) -> Option<PairOutcome>
where
    F: Fn(&Claim) -> bool,
{
    let mut excitatory = Vec::new();
    let mut inhibitory = Vec::new();
    let min = opts.min_claims.max(1) as usize;
    for unit in units {
        let side = match table.polarity(&unit.key.predicate) {
            Polarity::Excitatory => &mut excitatory,
            Polarity::Inhibitory => &mut inhibitory,
            Polarity::Neutral => continue,
        };
        let claims: Vec<ClaimRef> = unit
            .claims
            .iter()
            .filter(|c| !(opts.drop_cue_claims && c.has_cue()))
            .filter(|c| keep(c))
            .map(Claim::to_ref)
            .collect();
        if claims.len() < min {
            continue;
        }
        side.push(PredicateSupport {
            predicate: unit.key.predicate.clone(),
            claim_count: claims.len() as u32,
            claims,
        });
    }
    excitatory.sort_by(|a, b| a.predicate.cmp(&b.predicate));
    inhibitory.sort_by(|a, b| a.predicate.cmp(&b.predicate));

    match (excitatory.len(), inhibitory.len()) {
        (e, i) if e > 0 && i > 0 => Some(PairOutcome::Contradiction {
            excitatory,
            inhibitory,
        }),
        (e, _) if e >= 2 => Some(PairOutcome::Diversity {
            group: Group::Excitatory,
            labels: excitatory,
        }),
        (_, i) if i >= 2 => Some(PairOutcome::Diversity {
            group: Group::Inhibitory,
            labels: inhibitory,
        }),
        _ => None,
    }
}

/// Units grouped by directed concept pair.
pub fn units_by_pair(units: &UnitMap) -> BTreeMap<PairKey, Vec<&KnowledgeUnit>> {
    let mut out: BTreeMap<PairKey, Vec<&KnowledgeUnit>> = BTreeMap::new();
    for unit in units.values() {
        match out.get_mut(&PairKey {
            subject_cui: unit.key.subject_cui.clone(),
            object_cui: unit.key.object_cui.clone(),
        }) {
            Some(v) => v.push(unit),
            None => {
                out.insert(unit.key.pair(), alloc::vec![unit]);
            }
        }
    }
    out
}

/// Short id shared by the contradiction and diversity findings of a pair,
/// so a decision stays attached when curation reclassifies the pair.
pub fn pair_finding_id(pair: &PairKey) -> String {
    let mut h = FieldHasher::new("knowcert/pair-finding/v1");
    h.field(&pair.subject_cui).field(&pair.object_cui);
    let mut id = String::from("P");
    id.push_str(&h.finish_hex()[..16]);
    id
}

pub fn apparent_finding_id(key: &UnitKey, sentence_id: &str, cue: &str) -> String {
    let mut h = FieldHasher::new("knowcert/apparent-finding/v1");
    h.field(&key.subject_cui)
        .field(&key.predicate.raw())
        .field(&key.object_cui)
        .field(sentence_id)
        .field(cue);
    let mut id = String::from("A");
    id.push_str(&h.finish_hex()[..16]);
    id
}

fn hash_supports(h: &mut FieldHasher, side: &str, supports: &[PredicateSupport]) {
    h.field(side).number(supports.len() as u64);
    for s in supports {
        h.field(&s.predicate.raw()).number(s.claims.len() as u64);
        for c in &s.claims {
            h.field(&c.predication_id).field(&c.sentence_id);
        }
    }
}

/// Pair names come from the spelling tallies of all the pair's units.
fn pair_names(units: &[&KnowledgeUnit]) -> (String, String) {
    let mut subjects = NameTally::new();
    let mut objects = NameTally::new();
    for u in units {
        subjects.merge(&u.subject_names);
        objects.merge(&u.object_names);
    }
    let fallback = units.first().map(|u| &u.key);
    let subject = subjects
        .top()
        .map(String::from)
        .or_else(|| fallback.map(|k| k.subject_cui.clone()))
        .unwrap_or_default();
    let object = objects
        .top()
        .map(String::from)
        .or_else(|| fallback.map(|k| k.object_cui.clone()))
        .unwrap_or_default();
    (subject, object)
}

/// Builds the finding for a pair outcome. The status starts pending.
pub fn pair_finding(pair: &PairKey, units: &[&KnowledgeUnit], outcome: PairOutcome) -> Finding {
    let id = pair_finding_id(pair);
    let (subject_name, object_name) = pair_names(units);
    let mut h = FieldHasher::new("knowcert/finding-content/v1");
    h.field(&pair.subject_cui).field(&pair.object_cui);
    match outcome {
        PairOutcome::Contradiction {
            excitatory,
            inhibitory,
        } => {
            h.field("contradiction");
            hash_supports(&mut h, "E", &excitatory);
            hash_supports(&mut h, "I", &inhibitory);
            Finding::Contradiction(ContradictionFinding {
                id,
                content_hash: h.finish_hex(),
                status: CurationStatus::default(),
                pair: pair.clone(),
                subject_name,
                object_name,
                excitatory,
                inhibitory,
            })
        }
        PairOutcome::Diversity { group, labels } => {
            h.field("diversity");
            hash_supports(&mut h, group.code(), &labels);
            Finding::Diversity(DiversityFinding {
                id,
                content_hash: h.finish_hex(),
                status: CurationStatus::default(),
                pair: pair.clone(),
                subject_name,
                object_name,
                group,
                labels,
            })
        }
    }
}

fn detect_pairs(units: &UnitMap, table: &PolarityTable, opts: &DetectOptions) -> Vec<Finding> {
    detect_pairs_excluding(units, None, table, opts)
}

fn unit_survives(unit: &KnowledgeUnit, exclusion: Option<HedgeExclusion>) -> bool {
    exclusion.is_none() || unit.claims.iter().any(|c| !c.hedged)
}

fn claim_survives(claim: &Claim, exclusion: Option<HedgeExclusion>) -> bool {
    exclusion != Some(HedgeExclusion::DropClaims) || !claim.hedged
}

fn detect_pairs_excluding(
    units: &UnitMap,
    exclusion: Option<HedgeExclusion>,
    table: &PolarityTable,
    opts: &DetectOptions,
) -> Vec<Finding> {
    // Sorting by pair keeps each pair's units adjacent without a map of
    // owned pair keys.
    let mut kept: Vec<&KnowledgeUnit> = units.values().filter(|u| unit_survives(u, exclusion)).collect();
    kept.sort_by(|a, b| {
        (&a.key.subject_cui, &a.key.object_cui, &a.key.predicate).cmp(&(
            &b.key.subject_cui,
            &b.key.object_cui,
            &b.key.predicate,
        ))
    });
    kept.chunk_by(|a, b| a.key.subject_cui == b.key.subject_cui && a.key.object_cui == b.key.object_cui)
        .filter_map(|group| {
            evaluate_pair(group, table, opts, |c| claim_survives(c, exclusion))
                .map(|o| pair_finding(&group[0].key.pair(), group, o))
        })
        .collect()
}

pub fn detect_contradictions(
    units: &UnitMap,
    table: &PolarityTable,
    opts: &DetectOptions,
) -> Vec<ContradictionFinding> {
    detect_pairs(units, table, opts)
        .into_iter()
        .filter_map(|f| match f {
            Finding::Contradiction(c) => Some(c),
            _ => None,
        })
        .collect()
}

pub fn detect_diversity(units: &UnitMap, table: &PolarityTable, opts: &DetectOptions) -> Vec<DiversityFinding> {
    detect_pairs(units, table, opts)
        .into_iter()
        .filter_map(|f| match f {
            Finding::Diversity(d) => Some(d),
            _ => None,
        })
        .collect()
}

pub fn apparent_for_claim(unit: &KnowledgeUnit, claim: &Claim, cue: &str) -> ApparentFinding {
    let mut h = FieldHasher::new("knowcert/finding-content/v1");
    h.field("apparent")
        .field(&unit.key.subject_cui)
        .field(&unit.key.predicate.raw())
        .field(&unit.key.object_cui)
        .field(&claim.predication_id)
        .field(&claim.sentence_id)
        .field(cue);
    ApparentFinding {
        id: apparent_finding_id(&unit.key, &claim.sentence_id, cue),
        content_hash: h.finish_hex(),
        status: CurationStatus::default(),
        unit_key: unit.key.clone(),
        subject_name: unit.subject_name().into(),
        object_name: unit.object_name().into(),
        claim: claim.clone(),
        cue: cue.into(),
    }
}

/// One finding per (claim, cue) for claims whose sentence carries a
/// disagreement cue.
pub fn detect_apparent(units: &UnitMap, opts: &DetectOptions) -> Vec<ApparentFinding> {
    detect_apparent_excluding(units, None, opts)
}

fn detect_apparent_excluding(
    units: &UnitMap,
    exclusion: Option<HedgeExclusion>,
    opts: &DetectOptions,
) -> Vec<ApparentFinding> {
    let mut out = Vec::new();
    for unit in units.values().filter(|u| unit_survives(u, exclusion)) {
        for claim in unit.claims.iter().filter(|c| claim_survives(c, exclusion)) {
            if opts.cue_scope == CueScope::AbstractOnly && claim.location != Location::Abstract {
                continue;
            }
            for cue in &claim.disagreement_cues {
                out.push(apparent_for_claim(unit, claim, cue));
            }
        }
    }
    out
}

/// All findings in canonical order.
pub fn detect_all(units: &UnitMap, table: &PolarityTable, opts: &DetectOptions) -> Vec<Finding> {
    detect_all_excluding(units, None, table, opts)
}

/// Same as `detect_all(&exclude_hedged(units, mode), ..)` without building
/// the reduced unit map.
pub fn detect_all_excluding(
    units: &UnitMap,
    exclusion: Option<HedgeExclusion>,
    table: &PolarityTable,
    opts: &DetectOptions,
) -> Vec<Finding> {
    let mut out = detect_pairs_excluding(units, exclusion, table, opts);
    out.extend(detect_apparent_excluding(units, exclusion, opts).into_iter().map(Finding::Apparent));
    sort_findings(&mut out);
    out
}

/// Adds detector statuses to the objects the findings draw on.
pub fn mark_statuses(objects: &mut BTreeMap<UnitKey, KnowledgeObject>, findings: &[Finding]) {
    for f in findings {
        let status = match f.kind() {
            FindingKind::Diversity => UncertaintyStatus::Diversity,
            _ => UncertaintyStatus::ControversyContradiction,
        };
        for key in f.unit_keys() {
            if let Some(obj) = objects.get_mut(&key) {
                obj.statuses.insert(status);
            }
        }
    }
}
