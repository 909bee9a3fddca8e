//! Knowledge units and objects.
//!
//! A unit aggregates every claim that shares one `(subject, predicate,
//! object)` key. A claim is one distinct sentence asserting that triple; the
//! same sentence yielding the same triple twice counts once. An object wraps a
//! unit with a citable id and its uncertainty status.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimCorpus, Location, Predicate};
use crate::cues::TagMap;
use crate::digest::FieldHasher;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UnitKey {
    pub subject_cui: String,
    pub predicate: Predicate,
    pub object_cui: String,
}

impl UnitKey {
    pub fn new(subject_cui: &str, predicate: Predicate, object_cui: &str) -> Self {
        UnitKey {
            subject_cui: subject_cui.into(),
            predicate,
            object_cui: object_cui.into(),
        }
    }

    pub fn pair(&self) -> PairKey {
        PairKey {
            subject_cui: self.subject_cui.clone(),
            object_cui: self.object_cui.clone(),
        }
    }
}

/// Directed concept pair. `(S, O)` and `(O, S)` are different pairs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairKey {
    pub subject_cui: String,
    pub object_cui: String,
}

impl PairKey {
    pub fn new(subject_cui: &str, object_cui: &str) -> Self {
        PairKey {
            subject_cui: subject_cui.into(),
            object_cui: object_cui.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    /// Smallest predication id among the collapsed duplicates.
    pub predication_id: String,
    pub sentence_id: String,
    pub article_id: String,
    pub location: Location,
    pub pub_year: Option<i32>,
    pub pub_month: Option<u8>,
    pub hedged: bool,
    /// Distinct disagreement cue terms found in the sentence, sorted.
    pub disagreement_cues: Vec<String>,
    /// Other predication ids that produced the same claim.
    #[serde(default)]
    pub merged_ids: Vec<String>,
}

impl Claim {
    pub fn disagreement_cue(&self) -> Option<&str> {
        self.disagreement_cues.first().map(String::as_str)
    }

    pub fn has_cue(&self) -> bool {
        !self.disagreement_cues.is_empty()
    }

    pub fn is_uncertain(&self, scoring: ScoreCues) -> bool {
        match scoring {
            ScoreCues::Hedge => self.hedged,
            ScoreCues::All => self.hedged || self.has_cue(),
        }
    }

    pub fn to_ref(&self) -> ClaimRef {
        ClaimRef {
            predication_id: self.predication_id.clone(),
            sentence_id: self.sentence_id.clone(),
            article_id: self.article_id.clone(),
        }
    }

    /// Whether `predication_id` names this claim or one of its duplicates.
    pub fn covers(&self, predication_id: &str) -> bool {
        self.predication_id == predication_id || self.merged_ids.iter().any(|m| m == predication_id)
    }
}

/// Chronological order; undated claims go last.
pub fn claim_order(a: &Claim, b: &Claim) -> Ordering {
    let key = |c: &Claim| (c.pub_year.is_none(), c.pub_year, c.pub_month);
    key(a)
        .cmp(&key(b))
        .then_with(|| a.article_id.cmp(&b.article_id))
        .then_with(|| a.sentence_id.cmp(&b.sentence_id))
        .then_with(|| a.predication_id.cmp(&b.predication_id))
}

/// Pointer from a finding's evidence back to one claim.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ClaimRef {
    pub predication_id: String,
    pub sentence_id: String,
    pub article_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeUnit {
    pub key: UnitKey,
    /// How often each spelling of the subject appeared among the predications.
    pub subject_names: NameTally,
    pub object_names: NameTally,
    pub claims: Vec<Claim>,
}

impl KnowledgeUnit {
    pub fn subject_name(&self) -> &str {
        self.subject_names.top().unwrap_or(&self.key.subject_cui)
    }

    pub fn object_name(&self) -> &str {
        self.object_names.top().unwrap_or(&self.key.object_cui)
    }

    pub fn claim_count(&self) -> usize {
        self.claims.len()
    }
}

/// Spelling counts, sorted by spelling. Almost every unit sees a single
/// spelling, so a vector beats a map here. Serializes as a JSON-style map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameTally(Vec<(String, u32)>);

impl NameTally {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, n: u32) {
        match self.0.binary_search_by(|(k, _)| k.as_str().cmp(name)) {
            Ok(i) => self.0[i].1 += n,
            Err(i) => self.0.insert(i, (String::from(name), n)),
        }
    }

    pub fn merge(&mut self, other: &NameTally) {
        for (name, n) in &other.0 {
            self.add(name, *n);
        }
    }

    pub fn get(&self, name: &str) -> Option<u32> {
        self.0
            .binary_search_by(|(k, _)| k.as_str().cmp(name))
            .ok()
            .map(|i| self.0[i].1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(k, n)| (k.as_str(), *n))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most frequent spelling; ties go to the lexicographically smallest.
    pub fn top(&self) -> Option<&str> {
        let mut best: Option<(&str, u32)> = None;
        for (name, n) in self.iter() {
            if best.map_or(true, |(_, b)| n > b) {
                best = Some((name, n));
            }
        }
        best.map(|(s, _)| s)
    }
}

impl<const N: usize> From<[(String, u32); N]> for NameTally {
    fn from(items: [(String, u32); N]) -> Self {
        let mut t = NameTally::new();
        for (k, n) in items {
            t.add(&k, n);
        }
        t
    }
}

impl Serialize for NameTally {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.collect_map(self.0.iter().map(|(k, n)| (k, n)))
    }
}

impl<'de> Deserialize<'de> for NameTally {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let m = BTreeMap::<String, u32>::deserialize(de)?;
        Ok(NameTally(m.into_iter().collect()))
    }
}

pub type UnitMap = BTreeMap<UnitKey, KnowledgeUnit>;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UnitBuild {
    pub units: UnitMap,
    /// Predications folded into an existing claim of the same sentence.
    pub duplicates_collapsed: usize,
}

/// Groups the corpus predications into units. Claims get their hedging and
/// disagreement flags from `tags`; a sentence missing from `tags` is treated
/// as cue-free.
pub fn build_units(corpus: &ClaimCorpus, tags: &TagMap) -> UnitBuild {
    let preds = corpus.predications();
    // Sorting by (key, sentence, id) puts each unit's rows together and each
    // claim's duplicates next to each other, smallest id first.
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        let (pa, pb) = (&preds[a], &preds[b]);
        pa.subject
            .cui
            .cmp(&pb.subject.cui)
            .then_with(|| pa.predicate.cmp(&pb.predicate))
            .then_with(|| pa.object.cui.cmp(&pb.object.cui))
            .then_with(|| pa.sentence_id.cmp(&pb.sentence_id))
            .then_with(|| pa.predication_id.cmp(&pb.predication_id))
    });

    let same_unit = |a: usize, b: usize| {
        let (pa, pb) = (&preds[a], &preds[b]);
        pa.subject.cui == pb.subject.cui && pa.predicate == pb.predicate && pa.object.cui == pb.object.cui
    };

    // Collected in key order so the map is bulk-built with full nodes.
    let mut units: Vec<(UnitKey, KnowledgeUnit)> = Vec::new();
    let mut duplicates_collapsed = 0;
    let mut i = 0;
    while i < order.len() {
        let first = &preds[order[i]];
        let mut j = i + 1;
        while j < order.len() && same_unit(order[i], order[j]) {
            j += 1;
        }
        let key = UnitKey {
            subject_cui: first.subject.cui.clone(),
            predicate: first.predicate.clone(),
            object_cui: first.object.cui.clone(),
        };
        let mut subject_names = NameTally::new();
        let mut object_names = NameTally::new();
        let mut claims: Vec<Claim> = Vec::new();
        for &ix in &order[i..j] {
            let p = &preds[ix];
            subject_names.add(&p.subject.preferred_name, 1);
            object_names.add(&p.object.preferred_name, 1);
            if let Some(last) = claims.last_mut() {
                if last.sentence_id == p.sentence_id {
                    duplicates_collapsed += 1;
                    last.merged_ids.push(p.predication_id.clone());
                    continue;
                }
            }
            let article = corpus.article(&p.article_id);
            let sentence = corpus.sentence(&p.sentence_id);
            let tag = tags.get(&p.sentence_id);
            claims.push(Claim {
                predication_id: p.predication_id.clone(),
                sentence_id: p.sentence_id.clone(),
                article_id: p.article_id.clone(),
                location: sentence.map_or(Location::Abstract, |s| s.location),
                pub_year: article.and_then(|a| a.pub_year),
                pub_month: article.and_then(|a| a.pub_month),
                hedged: tag.is_some_and(|t| t.is_hedged()),
                disagreement_cues: tag
                    .map(|t| t.disagreement_terms().into_iter().map(String::from).collect())
                    .unwrap_or_default(),
                merged_ids: Vec::new(),
            });
        }
        claims.sort_by(claim_order);
        claims.shrink_to_fit();
        units.push((
            key.clone(),
            KnowledgeUnit {
                key,
                subject_names,
                object_names,
                claims,
            },
        ));
        i = j;
    }

    UnitBuild {
        units: units.into_iter().collect(),
        duplicates_collapsed,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HedgeExclusion {
    /// Remove every hedged claim; units left without claims disappear.
    #[default]
    DropClaims,
    /// Remove only units whose claims are all hedged; mixed units stay whole.
    DropUnitsIfAllHedged,
}

/// Which claims count as uncertain in the uncertainty score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreCues {
    Hedge,
    #[default]
    All,
}

pub fn exclude_hedged(units: &UnitMap, mode: HedgeExclusion) -> UnitMap {
    let mut out = UnitMap::new();
    for (key, unit) in units {
        match mode {
            HedgeExclusion::DropClaims => {
                let claims: Vec<Claim> = unit.claims.iter().filter(|c| !c.hedged).cloned().collect();
                if !claims.is_empty() {
                    out.insert(
                        key.clone(),
                        KnowledgeUnit {
                            claims,
                            ..unit.clone()
                        },
                    );
                }
            }
            HedgeExclusion::DropUnitsIfAllHedged => {
                if unit.claims.iter().any(|c| !c.hedged) {
                    out.insert(key.clone(), unit.clone());
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncertaintyStatus {
    Hedging,
    Diversity,
    ControversyContradiction,
}

/// `uncertain_claims / claim_count`, kept as the exact pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Uncertainty {
    pub uncertain_claims: u32,
    pub claim_count: u32,
}

impl Uncertainty {
    pub fn score(&self) -> f64 {
        if self.claim_count == 0 {
            0.0
        } else {
            f64::from(self.uncertain_claims) / f64::from(self.claim_count)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeObject {
    pub id: String,
    pub corpus_version: String,
    pub unit: KnowledgeUnit,
    pub statuses: BTreeSet<UncertaintyStatus>,
    pub uncertainty: Uncertainty,
}

/// Citable id: hex SHA-256 over the unit key and the corpus version.
pub fn object_id(key: &UnitKey, corpus_version: &str) -> String {
    let mut h = FieldHasher::new("knowcert/object/v1");
    h.field(&key.subject_cui)
        .field(&key.predicate.raw())
        .field(&key.object_cui)
        .field(corpus_version);
    h.finish_hex()
}

pub fn make_object(unit: &KnowledgeUnit, corpus_version: &str, scoring: ScoreCues) -> KnowledgeObject {
    let mut statuses = BTreeSet::new();
    if unit.claims.iter().any(|c| c.hedged) {
        statuses.insert(UncertaintyStatus::Hedging);
    }
    let uncertain = unit.claims.iter().filter(|c| c.is_uncertain(scoring)).count();
    KnowledgeObject {
        id: object_id(&unit.key, corpus_version),
        corpus_version: corpus_version.into(),
        unit: unit.clone(),
        statuses,
        uncertainty: Uncertainty {
            uncertain_claims: uncertain as u32,
            claim_count: unit.claims.len() as u32,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineRow {
    /// `None` is the bucket for claims without a publication year.
    pub year: Option<i32>,
    pub claim_count: u32,
    pub uncertain_claim_count: u32,
}

/// Per-year claim counts, ascending, with undated claims in a final row.
pub fn timeline(unit: &KnowledgeUnit, scoring: ScoreCues) -> Vec<TimelineRow> {
    let mut dated: BTreeMap<i32, (u32, u32)> = BTreeMap::new();
    let mut undated = (0u32, 0u32);
    for c in &unit.claims {
        let slot = match c.pub_year {
            Some(y) => dated.entry(y).or_default(),
            None => &mut undated,
        };
        slot.0 += 1;
        if c.is_uncertain(scoring) {
            slot.1 += 1;
        }
    }
    let mut rows: Vec<TimelineRow> = dated
        .into_iter()
        .map(|(y, (n, u))| TimelineRow {
            year: Some(y),
            claim_count: n,
            uncertain_claim_count: u,
        })
        .collect();
    if undated.0 > 0 {
        rows.push(TimelineRow {
            year: None,
            claim_count: undated.0,
            uncertain_claim_count: undated.1,
        });
    }
    rows
}
