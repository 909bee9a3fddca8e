//! Random decision logs and a reference for what replaying them must give.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{TimeZone, Utc};
use knowcert_core::{CurationDecision, Finding, LoggedDecision, Verdict};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{observed, reference, Expected, RawCorpus};

/// `n` decisions over `findings` with shuffled timestamps, so log order and
/// time order disagree. Error verdicts name claims about half the time.
pub fn random_decisions(rng: &mut impl Rng, findings: &[Finding], n: usize) -> Vec<CurationDecision> {
    let mut out = Vec::with_capacity(n);
    if findings.is_empty() {
        return out;
    }
    for _ in 0..n {
        let f = findings.choose(rng).unwrap();
        let verdict = *[Verdict::Valid, Verdict::NerError, Verdict::SreError, Verdict::OutOfScope]
            .choose(rng)
            .unwrap();
        let affected_claims = if verdict.is_error() && rng.gen_bool(0.6) {
            let ids = f.evidence_ids();
            let k = rng.gen_range(1..=ids.len().min(2));
            ids.choose_multiple(rng, k).map(|s| s.to_string()).collect()
        } else {
            Vec::new()
        };
        out.push(CurationDecision {
            finding_id: f.id().to_string(),
            verdict,
            affected_claims,
            category_label: rng.gen_bool(0.3).then(|| "Population".to_string()),
            curator: ["ann", "bo", "cy"].choose(rng).unwrap().to_string(),
            timestamp: Utc.timestamp_opt(1_700_000_000 + rng.gen_range(0..200), 0).unwrap(),
            note: None,
            content_hash: f.content_hash().to_string(),
        });
    }
    out
}

/// Identity of a finding in the reference shape.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Key {
    Pair(String, String),
    Apparent(String, String, String, String, String),
}

pub fn key_of(f: &Finding) -> Key {
    match f {
        Finding::Apparent(a) => Key::Apparent(
            a.unit_key.subject_cui.clone(),
            a.unit_key.predicate.raw(),
            a.unit_key.object_cui.clone(),
            a.claim.sentence_id.clone(),
            a.cue.clone(),
        ),
        _ => {
            let p = f.pair();
            Key::Pair(p.subject_cui, p.object_cui)
        }
    }
}

/// Replaying `log` over detector output must equal running the reference
/// detectors without the claims marked as errors, minus the findings whose
/// latest decision is a whole-finding error verdict.
pub fn reference_curation(raw: &RawCorpus, base: &[Finding], log: &[LoggedDecision]) -> Expected {
    let mut invalid = BTreeSet::new();
    let mut latest: BTreeMap<&str, &LoggedDecision> = BTreeMap::new();
    for d in log {
        if matches!(d.decision.verdict, Verdict::NerError | Verdict::SreError) {
            invalid.extend(d.decision.affected_claims.iter().cloned());
        }
        let slot = latest.entry(d.decision.finding_id.as_str()).or_insert(d);
        if (d.decision.timestamp, d.seq) > (slot.decision.timestamp, slot.seq) {
            *slot = d;
        }
    }
    let dropped: BTreeSet<Key> = base
        .iter()
        .filter(|f| {
            latest.get(f.id()).is_some_and(|d| {
                matches!(d.decision.verdict, Verdict::NerError | Verdict::SreError)
                    && d.decision.affected_claims.is_empty()
            })
        })
        .map(key_of)
        .collect();

    let mut e = reference(raw, &invalid);
    e.contradictions.retain(|(s, o), _| !dropped.contains(&Key::Pair(s.clone(), o.clone())));
    e.diversity.retain(|(s, o), _| !dropped.contains(&Key::Pair(s.clone(), o.clone())));
    e.apparent
        .retain(|(s, p, o, sid, cue, _)| !dropped.contains(&Key::Apparent(s.clone(), p.clone(), o.clone(), sid.clone(), cue.clone())));
    e
}

/// Curated findings (rejected-as-removed ones excluded) in reference shape.
pub fn observed_curation(curated: &[Finding]) -> Expected {
    observed(curated)
}
