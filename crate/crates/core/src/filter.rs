//! Evidence-level and semantic-type filtering of a claim corpus.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::corpus::{ArticleMetadata, ClaimCorpus, PredicationRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolicyError {
    #[error("evidence policy needs at least one publication type or MeSH topic")]
    EmptyEvidencePolicy,
    #[error("concept policy needs non-empty {0} semantic types")]
    EmptySemanticTypes(&'static str),
}

/// How the publication-type and MeSH criteria combine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// An article passes if any publication type or any MeSH heading matches.
    #[default]
    Any,
}

/// Which articles count as high-level clinical evidence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidencePolicy {
    publication_types: BTreeSet<String>,
    mesh_topics: BTreeSet<String>,
    match_mode: MatchMode,
}

impl EvidencePolicy {
    pub fn new<P, M, S, T>(publication_types: P, mesh_topics: M) -> Result<Self, PolicyError>
    where
        P: IntoIterator<Item = S>,
        M: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let publication_types = trimmed_set(publication_types);
        let mesh_topics = trimmed_set(mesh_topics);
        if publication_types.is_empty() && mesh_topics.is_empty() {
            return Err(PolicyError::EmptyEvidencePolicy);
        }
        Ok(EvidencePolicy {
            publication_types,
            mesh_topics,
            match_mode: MatchMode::Any,
        })
    }

    pub fn publication_types(&self) -> &BTreeSet<String> {
        &self.publication_types
    }

    pub fn mesh_topics(&self) -> &BTreeSet<String> {
        &self.mesh_topics
    }

    pub fn match_mode(&self) -> MatchMode {
        self.match_mode
    }
}

/// Which subject/object semantic types make a drug–disease claim, and which
/// generic subject concepts to drop.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptPolicy {
    subject_semtypes: BTreeSet<String>,
    object_semtypes: BTreeSet<String>,
    excluded_subject_cuis: BTreeSet<String>,
}

impl ConceptPolicy {
    pub fn new<A, B, C, S, T, U>(
        subject_semtypes: A,
        object_semtypes: B,
        excluded_subject_cuis: C,
    ) -> Result<Self, PolicyError>
    where
        A: IntoIterator<Item = S>,
        B: IntoIterator<Item = T>,
        C: IntoIterator<Item = U>,
        S: AsRef<str>,
        T: AsRef<str>,
        U: AsRef<str>,
    {
        let subject_semtypes = trimmed_set(subject_semtypes);
        let object_semtypes = trimmed_set(object_semtypes);
        if subject_semtypes.is_empty() {
            return Err(PolicyError::EmptySemanticTypes("subject"));
        }
        if object_semtypes.is_empty() {
            return Err(PolicyError::EmptySemanticTypes("object"));
        }
        Ok(ConceptPolicy {
            subject_semtypes,
            object_semtypes,
            excluded_subject_cuis: trimmed_set(excluded_subject_cuis),
        })
    }

    pub fn subject_semtypes(&self) -> &BTreeSet<String> {
        &self.subject_semtypes
    }

    pub fn object_semtypes(&self) -> &BTreeSet<String> {
        &self.object_semtypes
    }

    pub fn excluded_subject_cuis(&self) -> &BTreeSet<String> {
        &self.excluded_subject_cuis
    }
}

fn trimmed_set<I, S>(items: I) -> BTreeSet<String>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    items
        .into_iter()
        .map(|s| s.as_ref().trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Exact, case-sensitive match after trimming.
pub fn matches_evidence(meta: &ArticleMetadata, policy: &EvidencePolicy) -> bool {
    let hit = |values: &BTreeSet<String>, wanted: &BTreeSet<String>| {
        values.iter().any(|v| wanted.contains(v.trim()))
    };
    match policy.match_mode {
        MatchMode::Any => {
            hit(&meta.publication_types, &policy.publication_types)
                || hit(&meta.mesh_headings, &policy.mesh_topics)
        }
    }
}

pub fn is_drug_disease(p: &PredicationRecord, policy: &ConceptPolicy) -> bool {
    p.subject.has_any_type(&policy.subject_semtypes)
        && p.object.has_any_type(&policy.object_semtypes)
        && !policy.excluded_subject_cuis.contains(&p.subject.cui)
}

/// Keeps predications whose article matches `evidence` and whose concepts
/// match `concepts`; sentences and articles left without predications go.
pub fn filter_corpus(
    corpus: &ClaimCorpus,
    evidence: &EvidencePolicy,
    concepts: &ConceptPolicy,
) -> ClaimCorpus {
    let passing_articles: BTreeSet<&str> = corpus
        .articles()
        .values()
        .filter(|a| matches_evidence(a, evidence))
        .map(|a| a.article_id.as_str())
        .collect();

    let kept: Vec<PredicationRecord> = corpus
        .predications()
        .iter()
        .filter(|p| passing_articles.contains(p.article_id.as_str()) && is_drug_disease(p, concepts))
        .cloned()
        .collect();

    let mut sentences = BTreeMap::new();
    let mut articles = BTreeMap::new();
    for p in &kept {
        if !sentences.contains_key(&p.sentence_id) {
            if let Some(s) = corpus.sentence(&p.sentence_id) {
                sentences.insert(p.sentence_id.clone(), s.clone());
            }
        }
        if !articles.contains_key(&p.article_id) {
            if let Some(a) = corpus.article(&p.article_id) {
                articles.insert(p.article_id.clone(), a.clone());
            }
        }
    }
    ClaimCorpus::from_parts(kept, sentences, articles)
}

/// Same result as [`filter_corpus`], moving records instead of cloning them.
pub fn filter_corpus_owned(
    corpus: ClaimCorpus,
    evidence: &EvidencePolicy,
    concepts: &ConceptPolicy,
) -> ClaimCorpus {
    let passing_articles: BTreeSet<String> = corpus
        .articles()
        .values()
        .filter(|a| matches_evidence(a, evidence))
        .map(|a| a.article_id.clone())
        .collect();
    let (mut preds, mut sentences, mut articles) = corpus.into_parts();
    preds.retain(|p| passing_articles.contains(p.article_id.as_str()) && is_drug_disease(p, concepts));
    preds.shrink_to_fit();
    let used_sentences: BTreeSet<&str> = preds.iter().map(|p| p.sentence_id.as_str()).collect();
    let used_articles: BTreeSet<&str> = preds.iter().map(|p| p.article_id.as_str()).collect();
    sentences.retain(|k, _| used_sentences.contains(k.as_str()));
    articles.retain(|k, _| used_articles.contains(k.as_str()));
    drop(used_sentences);
    drop(used_articles);
    ClaimCorpus::from_parts(preds, sentences, articles)
}
