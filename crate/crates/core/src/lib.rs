//! Uncertainty-aware knowledge objects built from semantic predications.
//!
//! A predication is one Subject–Predicate–Object triple extracted from one
//! sentence of one article. This crate aggregates predications into knowledge
//! units, tags their supporting sentences for hedging and disagreement cues,
//! and detects contradictory and diverse claims about the same concept pair
//! using an excitatory/inhibitory predicate grouping. Curation decisions from
//! human reviewers are replayed on top of the detector output.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, the decision log,
//! the HTTP service and the CLI live in the `knowcert` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod corpus;
pub mod cues;
pub mod curation;
pub mod detect;
pub mod filter;
pub mod polarity;
pub mod report;
pub mod store;

mod digest;

pub use corpus::{
    format_pub_date, link, parse_pub_date, ArticleMetadata, ClaimCorpus, Concept, LinkError, LinkMode,
    Linked, Location, MissingReference, PredicationRecord, Predicate, Quarantined, RecordError,
    SentenceRecord,
};
pub use cues::{is_hedged, tag_corpus, tag_sentence, tag_text, CueClass, CueHit, CueLexicon, CueTags, TagMap};
pub use curation::{
    apply_decisions, apply_history, validate_decision, Curation, CurationDecision, CurationState,
    CurationStatus, DecisionError, DecisionHistory, LoggedDecision, RemovalReason, Removed, Verdict,
};
pub use detect::{
    detect_all, detect_all_excluding, detect_apparent, detect_contradictions, detect_diversity, evaluate_pair, mark_statuses,
    pair_finding, sort_findings, units_by_pair, ApparentFinding, ContradictionFinding, CueScope,
    DetectOptions, DiversityFinding, Finding, FindingKind, PairOutcome, PredicateSupport,
};
pub use filter::{filter_corpus, filter_corpus_owned, is_drug_disease, matches_evidence, ConceptPolicy, EvidencePolicy};
pub use polarity::{Group, Polarity, PolarityError, PolarityTable};
pub use report::{
    apparent_table, contradiction_table, diversity_histogram, summary, Report, ReportKind, ReportRow,
    Summary,
};
pub use store::{
    build_units, exclude_hedged, make_object, object_id, timeline, Claim, ClaimRef, HedgeExclusion,
    KnowledgeObject, KnowledgeUnit, NameTally, PairKey, ScoreCues, TimelineRow, Uncertainty, UncertaintyStatus,
    UnitBuild, UnitKey, UnitMap,
};
