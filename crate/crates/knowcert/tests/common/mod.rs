//! Shared test support: fixture loading, a random corpus generator and
//! brute-force reference implementations of the detectors.
//!
//! The references work on the generator's raw rows with their own
//! tokenizer and their own copy of the polarity groups, so they share no
//! code with the crates under test.

#![allow(dead_code)]

pub mod curation;
pub mod scale;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use knowcert::pipeline::{self, PipelineConfig, PipelineRun, UnitSettings};
use knowcert_core::{ClaimCorpus, CueLexicon, DetectOptions, Finding, PolarityTable};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_files(name: &str) -> [PathBuf; 3] {
    let d = fixture_dir(name);
    [d.join("predications.tsv"), d.join("sentences.tsv"), d.join("articles.tsv")]
}

pub fn load_fixture(name: &str) -> ClaimCorpus {
    let [p, s, a] = fixture_files(name);
    let ingested = pipeline::ingest_files(&p, &s, &a, true).expect("fixture ingests strictly");
    ingested.corpus
}

/// Shipped configuration: default filters, lexicon and polarity table.
pub fn shipped() -> PipelineConfig {
    PipelineConfig::shipped().unwrap()
}

/// No filtering, otherwise defaults.
pub fn unfiltered() -> PipelineConfig {
    PipelineConfig {
        filter: None,
        lexicon: CueLexicon::default(),
        polarity: PolarityTable::default(),
        units: UnitSettings::default(),
        detect: DetectOptions::default(),
    }
}

pub fn run_fixture(name: &str) -> PipelineRun {
    pipeline::run(load_fixture(name), &shipped())
}

// ---------------------------------------------------------------------------
// Random corpora

pub const EXCITATORY: [&str; 10] = [
    "AUGMENTS",
    "CAUSES",
    "COMPLICATES",
    "PREDISPOSES",
    "PRODUCES",
    "STIMULATES",
    "NEG_DISRUPTS",
    "NEG_INHIBITS",
    "NEG_PREVENTS",
    "NEG_TREATS",
];
pub const INHIBITORY: [&str; 10] = [
    "DISRUPTS",
    "INHIBITS",
    "PREVENTS",
    "TREATS",
    "NEG_AUGMENTS",
    "NEG_CAUSES",
    "NEG_COMPLICATES",
    "NEG_PREDISPOSES",
    "NEG_PRODUCES",
    "NEG_STIMULATES",
];
pub const NEUTRAL: [&str; 4] = ["COEXISTS_WITH", "INTERACTS_WITH", "ASSOCIATED_WITH", "NEG_COEXISTS_WITH"];

pub const HEDGES: [&str; 3] = ["may", "could", "might"];
pub const DISAGREEMENT: [&str; 3] = ["conflicting", "controversial", "contradictory"];
/// Words that contain a cue but are not one.
const DECOYS: [&str; 6] = ["mayor", "dismay", "could-be", "nonconflicting", "Mayo", "mighty"];
const FILLER: [&str; 12] = [
    "patients", "cohort", "risk", "therapy", "dose", "trial", "outcome", "serum", "levels", "exposure",
    "incidence", "response",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPredication {
    pub id: String,
    pub sentence_id: String,
    pub pmid: String,
    pub predicate: String,
    pub subject: (String, String, String),
    pub object: (String, String, String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSentence {
    pub id: String,
    pub pmid: String,
    pub location: &'static str,
    pub ordinal: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawArticle {
    pub pmid: String,
    pub date: String,
    pub pub_types: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawCorpus {
    pub predications: Vec<RawPredication>,
    pub sentences: Vec<RawSentence>,
    pub articles: Vec<RawArticle>,
}

impl RawCorpus {
    pub fn predications_tsv(&self) -> String {
        let mut s = String::from(
            "PREDICATION_ID\tSENTENCE_ID\tPMID\tPREDICATE\tSUBJECT_CUI\tSUBJECT_NAME\tSUBJECT_SEMTYPES\tOBJECT_CUI\tOBJECT_NAME\tOBJECT_SEMTYPES\n",
        );
        for p in &self.predications {
            writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.id, p.sentence_id, p.pmid, p.predicate, p.subject.0, p.subject.1, p.subject.2, p.object.0, p.object.1,
                p.object.2
            )
            .unwrap();
        }
        s
    }

    pub fn sentences_tsv(&self) -> String {
        let mut s = String::from("SENTENCE_ID\tPMID\tLOCATION\tORDINAL\tTEXT\n");
        for r in &self.sentences {
            writeln!(s, "{}\t{}\t{}\t{}\t{}", r.id, r.pmid, r.location, r.ordinal, r.text).unwrap();
        }
        s
    }

    pub fn articles_tsv(&self) -> String {
        let mut s = String::from("PMID\tPUB_DATE\tPUB_TYPES\tMESH_HEADINGS\n");
        for a in &self.articles {
            writeln!(s, "{}\t{}\t{}\t", a.pmid, a.date, a.pub_types).unwrap();
        }
        s
    }

    pub fn write_to(&self, dir: &Path) -> [PathBuf; 3] {
        let paths = [dir.join("predications.tsv"), dir.join("sentences.tsv"), dir.join("articles.tsv")];
        std::fs::write(&paths[0], self.predications_tsv()).unwrap();
        std::fs::write(&paths[1], self.sentences_tsv()).unwrap();
        std::fs::write(&paths[2], self.articles_tsv()).unwrap();
        paths
    }

    pub fn ingest(&self) -> ClaimCorpus {
        pipeline::ingest_strs(&self.predications_tsv(), &self.sentences_tsv(), &self.articles_tsv(), true)
            .expect("generated corpora are well formed")
            .corpus
    }

    /// Same rows, each file in its own random order.
    pub fn shuffled(&self, rng: &mut impl Rng) -> RawCorpus {
        let mut out = self.clone();
        out.predications.shuffle(rng);
        out.sentences.shuffle(rng);
        out.articles.shuffle(rng);
        out
    }

    pub fn sentence(&self, id: &str) -> Option<&RawSentence> {
        self.sentences.iter().find(|s| s.id == id)
    }

    /// Fraction of predications whose sentence is hedged, by the reference tokenizer.
    pub fn hedged_fraction(&self) -> f64 {
        let hedged: BTreeSet<&str> =
            self.sentences.iter().filter(|s| ref_is_hedged(&s.text)).map(|s| s.id.as_str()).collect();
        let n = self.predications.iter().filter(|p| hedged.contains(p.sentence_id.as_str())).count();
        n as f64 / self.predications.len().max(1) as f64
    }
}

fn cased(rng: &mut impl Rng, word: &str) -> String {
    match rng.gen_range(0..6) {
        0 => word.to_uppercase(),
        1 => {
            let mut c = word.chars();
            c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
        }
        _ => word.to_string(),
    }
}

fn sentence_text(rng: &mut impl Rng, hedge: bool, cue: bool) -> String {
    let mut words: Vec<String> = (0..rng.gen_range(5..12))
        .map(|_| FILLER.choose(rng).unwrap().to_string())
        .collect();
    if rng.gen_bool(0.3) {
        words.push(DECOYS.choose(rng).unwrap().to_string());
    }
    if hedge {
        let h = *HEDGES.choose(rng).unwrap();
        let w = cased(rng, h);
        words.push(w);
    }
    if cue {
        for _ in 0..rng.gen_range(1..=2) {
            let d = *DISAGREEMENT.choose(rng).unwrap();
            let w = cased(rng, d);
            words.push(w);
        }
    }
    words.shuffle(rng);
    let mut text = words.join(" ");
    text.push('.');
    text
}

/// Shape of a generated corpus.
#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub min_predications: usize,
    pub max_predications: usize,
    /// Bounds on the share of predications in hedged sentences.
    pub hedged: (f64, f64),
    pub subjects: usize,
    pub objects: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            min_predications: 10,
            max_predications: 500,
            hedged: (0.10, 0.40),
            subjects: 6,
            objects: 4,
        }
    }
}

/// A corpus whose hedged share falls inside `params.hedged`. Every article
/// passes the default evidence filter and every concept the default
/// semantic-type filter.
pub fn generate(seed: u64, params: &GenParams) -> RawCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let c = generate_once(&mut rng, params);
        let h = c.hedged_fraction();
        if h >= params.hedged.0 && h <= params.hedged.1 {
            return c;
        }
    }
}

fn generate_once(rng: &mut ChaCha8Rng, params: &GenParams) -> RawCorpus {
    let n = rng.gen_range(params.min_predications..=params.max_predications);
    let hedge_rate = rng.gen_range(params.hedged.0..=params.hedged.1);
    let n_sentences = (n / 2).max(1);
    let n_articles = (n_sentences / 3).max(1);

    let mut corpus = RawCorpus::default();
    for a in 0..n_articles {
        let date = match rng.gen_range(0..5) {
            0 => String::new(),
            1 => format!("{}", rng.gen_range(1990..2020)),
            _ => format!(
                "{} {}",
                rng.gen_range(1990..2020),
                ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"][rng.gen_range(0..12)]
            ),
        };
        corpus.articles.push(RawArticle {
            pmid: format!("{}", 1_000_000 + a),
            date,
            pub_types: "Meta-Analysis".into(),
        });
    }
    let mut ordinals: BTreeMap<(usize, &str), u32> = BTreeMap::new();
    for _ in 0..n_sentences {
        let a = rng.gen_range(0..n_articles);
        let location = if rng.gen_bool(0.15) { "ti" } else { "ab" };
        let ord = ordinals.entry((a, location)).or_insert(0);
        *ord += 1;
        let pmid = corpus.articles[a].pmid.clone();
        let (hedge, cue) = (rng.gen_bool(hedge_rate), rng.gen_bool(0.12));
        corpus.sentences.push(RawSentence {
            id: format!("{pmid}.{location}.{ord}"),
            pmid,
            location,
            ordinal: *ord,
            text: sentence_text(rng, hedge, cue),
        });
    }

    let subjects: Vec<(String, String, String)> = (0..params.subjects)
        .map(|i| (format!("C9{i:06}"), format!("Drug {i}"), "phsu".to_string()))
        .collect();
    let objects: Vec<(String, String, String)> = (0..params.objects)
        .map(|i| (format!("C8{i:06}"), format!("Disease {i}"), "dsyn".to_string()))
        .collect();
    let mut next_id = 1u64;
    while corpus.predications.len() < n {
        if !corpus.predications.is_empty() && rng.gen_bool(0.05) {
            // same sentence and triple, new id
            let mut dup = corpus.predications.choose(rng).unwrap().clone();
            dup.id = next_id.to_string();
            if rng.gen_bool(0.5) {
                dup.subject.1 = format!("{} (alt)", dup.subject.1);
            }
            next_id += 1;
            corpus.predications.push(dup);
            continue;
        }
        let s = corpus.sentences.choose(rng).unwrap();
        let predicate = match rng.gen_range(0..10) {
            0..=3 => EXCITATORY.choose(rng).unwrap(),
            4..=7 => INHIBITORY.choose(rng).unwrap(),
            _ => NEUTRAL.choose(rng).unwrap(),
        };
        corpus.predications.push(RawPredication {
            id: next_id.to_string(),
            sentence_id: s.id.clone(),
            pmid: s.pmid.clone(),
            predicate: predicate.to_string(),
            subject: subjects.choose(rng).unwrap().clone(),
            object: objects.choose(rng).unwrap().clone(),
        });
        next_id += 1;
    }
    corpus
}

// ---------------------------------------------------------------------------
// Reference detectors

fn ref_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '-' {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn ref_is_hedged(text: &str) -> bool {
    ref_tokens(text).iter().any(|t| HEDGES.contains(&t.to_lowercase().as_str()))
}

pub fn ref_cues(text: &str) -> BTreeSet<String> {
    ref_tokens(text)
        .into_iter()
        .map(|t| t.to_lowercase())
        .filter(|t| DISAGREEMENT.contains(&t.as_str()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RefGroup {
    E,
    I,
}

pub fn ref_group(predicate: &str) -> Option<RefGroup> {
    if EXCITATORY.contains(&predicate) {
        Some(RefGroup::E)
    } else if INHIBITORY.contains(&predicate) {
        Some(RefGroup::I)
    } else {
        None
    }
}

/// Predicate with the predication ids of its claims, sorted.
pub type Support = (String, Vec<String>);

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Expected {
    /// (subject, object) -> (E supports, I supports)
    pub contradictions: BTreeMap<(String, String), (Vec<Support>, Vec<Support>)>,
    /// (subject, object) -> (group, supports)
    pub diversity: BTreeMap<(String, String), (RefGroup, Vec<Support>)>,
    /// (subject, predicate, object, sentence, cue, predication id)
    pub apparent: BTreeSet<(String, String, String, String, String, String)>,
}

/// One claim: a distinct (sentence, triple), named by its smallest id.
#[derive(Debug, Clone)]
struct RefClaim {
    id: String,
    subject: String,
    predicate: String,
    object: String,
    sentence: String,
}

fn ref_claims(raw: &RawCorpus, excluded: &BTreeSet<String>) -> Vec<RefClaim> {
    let texts: BTreeMap<&str, &RawSentence> = raw.sentences.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut by_key: BTreeMap<(String, String, String, String), String> = BTreeMap::new();
    for p in &raw.predications {
        let key = (p.subject.0.clone(), p.predicate.clone(), p.object.0.clone(), p.sentence_id.clone());
        let e = by_key.entry(key).or_insert_with(|| p.id.clone());
        if p.id < *e {
            *e = p.id.clone();
        }
    }
    by_key
        .into_iter()
        .filter(|((.., sid), _)| !ref_is_hedged(&texts[sid.as_str()].text))
        .filter(|(_, id)| !excluded.contains(id))
        .map(|((s, p, o, sid), id)| RefClaim {
            id,
            subject: s,
            predicate: p,
            object: o,
            sentence: sid,
        })
        .collect()
}

/// Brute force over every pair of claims of a concept pair, with hedged
/// claims and the `excluded` predication ids left out.
pub fn reference(raw: &RawCorpus, excluded: &BTreeSet<String>) -> Expected {
    let claims = ref_claims(raw, excluded);
    let mut by_pair: BTreeMap<(String, String), Vec<&RefClaim>> = BTreeMap::new();
    for c in &claims {
        by_pair.entry((c.subject.clone(), c.object.clone())).or_default().push(c);
    }
    let supports = |cs: &[&RefClaim], g: RefGroup| -> Vec<Support> {
        let mut m: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for c in cs.iter().filter(|c| ref_group(&c.predicate) == Some(g)) {
            m.entry(c.predicate.clone()).or_default().push(c.id.clone());
        }
        m.into_iter()
            .map(|(p, mut ids)| {
                ids.sort();
                (p, ids)
            })
            .collect()
    };

    let mut out = Expected::default();
    for (pair, cs) in &by_pair {
        let mut opposed = false;
        let mut same_group_distinct: Option<RefGroup> = None;
        for (i, a) in cs.iter().enumerate() {
            for b in &cs[i + 1..] {
                match (ref_group(&a.predicate), ref_group(&b.predicate)) {
                    (Some(x), Some(y)) if x != y => opposed = true,
                    (Some(x), Some(_)) if a.predicate != b.predicate => {
                        same_group_distinct = Some(x);
                    }
                    _ => {}
                }
            }
        }
        if opposed {
            out.contradictions
                .insert(pair.clone(), (supports(cs, RefGroup::E), supports(cs, RefGroup::I)));
        } else if let Some(g) = same_group_distinct {
            out.diversity.insert(pair.clone(), (g, supports(cs, g)));
        }
    }

    let texts: BTreeMap<&str, &RawSentence> = raw.sentences.iter().map(|s| (s.id.as_str(), s)).collect();
    for c in &claims {
        let s = texts[c.sentence.as_str()];
        if s.location != "ab" {
            continue;
        }
        for cue in ref_cues(&s.text) {
            out.apparent.insert((
                c.subject.clone(),
                c.predicate.clone(),
                c.object.clone(),
                c.sentence.clone(),
                cue,
                c.id.clone(),
            ));
        }
    }
    out
}

fn to_supports(s: &[knowcert_core::PredicateSupport]) -> Vec<Support> {
    let mut v: Vec<Support> = s
        .iter()
        .map(|p| {
            let mut ids: Vec<String> = p.claims.iter().map(|c| c.predication_id.clone()).collect();
            ids.sort();
            (p.predicate.raw(), ids)
        })
        .collect();
    v.sort();
    v
}

/// Detector output in the reference's shape.
pub fn observed(findings: &[Finding]) -> Expected {
    let mut out = Expected::default();
    for f in findings {
        match f {
            Finding::Contradiction(c) => {
                out.contradictions.insert(
                    (c.pair.subject_cui.clone(), c.pair.object_cui.clone()),
                    (to_supports(&c.excitatory), to_supports(&c.inhibitory)),
                );
            }
            Finding::Diversity(d) => {
                let g = match d.group.code() {
                    "E" => RefGroup::E,
                    _ => RefGroup::I,
                };
                out.diversity
                    .insert((d.pair.subject_cui.clone(), d.pair.object_cui.clone()), (g, to_supports(&d.labels)));
            }
            Finding::Apparent(a) => {
                out.apparent.insert((
                    a.unit_key.subject_cui.clone(),
                    a.unit_key.predicate.raw(),
                    a.unit_key.object_cui.clone(),
                    a.claim.sentence_id.clone(),
                    a.cue.clone(),
                    a.claim.predication_id.clone(),
                ));
            }
        }
    }
    out
}

/// Ids of every predication in a hedged sentence, by the reference tokenizer.
pub fn hedged_ids(raw: &RawCorpus) -> BTreeSet<String> {
    let hedged: BTreeSet<&str> =
        raw.sentences.iter().filter(|s| ref_is_hedged(&s.text)).map(|s| s.id.as_str()).collect();
    raw.predications
        .iter()
        .filter(|p| hedged.contains(p.sentence_id.as_str()))
        .map(|p| p.id.clone())
        .collect()
}

/// Pairs reported as both contradiction and diversity.
pub fn exclusivity_violations(findings: &[Finding]) -> usize {
    let mut c = BTreeSet::new();
    let mut d = BTreeSet::new();
    for f in findings {
        match f {
            Finding::Contradiction(_) => {
                c.insert(f.pair());
            }
            Finding::Diversity(_) => {
                d.insert(f.pair());
            }
            _ => {}
        }
    }
    c.intersection(&d).count()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
