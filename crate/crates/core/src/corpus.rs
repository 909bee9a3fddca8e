//! Claim corpus: concepts, predicates, the three record kinds, and the
//! linking step that cross-references predications with their sentence and
//! article.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

/// Prefix SemRep puts on negated predicate names.
pub const NEG_PREFIX: &str = "NEG_";

pub const MIN_PUB_YEAR: i32 = 1800;
pub const MAX_PUB_YEAR: i32 = 2100;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("concept identifier is empty")]
    EmptyCui,
    #[error("concept {0} has no semantic types")]
    NoSemanticTypes(String),
    #[error("invalid predicate name {0:?}")]
    InvalidPredicate(String),
    #[error("unknown sentence location code {0:?} (expected \"ti\" or \"ab\")")]
    UnknownLocation(String),
    #[error("sentence {0} has empty text")]
    EmptySentence(String),
    #[error("empty identifier in {0} field")]
    EmptyId(&'static str),
    #[error("publication year {0} outside {MIN_PUB_YEAR}..={MAX_PUB_YEAR}")]
    YearOutOfRange(i32),
    #[error("publication month {0} outside 1..=12")]
    MonthOutOfRange(u8),
}

/// A UMLS concept. Identity is the CUI; the name is for display only.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Concept {
    pub cui: String,
    pub preferred_name: String,
    pub semantic_types: BTreeSet<String>,
}

impl Concept {
    pub fn new<I, S>(cui: &str, preferred_name: &str, semantic_types: I) -> Result<Self, RecordError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let cui = cui.trim();
        if cui.is_empty() {
            return Err(RecordError::EmptyCui);
        }
        let semantic_types: BTreeSet<String> = semantic_types
            .into_iter()
            .map(|s| s.as_ref().trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if semantic_types.is_empty() {
            return Err(RecordError::NoSemanticTypes(cui.to_string()));
        }
        Ok(Concept {
            cui: cui.to_string(),
            preferred_name: preferred_name.trim().to_string(),
            semantic_types,
        })
    }

    pub fn has_any_type(&self, types: &BTreeSet<String>) -> bool {
        self.semantic_types.iter().any(|t| types.contains(t))
    }
}

/// A predicate name split into its base and negation flag.
///
/// `NEG_TREATS` is stored as `{ base: "TREATS", negated: true }`. The base is
/// upper-case and never itself starts with `NEG_`, so the raw name is always
/// recoverable as `Display`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Predicate {
    base: String,
    negated: bool,
}

impl Predicate {
    pub fn new(base: &str, negated: bool) -> Result<Self, RecordError> {
        let upper = base.trim().to_uppercase();
        let valid = !upper.is_empty()
            && !upper.starts_with(NEG_PREFIX)
            && !upper.chars().any(|c| c.is_whitespace() || c.is_control());
        if !valid {
            return Err(RecordError::InvalidPredicate(base.to_string()));
        }
        Ok(Predicate {
            base: upper,
            negated,
        })
    }

    /// Parses a raw SemRep predicate name, upper-casing it first.
    pub fn parse(raw: &str) -> Result<Self, RecordError> {
        let upper = raw.trim().to_uppercase();
        match upper.strip_prefix(NEG_PREFIX) {
            Some(base) => Predicate::new(base, true),
            None => Predicate::new(&upper, false),
        }
        .map_err(|_| RecordError::InvalidPredicate(raw.to_string()))
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn is_negated(&self) -> bool {
        self.negated
    }

    /// Toggles the negation flag.
    pub fn flip(&self) -> Self {
        Predicate {
            base: self.base.clone(),
            negated: !self.negated,
        }
    }

    pub fn raw(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            f.write_str(NEG_PREFIX)?;
        }
        f.write_str(&self.base)
    }
}

impl FromStr for Predicate {
    type Err = RecordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Predicate::parse(s)
    }
}

impl TryFrom<String> for Predicate {
    type Error = RecordError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Predicate::parse(&value)
    }
}

impl From<Predicate> for String {
    fn from(p: Predicate) -> String {
        p.to_string()
    }
}

/// Where in the article a sentence sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Location {
    #[serde(rename = "ti")]
    Title,
    #[serde(rename = "ab")]
    Abstract,
}

impl Location {
    pub fn code(self) -> &'static str {
        match self {
            Location::Title => "ti",
            Location::Abstract => "ab",
        }
    }

    pub fn from_code(code: &str) -> Result<Self, RecordError> {
        match code.trim() {
            "ti" => Ok(Location::Title),
            "ab" => Ok(Location::Abstract),
            other => Err(RecordError::UnknownLocation(other.to_string())),
        }
    }
}

/// One extracted triple, tied to one sentence of one article.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredicationRecord {
    pub predication_id: String,
    pub sentence_id: String,
    pub article_id: String,
    pub subject: Arc<Concept>,
    pub predicate: Predicate,
    pub object: Arc<Concept>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub sentence_id: String,
    pub article_id: String,
    pub location: Location,
    pub ordinal: u32,
    pub text: String,
}

impl SentenceRecord {
    /// Builds a sentence, stripping leading/trailing whitespace from the text.
    pub fn new(
        sentence_id: &str,
        article_id: &str,
        location: Location,
        ordinal: u32,
        text: &str,
    ) -> Result<Self, RecordError> {
        let sentence_id = non_empty(sentence_id, "SENTENCE_ID")?;
        let article_id = non_empty(article_id, "PMID")?;
        let text = text.trim();
        if text.is_empty() {
            return Err(RecordError::EmptySentence(sentence_id));
        }
        Ok(SentenceRecord {
            sentence_id,
            article_id,
            location,
            ordinal,
            text: text.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleMetadata {
    pub article_id: String,
    pub pub_year: Option<i32>,
    pub pub_month: Option<u8>,
    pub publication_types: BTreeSet<String>,
    pub mesh_headings: BTreeSet<String>,
}

impl ArticleMetadata {
    pub fn new<P, M, S, T>(
        article_id: &str,
        pub_year: Option<i32>,
        pub_month: Option<u8>,
        publication_types: P,
        mesh_headings: M,
    ) -> Result<Self, RecordError>
    where
        P: IntoIterator<Item = S>,
        M: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let article_id = non_empty(article_id, "PMID")?;
        if let Some(year) = pub_year {
            if !(MIN_PUB_YEAR..=MAX_PUB_YEAR).contains(&year) {
                return Err(RecordError::YearOutOfRange(year));
            }
        }
        if let Some(month) = pub_month {
            if !(1..=12).contains(&month) {
                return Err(RecordError::MonthOutOfRange(month));
            }
        }
        Ok(ArticleMetadata {
            article_id,
            pub_year,
            pub_month: pub_year.and(pub_month),
            publication_types: clean_set(publication_types),
            mesh_headings: clean_set(mesh_headings),
        })
    }
}

fn non_empty(value: &str, field: &'static str) -> Result<String, RecordError> {
    let value = value.trim();
    if value.is_empty() {
        Err(RecordError::EmptyId(field))
    } else {
        Ok(value.to_string())
    }
}

fn clean_set<I, S>(items: I) -> BTreeSet<String>
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

/// A fully cross-referenced set of predications, sentences and articles.
///
/// Every predication's sentence and article resolve; the only way to build
/// one is through [`link`] or by filtering an existing corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClaimCorpus {
    predications: Vec<PredicationRecord>,
    sentences: BTreeMap<String, SentenceRecord>,
    articles: BTreeMap<String, ArticleMetadata>,
}

impl ClaimCorpus {
    pub(crate) fn from_parts(
        predications: Vec<PredicationRecord>,
        sentences: BTreeMap<String, SentenceRecord>,
        articles: BTreeMap<String, ArticleMetadata>,
    ) -> Self {
        ClaimCorpus {
            predications,
            sentences,
            articles,
        }
    }

    pub fn predications(&self) -> &[PredicationRecord] {
        &self.predications
    }

    pub fn sentences(&self) -> &BTreeMap<String, SentenceRecord> {
        &self.sentences
    }

    pub fn articles(&self) -> &BTreeMap<String, ArticleMetadata> {
        &self.articles
    }

    pub fn sentence(&self, id: &str) -> Option<&SentenceRecord> {
        self.sentences.get(id)
    }

    pub fn article(&self, id: &str) -> Option<&ArticleMetadata> {
        self.articles.get(id)
    }

    pub fn is_empty(&self) -> bool {
        self.predications.is_empty()
    }

    pub fn into_parts(
        self,
    ) -> (
        Vec<PredicationRecord>,
        BTreeMap<String, SentenceRecord>,
        BTreeMap<String, ArticleMetadata>,
    ) {
        (self.predications, self.sentences, self.articles)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LinkMode {
    /// Dangling predications are set aside in the quarantine list.
    #[default]
    Lenient,
    /// Any dangling predication aborts linking.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MissingReference {
    Sentence(String),
    Article(String),
    /// The sentence exists but belongs to a different article.
    ArticleMismatch { sentence_article: String },
}

impl fmt::Display for MissingReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MissingReference::Sentence(id) => write!(f, "missing sentence {id}"),
            MissingReference::Article(id) => write!(f, "missing article {id}"),
            MissingReference::ArticleMismatch { sentence_article } => {
                write!(f, "sentence belongs to article {sentence_article}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quarantined {
    pub record: PredicationRecord,
    pub missing: MissingReference,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinkError {
    #[error("duplicate predication id {0}")]
    DuplicatePredication(String),
    #[error("duplicate sentence id {0}")]
    DuplicateSentence(String),
    #[error("duplicate article id {0}")]
    DuplicateArticle(String),
    #[error("predication {predication_id}: {missing}")]
    Dangling {
        predication_id: String,
        missing: MissingReference,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Linked {
    pub corpus: ClaimCorpus,
    pub quarantine: Vec<Quarantined>,
}

/// Cross-references the three parsed collections into a [`ClaimCorpus`].
///
/// Duplicate identifiers are always fatal. Predications whose sentence or
/// article is missing are quarantined in lenient mode and fatal in strict
/// mode. Predication order is preserved.
pub fn link(
    predications: Vec<PredicationRecord>,
    sentences: Vec<SentenceRecord>,
    articles: Vec<ArticleMetadata>,
    mode: LinkMode,
) -> Result<Linked, LinkError> {
    let mut sentence_map = BTreeMap::new();
    for s in sentences {
        if let Some(dup) = sentence_map.insert(s.sentence_id.clone(), s) {
            return Err(LinkError::DuplicateSentence(dup.sentence_id));
        }
    }
    let mut article_map = BTreeMap::new();
    for a in articles {
        if let Some(dup) = article_map.insert(a.article_id.clone(), a) {
            return Err(LinkError::DuplicateArticle(dup.article_id));
        }
    }

    let mut seen = BTreeSet::new();
    let mut kept = Vec::with_capacity(predications.len());
    let mut quarantine = Vec::new();
    for p in predications {
        if !seen.insert(p.predication_id.clone()) {
            return Err(LinkError::DuplicatePredication(p.predication_id));
        }
        let missing = match sentence_map.get(&p.sentence_id) {
            None => Some(MissingReference::Sentence(p.sentence_id.clone())),
            Some(s) if s.article_id != p.article_id => Some(MissingReference::ArticleMismatch {
                sentence_article: s.article_id.clone(),
            }),
            Some(_) if !article_map.contains_key(&p.article_id) => {
                Some(MissingReference::Article(p.article_id.clone()))
            }
            Some(_) => None,
        };
        match (missing, mode) {
            (None, _) => kept.push(p),
            (Some(missing), LinkMode::Lenient) => quarantine.push(Quarantined { record: p, missing }),
            (Some(missing), LinkMode::Strict) => {
                return Err(LinkError::Dangling {
                    predication_id: p.predication_id,
                    missing,
                })
            }
        }
    }

    Ok(Linked {
        corpus: ClaimCorpus::from_parts(kept, sentence_map, article_map),
        quarantine,
    })
}

/// Renders `(2014, Some(2))` as `"2014 Feb"`.
pub fn format_pub_date(year: Option<i32>, month: Option<u8>) -> String {
    const MONTHS: [&str; 12] = [
        "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
    ];
    match (year, month) {
        (Some(y), Some(m)) if (1..=12).contains(&m) => format!("{y} {}", MONTHS[m as usize - 1]),
        (Some(y), _) => format!("{y}"),
        (None, _) => String::new(),
    }
}

/// Parses `"YYYY"`, `"YYYY Mon"` or `"YYYY Mon DD"` into year and month.
pub fn parse_pub_date(field: &str) -> Option<(i32, Option<u8>)> {
    let mut parts = field.split_whitespace();
    let year_part = parts.next()?;
    if year_part.len() != 4 || !year_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let year: i32 = year_part.parse().ok()?;
    if !(MIN_PUB_YEAR..=MAX_PUB_YEAR).contains(&year) {
        return None;
    }
    let month = match parts.next() {
        None => None,
        Some(m) => Some(parse_month(m)?),
    };
    match parts.next() {
        None => {}
        Some(day) => {
            let d: u8 = day.parse().ok()?;
            if !(1..=31).contains(&d) || parts.next().is_some() {
                return None;
            }
        }
    }
    Some((year, month))
}

fn parse_month(m: &str) -> Option<u8> {
    const NAMES: [&str; 12] = [
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec",
    ];
    let lower = m.to_lowercase();
    if let Some(pos) = NAMES.iter().position(|n| lower.starts_with(n) && lower.len() >= 3) {
        return Some(pos as u8 + 1);
    }
    match lower.parse::<u8>() {
        Ok(n) if (1..=12).contains(&n) => Some(n),
        _ => None,
    }
}
