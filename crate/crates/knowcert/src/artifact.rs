//! Versioned binary artifacts passed between pipeline stages.
//!
//! Layout: 4-byte magic `KNCT`, one format-version byte, one kind byte, then
//! a bincode payload. Readers refuse other versions and kinds outright rather
//! than guessing.

use std::borrow::Cow;
use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use knowcert_core::{
    exclude_hedged, link, make_object, ArticleMetadata, ClaimCorpus, Concept, HedgeExclusion, KnowledgeObject,
    LinkError, LinkMode, PredicationRecord, Predicate, ScoreCues, SentenceRecord, TagMap, UnitKey, UnitMap,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const MAGIC: [u8; 4] = *b"KNCT";
pub const FORMAT_VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ArtifactKind {
    Corpus = 1,
    Tags = 2,
    Units = 3,
}

impl ArtifactKind {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            1 => Some(ArtifactKind::Corpus),
            2 => Some(ArtifactKind::Tags),
            3 => Some(ArtifactKind::Units),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a knowcert artifact (bad magic)")]
    BadMagic,
    #[error("artifact format version {0} is not supported (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u8),
    #[error("expected a {expected:?} artifact, found kind byte {found}")]
    WrongKind { expected: ArtifactKind, found: u8 },
    #[error("corrupt artifact payload: {0}")]
    Decode(#[from] bincode::Error),
    #[error("corpus artifact fails linking: {0}")]
    Link(#[from] LinkError),
    #[error("corpus artifact references concept #{0}, which is missing")]
    MissingConcept(u32),
}

pub fn write_to<W: Write, T: Serialize>(mut out: W, kind: ArtifactKind, value: &T) -> Result<(), ArtifactError> {
    out.write_all(&MAGIC)?;
    out.write_all(&[FORMAT_VERSION, kind as u8])?;
    bincode::serialize_into(&mut out, value)?;
    out.flush()?;
    Ok(())
}

pub fn read_from<R: Read, T: DeserializeOwned>(mut input: R, kind: ArtifactKind) -> Result<T, ArtifactError> {
    let mut head = [0u8; 6];
    input.read_exact(&mut head).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => ArtifactError::BadMagic,
        _ => ArtifactError::Io(e),
    })?;
    if head[..4] != MAGIC {
        return Err(ArtifactError::BadMagic);
    }
    if head[4] != FORMAT_VERSION {
        return Err(ArtifactError::UnsupportedVersion(head[4]));
    }
    if ArtifactKind::from_byte(head[5]) != Some(kind) {
        return Err(ArtifactError::WrongKind {
            expected: kind,
            found: head[5],
        });
    }
    Ok(bincode::deserialize_from(input)?)
}

pub fn save<T: Serialize>(path: &Path, kind: ArtifactKind, value: &T) -> Result<(), ArtifactError> {
    write_to(BufWriter::new(File::create(path)?), kind, value)
}

pub fn load<T: DeserializeOwned>(path: &Path, kind: ArtifactKind) -> Result<T, ArtifactError> {
    read_from(BufReader::new(File::open(path)?), kind)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub quarantined: u64,
    pub row_errors: u64,
    pub warnings: u64,
}

#[derive(Serialize, Deserialize)]
struct PredicationRow {
    predication_id: String,
    sentence_id: String,
    article_id: String,
    predicate: Predicate,
    subject: u32,
    object: u32,
}

/// On-disk form of a corpus: concepts stored once and referenced by index.
#[derive(Serialize, Deserialize)]
struct CorpusSnapshot {
    stats: IngestStats,
    concepts: Vec<Concept>,
    predications: Vec<PredicationRow>,
    sentences: Vec<SentenceRecord>,
    articles: Vec<ArticleMetadata>,
}

/// A linked corpus plus the bookkeeping from the ingest that produced it.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusArtifact {
    pub corpus: ClaimCorpus,
    pub stats: IngestStats,
}

impl CorpusArtifact {
    fn to_snapshot(&self) -> CorpusSnapshot {
        let mut index: HashMap<*const Concept, u32> = HashMap::new();
        let mut concepts = Vec::new();
        let mut intern = |c: &Arc<Concept>| {
            *index.entry(Arc::as_ptr(c)).or_insert_with(|| {
                concepts.push((**c).clone());
                (concepts.len() - 1) as u32
            })
        };
        let predications = self
            .corpus
            .predications()
            .iter()
            .map(|p| PredicationRow {
                predication_id: p.predication_id.clone(),
                sentence_id: p.sentence_id.clone(),
                article_id: p.article_id.clone(),
                predicate: p.predicate.clone(),
                subject: intern(&p.subject),
                object: intern(&p.object),
            })
            .collect();
        CorpusSnapshot {
            stats: self.stats.clone(),
            concepts,
            predications,
            sentences: self.corpus.sentences().values().cloned().collect(),
            articles: self.corpus.articles().values().cloned().collect(),
        }
    }

    fn from_snapshot(s: CorpusSnapshot) -> Result<Self, ArtifactError> {
        let concepts: Vec<Arc<Concept>> = s.concepts.into_iter().map(Arc::new).collect();
        let get = |i: u32| concepts.get(i as usize).cloned().ok_or(ArtifactError::MissingConcept(i));
        let mut predications = Vec::with_capacity(s.predications.len());
        for row in s.predications {
            predications.push(PredicationRecord {
                predication_id: row.predication_id,
                sentence_id: row.sentence_id,
                article_id: row.article_id,
                predicate: row.predicate,
                subject: get(row.subject)?,
                object: get(row.object)?,
            });
        }
        let linked = link(predications, s.sentences, s.articles, LinkMode::Strict)?;
        Ok(CorpusArtifact {
            corpus: linked.corpus,
            stats: s.stats,
        })
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<(), ArtifactError> {
        write_to(out, ArtifactKind::Corpus, &self.to_snapshot())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self, ArtifactError> {
        Self::from_snapshot(read_from(input, ArtifactKind::Corpus)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagsArtifact {
    pub tags: TagMap,
}

impl TagsArtifact {
    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        save(path, ArtifactKind::Tags, self)
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        load(path, ArtifactKind::Tags)
    }
}

/// All knowledge units of a corpus, before any hedging exclusion, plus the
/// settings later stages need.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitsArtifact {
    pub corpus_version: String,
    /// Hedging exclusion detectors should apply, if any.
    pub exclusion: Option<HedgeExclusion>,
    pub score_cues: ScoreCues,
    pub duplicates_collapsed: u64,
    pub units: UnitMap,
}

impl UnitsArtifact {
    /// The units detectors see.
    pub fn working_units(&self) -> Cow<'_, UnitMap> {
        match self.exclusion {
            Some(mode) => Cow::Owned(exclude_hedged(&self.units, mode)),
            None => Cow::Borrowed(&self.units),
        }
    }

    pub fn claim_count(&self) -> u64 {
        self.units.values().map(|u| u.claims.len() as u64).sum()
    }

    /// Claims the hedging exclusion removes.
    pub fn hedged_claims_filtered(&self) -> u64 {
        match self.exclusion {
            Some(HedgeExclusion::DropClaims) => {
                self.units.values().flat_map(|u| &u.claims).filter(|c| c.hedged).count() as u64
            }
            Some(HedgeExclusion::DropUnitsIfAllHedged) => self
                .units
                .values()
                .filter(|u| u.claims.iter().all(|c| c.hedged))
                .map(|u| u.claims.len() as u64)
                .sum(),
            None => 0,
        }
    }

    pub fn objects(&self) -> BTreeMap<UnitKey, KnowledgeObject> {
        self.units
            .values()
            .map(|u| (u.key.clone(), make_object(u, &self.corpus_version, self.score_cues)))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<(), ArtifactError> {
        save(path, ArtifactKind::Units, self)
    }

    pub fn load(path: &Path) -> Result<Self, ArtifactError> {
        load(path, ArtifactKind::Units)
    }
}
