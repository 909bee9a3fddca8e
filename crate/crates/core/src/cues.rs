//! Sentence-level uncertainty cues: hedges ("may", "could", "might") and
//! explicit disagreement ("conflicting", "controversial", "contradictory").
//!
//! Matching is whole-token and case-insensitive. A token is a maximal run of
//! letters, digits and hyphens; apostrophes and all other characters split
//! tokens, so "Maybe" and "dismayed" never match "may".

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::borrow::Borrow;

use serde::{Deserialize, Serialize};

use crate::corpus::{ClaimCorpus, SentenceRecord};

const DEFAULT_LEXICON: &str = include_str!("../defaults/lexicon.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueClass {
    Hedge,
    Disagreement,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LexiconError {
    #[error("empty lexicon term")]
    EmptyTerm,
    #[error("lexicon term {0:?} is not lower-case")]
    NotLowercase(String),
    #[error("lexicon term {0:?} is not a single token")]
    NotSingleToken(String),
    #[error("line {line}: unknown cue class {class:?} (expected hedge or disagreement)")]
    UnknownClass { line: usize, class: String },
    #[error("line {line}: proximity windows are not supported yet; leave the window column empty")]
    WindowUnsupported { line: usize },
    #[error("line {line}: too many columns")]
    TooManyColumns { line: usize },
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: alloc::boxed::Box<LexiconError>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueLexicon {
    hedges: BTreeSet<String>,
    disagreement: BTreeSet<String>,
}

impl Default for CueLexicon {
    fn default() -> Self {
        CueLexicon::parse(DEFAULT_LEXICON).expect("embedded lexicon is valid")
    }
}

impl CueLexicon {
    pub fn empty() -> Self {
        CueLexicon {
            hedges: BTreeSet::new(),
            disagreement: BTreeSet::new(),
        }
    }

    pub fn new<H, D, S, T>(hedges: H, disagreement: D) -> Result<Self, LexiconError>
    where
        H: IntoIterator<Item = S>,
        D: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        let mut lex = CueLexicon::empty();
        for h in hedges {
            lex.insert(CueClass::Hedge, h.as_ref())?;
        }
        for d in disagreement {
            lex.insert(CueClass::Disagreement, d.as_ref())?;
        }
        Ok(lex)
    }

    /// Parses the lexicon file format: one term per line, then an optional
    /// tab-separated class (`hedge` when omitted) and a reserved window
    /// column. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut lex = CueLexicon::empty();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let mut cols = raw.split('\t');
            let term = cols.next().unwrap_or_default();
            let class = match cols.next().map(str::trim) {
                None | Some("") | Some("hedge") => CueClass::Hedge,
                Some("disagreement") => CueClass::Disagreement,
                Some(other) => {
                    return Err(LexiconError::UnknownClass {
                        line,
                        class: other.to_string(),
                    })
                }
            };
            if let Some(window) = cols.next() {
                if !window.trim().is_empty() {
                    return Err(LexiconError::WindowUnsupported { line });
                }
            }
            if cols.next().is_some() {
                return Err(LexiconError::TooManyColumns { line });
            }
            lex.insert(class, term).map_err(|e| LexiconError::Line {
                line,
                source: alloc::boxed::Box::new(e),
            })?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, class: CueClass, term: &str) -> Result<(), LexiconError> {
        let term = term.trim();
        if term.is_empty() {
            return Err(LexiconError::EmptyTerm);
        }
        if term.to_lowercase() != term {
            return Err(LexiconError::NotLowercase(term.to_string()));
        }
        if !term.chars().all(is_token_char) {
            return Err(LexiconError::NotSingleToken(term.to_string()));
        }
        match class {
            CueClass::Hedge => self.hedges.insert(term.to_string()),
            CueClass::Disagreement => self.disagreement.insert(term.to_string()),
        };
        Ok(())
    }

    pub fn hedges(&self) -> &BTreeSet<String> {
        &self.hedges
    }

    pub fn disagreement(&self) -> &BTreeSet<String> {
        &self.disagreement
    }

    fn length_bounds(&self) -> (usize, usize) {
        self.hedges
            .iter()
            .chain(&self.disagreement)
            .fold((usize::MAX, 0), |(lo, hi), t| (lo.min(t.len()), hi.max(t.len())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CueHit {
    pub term: String,
    /// Byte offset of the matched token in the sentence text.
    pub offset: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueTags {
    pub sentence_id: String,
    pub hedge_hits: Vec<CueHit>,
    pub disagreement_hits: Vec<CueHit>,
}

impl CueTags {
    pub fn is_hedged(&self) -> bool {
        !self.hedge_hits.is_empty()
    }

    /// Distinct disagreement terms, in lexicographic order.
    pub fn disagreement_terms(&self) -> BTreeSet<&str> {
        self.disagreement_hits.iter().map(|h| h.term.as_str()).collect()
    }
}

/// Tags for every sentence of a corpus, keyed by sentence id.
pub type TagMap = BTreeMap<String, CueTags>;

pub fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '-'
}

/// Iterates `(byte_offset, token)` over the tokens of `text`.
pub fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut start: Option<usize> = None;
    let mut chars = text.char_indices().chain(core::iter::once((text.len(), ' ')));
    core::iter::from_fn(move || {
        for (i, c) in chars.by_ref() {
            match (start, is_token_char(c)) {
                (None, true) => start = Some(i),
                (Some(s), false) => {
                    start = None;
                    return Some((s, &text[s..i]));
                }
                _ => {}
            }
        }
        None
    })
}

fn lookup<'l>(set: &'l BTreeSet<String>, token: &str) -> Option<&'l String> {
    if token.bytes().all(|b| !b.is_ascii_uppercase()) && token.is_ascii() {
        return set.get(token);
    }
    let lower = token.to_lowercase();
    // a case fold that changes the byte length would break offset slicing
    if lower.len() != token.len() {
        return None;
    }
    set.get::<str>(lower.borrow())
}

/// Tags one piece of text. Every occurrence of a lexicon term is reported.
pub fn tag_text(text: &str, lex: &CueLexicon) -> (Vec<CueHit>, Vec<CueHit>) {
    let mut hedges = Vec::new();
    let mut disagreements = Vec::new();
    let (min_len, max_len) = lex.length_bounds();
    for (offset, token) in tokens(text) {
        if token.len() < min_len || token.len() > max_len {
            continue;
        }
        if let Some(term) = lookup(&lex.hedges, token) {
            hedges.push(CueHit {
                term: term.clone(),
                offset,
            });
        }
        if let Some(term) = lookup(&lex.disagreement, token) {
            disagreements.push(CueHit {
                term: term.clone(),
                offset,
            });
        }
    }
    (hedges, disagreements)
}

pub fn tag_sentence(sentence: &SentenceRecord, lex: &CueLexicon) -> CueTags {
    let (hedge_hits, disagreement_hits) = tag_text(&sentence.text, lex);
    CueTags {
        sentence_id: sentence.sentence_id.clone(),
        hedge_hits,
        disagreement_hits,
    }
}

pub fn is_hedged(sentence: &SentenceRecord, lex: &CueLexicon) -> bool {
    let (min_len, max_len) = lex.length_bounds();
    tokens(&sentence.text)
        .filter(|(_, t)| t.len() >= min_len && t.len() <= max_len)
        .any(|(_, t)| lookup(&lex.hedges, t).is_some())
}

/// One [`CueTags`] per corpus sentence; sentences without cues get empty lists.
pub fn tag_corpus(corpus: &ClaimCorpus, lex: &CueLexicon) -> TagMap {
    corpus
        .sentences()
        .iter()
        .map(|(id, s)| (id.clone(), tag_sentence(s, lex)))
        .collect()
}
