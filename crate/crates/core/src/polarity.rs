//! Excitatory/inhibitory predicate grouping and the contradiction rule.
//!
//! Two claims about the same concept pair contradict when one predicate is
//! excitatory and the other inhibitory. Predicates outside both groups are
//! neutral and never contradict anything.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::corpus::Predicate;

const DEFAULT_TABLE: &str = include_str!("../defaults/polarity.tsv");
const HEADER: &str = "PREDICATE\tGROUP";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "E")]
    Excitatory,
    #[serde(rename = "I")]
    Inhibitory,
}

impl Group {
    pub fn code(self) -> &'static str {
        match self {
            Group::Excitatory => "E",
            Group::Inhibitory => "I",
        }
    }

    pub fn opposite(self) -> Group {
        match self {
            Group::Excitatory => Group::Inhibitory,
            Group::Inhibitory => Group::Excitatory,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Excitatory,
    Inhibitory,
    Neutral,
}

impl Polarity {
    pub fn group(self) -> Option<Group> {
        match self {
            Polarity::Excitatory => Some(Group::Excitatory),
            Polarity::Inhibitory => Some(Group::Inhibitory),
            Polarity::Neutral => None,
        }
    }
}

impl From<Group> for Polarity {
    fn from(g: Group) -> Self {
        match g {
            Group::Excitatory => Polarity::Excitatory,
            Group::Inhibitory => Polarity::Inhibitory,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolarityError {
    #[error("polarity table header must be {HEADER:?}")]
    BadHeader,
    #[error("line {line}: expected two tab-separated columns")]
    BadRow { line: usize },
    #[error("line {line}: unknown group {group:?} (expected E or I)")]
    UnknownGroup { line: usize, group: String },
    #[error("line {line}: invalid predicate {raw:?}")]
    BadPredicate { line: usize, raw: String },
    #[error("{0} is listed in both groups")]
    InBothGroups(String),
    #[error("{predicate} is in group {group} but {flipped} is not in the opposite group")]
    FlipInconsistent {
        predicate: String,
        group: &'static str,
        flipped: String,
    },
}

/// Predicate grouping. Built only through validated constructors: the groups
/// are disjoint and flipping the negation of any listed predicate lands in
/// the opposite group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct PolarityTable {
    excitatory: BTreeSet<Predicate>,
    inhibitory: BTreeSet<Predicate>,
}

#[derive(Deserialize)]
struct RawTable {
    excitatory: BTreeSet<Predicate>,
    inhibitory: BTreeSet<Predicate>,
}

impl TryFrom<RawTable> for PolarityTable {
    type Error = PolarityError;

    fn try_from(raw: RawTable) -> Result<Self, Self::Error> {
        let e = raw.excitatory.into_iter().map(|p| (p, Group::Excitatory));
        let i = raw.inhibitory.into_iter().map(|p| (p, Group::Inhibitory));
        PolarityTable::from_entries(e.chain(i))
    }
}

impl Default for PolarityTable {
    fn default() -> Self {
        PolarityTable::parse_tsv(DEFAULT_TABLE).expect("embedded polarity table is valid")
    }
}

impl PolarityTable {
    pub fn from_entries<I>(entries: I) -> Result<Self, PolarityError>
    where
        I: IntoIterator<Item = (Predicate, Group)>,
    {
        let mut excitatory = BTreeSet::new();
        let mut inhibitory = BTreeSet::new();
        for (p, g) in entries {
            match g {
                Group::Excitatory => excitatory.insert(p),
                Group::Inhibitory => inhibitory.insert(p),
            };
        }
        if let Some(p) = excitatory.intersection(&inhibitory).next() {
            return Err(PolarityError::InBothGroups(p.to_string()));
        }
        for (set, other, group) in [
            (&excitatory, &inhibitory, Group::Excitatory),
            (&inhibitory, &excitatory, Group::Inhibitory),
        ] {
            for p in set {
                let flipped = p.flip();
                if !other.contains(&flipped) {
                    return Err(PolarityError::FlipInconsistent {
                        predicate: p.to_string(),
                        group: group.code(),
                        flipped: flipped.to_string(),
                    });
                }
            }
        }
        Ok(PolarityTable {
            excitatory,
            inhibitory,
        })
    }

    /// Parses the `PREDICATE<TAB>GROUP` file format. Blank lines and `#`
    /// comments after the header are ignored.
    pub fn parse_tsv(text: &str) -> Result<Self, PolarityError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end_matches('\r') == HEADER => {}
            _ => return Err(PolarityError::BadHeader),
        }
        let mut entries = alloc::vec::Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let mut cols = raw.split('\t');
            let (Some(name), Some(group), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(PolarityError::BadRow { line });
            };
            let group = match group.trim() {
                "E" => Group::Excitatory,
                "I" => Group::Inhibitory,
                other => {
                    return Err(PolarityError::UnknownGroup {
                        line,
                        group: other.to_string(),
                    })
                }
            };
            let predicate = Predicate::parse(name).map_err(|_| PolarityError::BadPredicate {
                line,
                raw: name.to_string(),
            })?;
            entries.push((predicate, group));
        }
        PolarityTable::from_entries(entries)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for (set, code) in [(&self.excitatory, "E"), (&self.inhibitory, "I")] {
            for p in set {
                out.push_str(&p.to_string());
                out.push('\t');
                out.push_str(code);
                out.push('\n');
            }
        }
        out
    }

    pub fn excitatory(&self) -> &BTreeSet<Predicate> {
        &self.excitatory
    }

    pub fn inhibitory(&self) -> &BTreeSet<Predicate> {
        &self.inhibitory
    }

    pub fn len(&self) -> usize {
        self.excitatory.len() + self.inhibitory.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn polarity(&self, p: &Predicate) -> Polarity {
        if self.excitatory.contains(p) {
            Polarity::Excitatory
        } else if self.inhibitory.contains(p) {
            Polarity::Inhibitory
        } else {
            Polarity::Neutral
        }
    }

    /// True iff one predicate is excitatory and the other inhibitory.
    pub fn contradicts(&self, a: &Predicate, b: &Predicate) -> bool {
        matches!(
            (self.polarity(a), self.polarity(b)),
            (Polarity::Excitatory, Polarity::Inhibitory) | (Polarity::Inhibitory, Polarity::Excitatory)
        )
    }
}
