//! Tab-separated input files: predications, sentences and article metadata.
//!
//! Each file starts with a fixed header line. Rows are parsed one at a time;
//! a bad row becomes a [`RowError`] and parsing continues, unless the caller
//! asked for strict mode. The last column of each layout keeps any embedded
//! tabs.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};
use std::sync::Arc;

use knowcert_core::corpus::{format_pub_date, parse_pub_date};
use knowcert_core::{ArticleMetadata, Concept, Location, PredicationRecord, Predicate, SentenceRecord};

pub const PREDICATIONS_HEADER: [&str; 10] = [
    "PREDICATION_ID",
    "SENTENCE_ID",
    "PMID",
    "PREDICATE",
    "SUBJECT_CUI",
    "SUBJECT_NAME",
    "SUBJECT_SEMTYPES",
    "OBJECT_CUI",
    "OBJECT_NAME",
    "OBJECT_SEMTYPES",
];
pub const SENTENCES_HEADER: [&str; 5] = ["SENTENCE_ID", "PMID", "LOCATION", "ORDINAL", "TEXT"];
pub const ARTICLES_HEADER: [&str; 4] = ["PMID", "PUB_DATE", "PUB_TYPES", "MESH_HEADINGS"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for RowError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TsvError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad header: expected {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error("{0}")]
    Row(RowError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ParseMode {
    #[default]
    Lenient,
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub errors: Vec<RowError>,
    pub warnings: Vec<RowError>,
}

impl<T> Default for Parsed<T> {
    fn default() -> Self {
        Parsed {
            records: Vec::new(),
            errors: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

fn trim_eol(buf: &[u8]) -> &[u8] {
    let buf = buf.strip_suffix(b"\n").unwrap_or(buf);
    buf.strip_suffix(b"\r").unwrap_or(buf)
}

/// Drives the row loop shared by the three parsers. `row` gets the columns
/// of one non-blank line and may push warnings.
fn read_rows<R, T, F>(mut input: R, header: &[&str], mode: ParseMode, mut row: F) -> Result<Parsed<T>, TsvError>
where
    R: BufRead,
    F: FnMut(&[&str], &mut Vec<String>) -> Result<T, String>,
{
    let mut out = Parsed::default();
    let mut buf = Vec::new();
    let expected = header.join("\t");

    if input.read_until(b'\n', &mut buf)? == 0 {
        return Ok(out);
    }
    let found = String::from_utf8_lossy(trim_eol(&buf));
    if found.trim_start_matches('\u{feff}') != expected {
        return Err(TsvError::Header {
            expected,
            found: found.into_owned(),
        });
    }

    let mut notes = Vec::new();
    let mut line = 1;
    loop {
        buf.clear();
        if input.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line += 1;
        let raw = trim_eol(&buf);
        if raw.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let result = match std::str::from_utf8(raw) {
            Err(e) => Err(format!("invalid UTF-8: {e}")),
            Ok(text) => {
                let cols: Vec<&str> = text.splitn(header.len(), '\t').collect();
                if cols.len() != header.len() {
                    Err(format!("expected {} columns, found {}", header.len(), cols.len()))
                } else {
                    row(&cols, &mut notes)
                }
            }
        };
        for message in notes.drain(..) {
            out.warnings.push(RowError { line, message });
        }
        match result {
            Ok(rec) => out.records.push(rec),
            Err(message) => {
                let err = RowError { line, message };
                if mode == ParseMode::Strict {
                    return Err(TsvError::Row(err));
                }
                out.errors.push(err);
            }
        }
    }
    Ok(out)
}

fn split_list(field: &str, sep: char) -> impl Iterator<Item = &str> {
    field.split(sep).map(str::trim).filter(|s| !s.is_empty())
}

/// Shares one `Arc<Concept>` between rows naming the same concept spelling.
#[derive(Default)]
struct ConceptInterner {
    seen: HashMap<(String, String, String), Arc<Concept>>,
}

impl ConceptInterner {
    fn get(&mut self, cui: &str, name: &str, types: &str) -> Result<Arc<Concept>, String> {
        let key = (cui.to_string(), name.to_string(), types.to_string());
        if let Some(c) = self.seen.get(&key) {
            return Ok(c.clone());
        }
        let concept = Arc::new(Concept::new(cui, name, split_list(types, ',')).map_err(|e| e.to_string())?);
        self.seen.insert(key, concept.clone());
        Ok(concept)
    }
}

fn required(value: &str, column: &str) -> Result<String, String> {
    let value = value.trim();
    if value.is_empty() {
        Err(format!("empty {column}"))
    } else {
        Ok(value.to_string())
    }
}

pub fn parse_predications<R: BufRead>(input: R, mode: ParseMode) -> Result<Parsed<PredicationRecord>, TsvError> {
    let mut concepts = ConceptInterner::default();
    read_rows(input, &PREDICATIONS_HEADER, mode, |c, _| {
        Ok(PredicationRecord {
            predication_id: required(c[0], "PREDICATION_ID")?,
            sentence_id: required(c[1], "SENTENCE_ID")?,
            article_id: required(c[2], "PMID")?,
            predicate: Predicate::parse(c[3]).map_err(|e| e.to_string())?,
            subject: concepts.get(c[4], c[5], c[6])?,
            object: concepts.get(c[7], c[8], c[9])?,
        })
    })
}

pub fn parse_sentences<R: BufRead>(input: R, mode: ParseMode) -> Result<Parsed<SentenceRecord>, TsvError> {
    read_rows(input, &SENTENCES_HEADER, mode, |c, _| {
        let location = Location::from_code(c[2]).map_err(|e| e.to_string())?;
        let ordinal: u32 = c[3]
            .trim()
            .parse()
            .map_err(|_| format!("ORDINAL {:?} is not a non-negative integer", c[3]))?;
        SentenceRecord::new(c[0], c[1], location, ordinal, c[4]).map_err(|e| e.to_string())
    })
}

pub fn parse_metadata<R: BufRead>(input: R, mode: ParseMode) -> Result<Parsed<ArticleMetadata>, TsvError> {
    read_rows(input, &ARTICLES_HEADER, mode, |c, warnings| {
        let date = c[1].trim();
        let (year, month) = match parse_pub_date(date) {
            Some((y, m)) => (Some(y), m),
            None => {
                if !date.is_empty() {
                    warnings.push(format!("unparseable PUB_DATE {date:?}; year left empty"));
                }
                (None, None)
            }
        };
        ArticleMetadata::new(c[0], year, month, split_list(c[2], '|'), split_list(c[3], '|'))
            .map_err(|e| e.to_string())
    })
}

fn check_field(value: &str, last: bool) -> io::Result<&str> {
    let bad = value.contains(['\n', '\r']) || (!last && value.contains('\t'));
    if bad {
        Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            format!("field {value:?} cannot be written as a TSV cell"),
        ))
    } else {
        Ok(value)
    }
}

fn write_row<W: Write>(out: &mut W, fields: &[&str]) -> io::Result<()> {
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.write_all(b"\t")?;
        }
        out.write_all(check_field(f, i + 1 == fields.len())?.as_bytes())?;
    }
    out.write_all(b"\n")
}

fn join<'a>(items: impl IntoIterator<Item = &'a String>, sep: &str) -> String {
    items.into_iter().map(String::as_str).collect::<Vec<_>>().join(sep)
}

pub fn write_predications<W: Write>(mut out: W, records: &[PredicationRecord]) -> io::Result<()> {
    write_row(&mut out, &PREDICATIONS_HEADER)?;
    for p in records {
        let predicate = p.predicate.raw();
        let st = join(&p.subject.semantic_types, ",");
        let ot = join(&p.object.semantic_types, ",");
        write_row(
            &mut out,
            &[
                &p.predication_id,
                &p.sentence_id,
                &p.article_id,
                &predicate,
                &p.subject.cui,
                &p.subject.preferred_name,
                &st,
                &p.object.cui,
                &p.object.preferred_name,
                &ot,
            ],
        )?;
    }
    Ok(())
}

pub fn write_sentences<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = &'a SentenceRecord>,
) -> io::Result<()> {
    write_row(&mut out, &SENTENCES_HEADER)?;
    for s in records {
        let ordinal = s.ordinal.to_string();
        write_row(&mut out, &[&s.sentence_id, &s.article_id, s.location.code(), &ordinal, &s.text])?;
    }
    Ok(())
}

pub fn write_metadata<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = &'a ArticleMetadata>,
) -> io::Result<()> {
    write_row(&mut out, &ARTICLES_HEADER)?;
    for a in records {
        let date = format_pub_date(a.pub_year, a.pub_month);
        let pts = join(&a.publication_types, "|");
        let mesh = join(&a.mesh_headings, "|");
        write_row(&mut out, &[&a.article_id, &date, &pts, &mesh])?;
    }
    Ok(())
}
