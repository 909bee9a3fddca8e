//! Large synthetic corpora, streamed straight to disk.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DISAGREEMENT, EXCITATORY, HEDGES, INHIBITORY, NEUTRAL};

const WORDS: [&str; 16] = [
    "patients", "cohort", "risk", "therapy", "dose", "trial", "outcome", "serum", "levels", "exposure", "incidence",
    "response", "treatment", "reduced", "increased", "associated",
];

/// Writes `n` predications over `n / 2` sentences and `n / 8` articles.
/// Returns the three paths in ingest order.
pub fn write_scale_corpus(dir: &Path, n: usize, seed: u64) -> std::io::Result<[PathBuf; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = [dir.join("predications.tsv"), dir.join("sentences.tsv"), dir.join("articles.tsv")];
    let n_sentences = (n / 2).max(1);
    let n_articles = (n / 8).max(1);
    let drugs = 4000usize;
    let diseases = 1500usize;

    let mut a = BufWriter::new(File::create(&paths[2])?);
    writeln!(a, "PMID\tPUB_DATE\tPUB_TYPES\tMESH_HEADINGS")?;
    for i in 0..n_articles {
        writeln!(a, "{}\t{} Mar\tRandomized Controlled Trial|Comparative Study\tHumans", 10_000_000 + i, 1980 + i % 40)?;
    }
    a.flush()?;

    let mut s = BufWriter::new(File::create(&paths[1])?);
    writeln!(s, "SENTENCE_ID\tPMID\tLOCATION\tORDINAL\tTEXT")?;
    let sentence_id = |i: usize| {
        let pmid = 10_000_000 + i % n_articles;
        let ord = i / n_articles + 1;
        (format!("{pmid}.ab.{ord}"), pmid, ord)
    };
    let mut text = String::new();
    for i in 0..n_sentences {
        let (sid, pmid, ord) = sentence_id(i);
        text.clear();
        for k in 0..rng.gen_range(8..20) {
            if k > 0 {
                text.push(' ');
            }
            text.push_str(WORDS.choose(&mut rng).unwrap());
        }
        if rng.gen_bool(0.2) {
            text.push(' ');
            text.push_str(HEDGES.choose(&mut rng).unwrap());
        }
        if rng.gen_bool(0.05) {
            text.push(' ');
            text.push_str(DISAGREEMENT.choose(&mut rng).unwrap());
        }
        text.push('.');
        writeln!(s, "{sid}\t{pmid}\tab\t{ord}\t{text}")?;
    }
    s.flush()?;

    let mut p = BufWriter::new(File::create(&paths[0])?);
    writeln!(
        p,
        "PREDICATION_ID\tSENTENCE_ID\tPMID\tPREDICATE\tSUBJECT_CUI\tSUBJECT_NAME\tSUBJECT_SEMTYPES\tOBJECT_CUI\tOBJECT_NAME\tOBJECT_SEMTYPES"
    )?;
    for i in 0..n {
        let (sid, pmid, _) = sentence_id(rng.gen_range(0..n_sentences));
        let predicate = match rng.gen_range(0..10) {
            0..=3 => EXCITATORY.choose(&mut rng).unwrap(),
            4..=7 => INHIBITORY.choose(&mut rng).unwrap(),
            _ => NEUTRAL.choose(&mut rng).unwrap(),
        };
        let d = rng.gen_range(0..drugs);
        let o = rng.gen_range(0..diseases);
        writeln!(
            p,
            "{}\t{sid}\t{pmid}\t{predicate}\tC1{d:06}\tDrug {d}\tphsu,orch\tC2{o:06}\tDisease {o}\tdsyn",
            i + 1
        )?;
    }
    p.flush()?;
    Ok(paths)
}
