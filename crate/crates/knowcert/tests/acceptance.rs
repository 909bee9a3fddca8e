//! Acceptance checks. One PASS/FAIL line per criterion; the process exits
//! non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::curation::{observed_curation, random_decisions, reference_curation};
use common::{exclusivity_violations, generate, hedged_ids, observed, reference, GenParams};
use knowcert::decision_log::{replay, DecisionLog};
use knowcert::pipeline::{self, PipelineConfig};
use knowcert_core::{
    apply_decisions, contradiction_table, CurationDecision, CurationState, Finding, FindingKind, Group, Polarity,
    PolarityTable, Predicate, Verdict,
};
use rand::seq::SliceRandom;
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn ingest_and_detect(name: &str) -> (pipeline::PipelineRun, Duration) {
    timed(|| {
        let [p, s, a] = common::fixture_files(name);
        let corpus = pipeline::ingest_files(&p, &s, &a, true).unwrap().corpus;
        pipeline::run(corpus, &common::shipped())
    })
}

fn pair_kinds(findings: &[Finding]) -> (usize, usize, usize) {
    let count = |k| findings.iter().filter(|f| f.kind() == k).count();
    (
        count(FindingKind::Contradiction),
        count(FindingKind::Diversity),
        count(FindingKind::Apparent),
    )
}

fn raws(s: &[knowcert_core::PredicateSupport]) -> Vec<String> {
    s.iter().map(|p| p.predicate.raw()).collect()
}

fn cotinine_contradiction() -> Check {
    let (run, took) = ingest_and_detect("contradiction");
    let (c, d, _) = pair_kinds(&run.findings);
    ensure(c == 1 && d == 0, || format!("{c} contradictions, {d} diversity"))?;
    let Some(Finding::Contradiction(f)) = run.findings.iter().find(|f| f.kind() == FindingKind::Contradiction) else {
        unreachable!()
    };
    ensure(raws(&f.excitatory) == ["PREDISPOSES"] && raws(&f.inhibitory) == ["NEG_PREDISPOSES"], || {
        format!("sides {:?} / {:?}", raws(&f.excitatory), raws(&f.inhibitory))
    })?;
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!("{{PREDISPOSES}} vs {{NEG_PREDISPOSES}} in {took:.2?}"))
}

fn selenium_diversity() -> Check {
    let (run, took) = ingest_and_detect("diversity");
    let (c, d, _) = pair_kinds(&run.findings);
    ensure(c == 0 && d == 1, || format!("{c} contradictions, {d} diversity"))?;
    let Some(Finding::Diversity(f)) = run.findings.iter().find(|f| f.kind() == FindingKind::Diversity) else {
        unreachable!()
    };
    ensure(f.group == Group::Inhibitory, || format!("group {:?}", f.group))?;
    ensure(raws(&f.labels) == ["PREVENTS", "TREATS"], || format!("labels {:?}", raws(&f.labels)))?;
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))?;
    Ok(format!("{{PREVENTS, TREATS}} inhibitory, no contradiction, in {took:.2?}"))
}

fn beta_carotene_topic() -> Check {
    let (run, _) = ingest_and_detect("topic2");
    let table = contradiction_table(&run.findings);
    ensure(table.rows.len() == 1, || format!("{} rows", table.rows.len()))?;
    let row = &table.rows[0];
    let want = "AUGMENTS (2) NEG_PREVENTS (3) PREDISPOSES (3) PREVENTS (1)";
    ensure(row.get("predicates") == Some(want), || format!("predicates {:?}", row.get("predicates")))?;
    ensure(
        row.get("subject") == Some("Beta Carotene") && row.get("object_cui") == Some("C0242379"),
        || format!("row {:?}", row.cells),
    )?;
    Ok(want.to_string())
}

fn aspirin_cue() -> Check {
    let (run, _) = ingest_and_detect("apparent");
    let apparent: Vec<_> = run
        .findings
        .iter()
        .filter_map(|f| match f {
            Finding::Apparent(a) => Some(a),
            _ => None,
        })
        .collect();
    ensure(apparent.len() == 4, || format!("{} apparent findings", apparent.len()))?;
    let aspirin = apparent
        .iter()
        .find(|a| a.claim.sentence_id == "18187393.ab.1")
        .ok_or("no finding for the aspirin sentence")?;
    ensure(
        aspirin.cue == "contradictory"
            && aspirin.subject_name == "Aspirin"
            && aspirin.unit_key.predicate.raw() == "PREVENTS"
            && aspirin.object_name == "Non-Small Cell Lung Carcinoma",
        || format!("{aspirin:?}"),
    )?;
    let table = knowcert_core::apparent_table(&run.findings, &run.corpus);
    let first = &table.rows[0];
    ensure(first.get("date") == Some("1999 Oct"), || format!("first row {:?}", first.cells))?;
    Ok("Aspirin-PREVENTS-Non-Small Cell Lung Carcinoma tagged \"contradictory\"".into())
}

const TABLE_E: [&str; 10] = [
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
const TABLE_I: [&str; 10] = [
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

fn polarity_suite() -> Check {
    let t = PolarityTable::default();
    for p in TABLE_E {
        ensure(t.polarity(&Predicate::parse(p).unwrap()) == Polarity::Excitatory, || format!("{p} not E"))?;
    }
    for p in TABLE_I {
        ensure(t.polarity(&Predicate::parse(p).unwrap()) == Polarity::Inhibitory, || format!("{p} not I"))?;
    }
    ensure(t.len() == 20, || format!("table has {} entries", t.len()))?;

    let mut rng = common::rng(5);
    let bases: Vec<String> = TABLE_E
        .iter()
        .chain(&TABLE_I)
        .map(|p| p.trim_start_matches("NEG_").to_string())
        .chain(["COEXISTS_WITH", "INTERACTS_WITH", "ISA", "LOCATION_OF"].map(String::from))
        .collect();
    for _ in 0..1000 {
        let base = if rng.gen_bool(0.2) {
            (0..rng.gen_range(3..9)).map(|_| rng.gen_range(b'A'..=b'Z') as char).collect()
        } else {
            bases.choose(&mut rng).unwrap().clone()
        };
        let a = Predicate::new(&base, rng.gen_bool(0.5)).unwrap();
        let b = Predicate::new(bases.choose(&mut rng).unwrap(), rng.gen_bool(0.5)).unwrap();
        let pa = t.polarity(&a);
        ensure(a.flip().flip() == a, || format!("double flip of {a}"))?;
        let flipped = t.polarity(&a.flip());
        let law = match pa {
            Polarity::Excitatory => flipped == Polarity::Inhibitory,
            Polarity::Inhibitory => flipped == Polarity::Excitatory,
            Polarity::Neutral => flipped == Polarity::Neutral,
        };
        ensure(law, || format!("flip law fails for {a}: {pa:?} -> {flipped:?}"))?;
        ensure(t.contradicts(&a, &b) == t.contradicts(&b, &a), || format!("asymmetric on {a}, {b}"))?;
        ensure(!t.contradicts(&a, &a), || format!("{a} contradicts itself"))?;
        ensure(
            t.contradicts(&a, &a.flip()) == (pa != Polarity::Neutral),
            || format!("{a} vs its negation"),
        )?;
        let expect = matches!(
            (pa, t.polarity(&b)),
            (Polarity::Excitatory, Polarity::Inhibitory) | (Polarity::Inhibitory, Polarity::Excitatory)
        );
        ensure(t.contradicts(&a, &b) == expect, || format!("contradicts({a}, {b})"))?;
    }
    Ok("20 memberships, flip, symmetry and exclusivity laws over 1000 random predicates".into())
}

fn random_corpora() -> Check {
    let params = GenParams::default();
    let cfg = common::unfiltered();
    let (res, took) = timed(|| -> Result<usize, String> {
        let mut findings_total = 0;
        for seed in 0..200u64 {
            let raw = generate(seed, &params);
            let h = raw.hedged_fraction();
            ensure(raw.predications.len() <= 500 && (0.10..=0.40).contains(&h), || {
                format!("seed {seed}: {} rows, hedged {h:.2}", raw.predications.len())
            })?;
            let run = pipeline::run(raw.ingest(), &cfg);
            let got = observed(&run.findings);
            let want = reference(&raw, &BTreeSet::new());
            ensure(got == want, || format!("seed {seed}: detector and reference differ"))?;
            let hedged = hedged_ids(&raw);
            let leaked = run
                .findings
                .iter()
                .flat_map(|f| f.evidence_ids())
                .filter(|id| hedged.contains(*id))
                .count();
            ensure(leaked == 0, || format!("seed {seed}: {leaked} hedged claims in findings"))?;
            ensure(exclusivity_violations(&run.findings) == 0, || format!("seed {seed}: pair in both kinds"))?;
            findings_total += run.findings.len();
        }
        Ok(findings_total)
    });
    let n = res?;
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("200 corpora, {n} findings, equal to the pairwise reference, in {took:.2?}"))
}

fn hedging() -> Check {
    let hedged = pipeline::run(common::load_fixture("hedged"), &common::shipped());
    let in_findings = |run: &pipeline::PipelineRun| {
        run.findings.iter().any(|f| f.evidence_ids().contains(&"501"))
    };
    ensure(!in_findings(&hedged), || "hedged claim appears in a finding".into())?;
    ensure(hedged.findings.is_empty(), || format!("{} findings with the hedge", hedged.findings.len()))?;
    let plain = pipeline::run(common::load_fixture("unhedged"), &common::shipped());
    let (c, _, a) = pair_kinds(&plain.findings);
    ensure(in_findings(&plain) && c == 1 && a == 1, || {
        format!("without the hedge: {c} contradictions, {a} apparent")
    })?;
    Ok("\"may treat\" excluded from every finding; re-admitted without \"may\"".into())
}

fn curation_replay() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = common::unfiltered();
    let mut checked = 0;
    for seed in 0..4u64 {
        let raw = generate(1000 + seed, &GenParams {
            min_predications: 150,
            max_predications: 300,
            ..GenParams::default()
        });
        let run = pipeline::run(raw.ingest(), &cfg);
        let working = run.units.working_units().into_owned();
        let mut rng = common::rng(seed);
        let decisions = random_decisions(&mut rng, &run.findings, 60);
        let path = dir.path().join(format!("log{seed}.jsonl"));
        let mut log = DecisionLog::open(&path).map_err(|e| e.to_string())?;
        for d in decisions {
            log.append(d).map_err(|e| e.to_string())?;
        }
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        let mut boundaries = vec![0];
        boundaries.extend(bytes.iter().enumerate().filter(|(_, b)| **b == b'\n').map(|(i, _)| i + 1));
        ensure(boundaries.len() == 61, || format!("{} boundaries", boundaries.len()))?;
        for (k, &b) in boundaries.iter().enumerate() {
            let replayed = replay(&bytes[..b]).map_err(|e| format!("prefix {k}: {e}"))?;
            ensure(replayed.entries.len() == k && !replayed.torn_tail, || format!("prefix {k} replays wrong"))?;
            let cur = apply_decisions(&run.findings, &working, &replayed.entries, &cfg.polarity, &cfg.detect);
            let again = apply_decisions(&cur.findings, &working, &replayed.entries, &cfg.polarity, &cfg.detect);
            let want = reference_curation(&raw, &run.findings, &replayed.entries);
            ensure(observed_curation(&cur.findings) == want, || {
                format!("seed {seed}, prefix {k}: curated output differs from re-detection")
            })?;
            ensure(
                observed_curation(&again.findings) == want,
                || format!("seed {seed}, prefix {k}: apply is not idempotent"),
            )?;
            ensure(cur.findings.len() + cur.removed.len() == run.findings.len(), || {
                format!("seed {seed}, prefix {k}: findings lost")
            })?;
            checked += 1;
        }
    }
    reclassification()?;
    Ok(format!("{checked} log prefixes match re-detection; sre_error reclassifies contradiction to diversity"))
}

fn reclassification() -> Result<(), String> {
    let run = pipeline::run(common::load_fixture("reclassify"), &common::shipped());
    let f = run
        .findings
        .iter()
        .find(|f| f.kind() == FindingKind::Contradiction)
        .ok_or("reclassify fixture has no contradiction")?;
    let d = CurationDecision {
        finding_id: f.id().into(),
        verdict: Verdict::SreError,
        affected_claims: vec!["203".into()],
        category_label: None,
        curator: "ann".into(),
        timestamp: chrono::Utc::now(),
        note: None,
        content_hash: f.content_hash().into(),
    };
    knowcert_core::validate_decision(&d, &[f]).map_err(|e| e.to_string())?;
    let log = vec![knowcert_core::LoggedDecision::new(0, d)];
    let (_, curated) = pipeline::curate(&run_header(), &run.findings, &run.units, &log).map_err(|e| e.to_string())?;
    let now = curated.iter().find(|g| g.id() == f.id()).ok_or("finding vanished")?;
    match now {
        Finding::Diversity(d) if d.group == Group::Inhibitory && raws(&d.labels) == ["PREVENTS", "TREATS"] => {
            ensure(now.state() == CurationState::Reclassified, || format!("state {:?}", now.state()))
        }
        other => Err(format!("after sre_error: {other:?}")),
    }
}

fn run_header() -> knowcert::findings::FindingsHeader {
    common::shipped().findings_header()
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_knowcert")
}

fn run_cli(paths: &[std::path::PathBuf; 3], out: &Path) -> Result<(), String> {
    let status = Command::new(bin())
        .args(["run", "--predications"])
        .arg(&paths[0])
        .arg("--sentences")
        .arg(&paths[1])
        .arg("--articles")
        .arg(&paths[2])
        .arg("--out-dir")
        .arg(out)
        .env("RUST_LOG", "error")
        .status()
        .map_err(|e| e.to_string())?;
    ensure(status.success(), || format!("knowcert run failed: {status}"))
}

fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = vec![("findings.jsonl".to_string(), std::fs::read(dir.join("findings.jsonl")).unwrap())];
    let mut reports: Vec<_> = std::fs::read_dir(dir.join("reports"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    reports.sort();
    for r in reports {
        files.push((r.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&r).unwrap()));
    }
    files
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for seed in 0..5u64 {
        let raw = generate(2000 + seed, &GenParams::default());
        let base_in = dir.path().join(format!("in{seed}"));
        std::fs::create_dir_all(&base_in).unwrap();
        let base_out = dir.path().join(format!("out{seed}"));
        run_cli(&raw.write_to(&base_in), &base_out)?;
        let expect = outputs(&base_out);
        ensure(expect.len() == 13, || format!("{} output files", expect.len()))?;
        let mut rng = common::rng(seed);
        for k in 0..3 {
            let shuffled = raw.shuffled(&mut rng);
            let input = dir.path().join(format!("in{seed}-{k}"));
            std::fs::create_dir_all(&input).unwrap();
            let out = dir.path().join(format!("out{seed}-{k}"));
            run_cli(&shuffled.write_to(&input), &out)?;
            for ((name, a), (_, b)) in expect.iter().zip(outputs(&out)) {
                ensure(*a == b, || format!("seed {seed}, permutation {k}: {name} differs"))?;
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} output files byte-identical across row permutations"))
}

fn status_kb(field: &str) -> Option<u64> {
    let s = std::fs::read_to_string("/proc/self/status").ok()?;
    s.lines()
        .find(|l| l.starts_with(field))
        .and_then(|l| l.split_whitespace().nth(1))
        .and_then(|v| v.parse().ok())
}

fn scale_smoke() -> Check {
    const N: usize = 1_000_000;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let paths = common::scale::write_scale_corpus(dir.path(), N, 42).map_err(|e| e.to_string())?;
    // reset the peak so generation does not count
    let reset = std::fs::write("/proc/self/clear_refs", "5").is_ok();
    let cfg: PipelineConfig = common::shipped();
    let ((preds, findings), took) = timed(|| {
        let corpus = pipeline::ingest_files(&paths[0], &paths[1], &paths[2], false).unwrap().corpus;
        let n = corpus.predications().len();
        let run = pipeline::run(corpus, &cfg);
        (n, run.findings.len())
    });
    let peak_kb = status_kb("VmHWM:").ok_or("no VmHWM in /proc/self/status")?;
    let peak_mb = peak_kb / 1024;
    ensure(preds == N, || format!("ingested {preds} predications"))?;
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    ensure(peak_mb < 2048, || format!("peak RSS {peak_mb} MiB"))?;
    Ok(format!(
        "{N} predications, {findings} findings in {took:.2?}, peak RSS {peak_mb} MiB{}",
        if reset { "" } else { " (peak not reset)" }
    ))
}

fn main() {
    let checks: [(&str, fn() -> Check); 10] = [
        ("cotinine pair yields one contradiction", cotinine_contradiction),
        ("selenium pair yields inhibitory diversity", selenium_diversity),
        ("beta carotene topic counts", beta_carotene_topic),
        ("aspirin sentence carries its cue", aspirin_cue),
        ("polarity table and laws", polarity_suite),
        ("random corpora match the pairwise reference", random_corpora),
        ("hedged claims stay out of findings", hedging),
        ("decision log replay and reclassification", curation_replay),
        ("outputs independent of row order", determinism),
        ("one million predications", scale_smoke),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS  {:>2}  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  {:>2}  {name}: {why}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
