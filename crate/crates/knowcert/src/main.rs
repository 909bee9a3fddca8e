use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use knowcert_core::{
    filter_corpus, make_object, tag_corpus, timeline, CueScope, DetectOptions, HedgeExclusion, ReportKind, ScoreCues,
};
use knowcert::artifact::{CorpusArtifact, TagsArtifact, UnitsArtifact};
use knowcert::decision_log::{read_log, DecisionLog};
use knowcert::findings::{load_findings, save_findings};
use knowcert::pipeline::{self, PipelineConfig, UnitSettings};
use knowcert::render::{render, Format};
use knowcert::service::{self, AppState, ServiceInputs};
use knowcert::config;
use tracing::{info, warn};

#[derive(Parser)]
#[command(name = "knowcert", version, about = "Uncertainty-aware knowledge objects from semantic predications")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and link the three TSV inputs into a corpus artifact.
    Ingest(IngestArgs),
    /// Keep drug-disease claims from qualifying articles.
    Filter(FilterArgs),
    /// Tag hedging and disagreement cues in every sentence.
    Tag(TagArgs),
    /// Group claims into knowledge units.
    Units(UnitsArgs),
    /// Print one knowledge object with its score and timeline.
    Show(ShowArgs),
    /// Find contradiction, diversity and apparent-disagreement findings.
    Detect(DetectArgs),
    /// Replay the decision log over detector output.
    Apply(ApplyArgs),
    /// Render a report from a findings file.
    Report(ReportArgs),
    /// Serve the curation API.
    Serve(ServeArgs),
    /// Run every stage from the TSV inputs into one directory.
    Run(RunArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    predications: PathBuf,
    #[arg(long)]
    sentences: PathBuf,
    #[arg(long)]
    articles: PathBuf,
    /// Fail on the first malformed row or dangling reference.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PolicyArgs {
    #[arg(long)]
    evidence_policy: Option<PathBuf>,
    #[arg(long)]
    concept_policy: Option<PathBuf>,
    #[arg(long)]
    excluded_cuis: Option<PathBuf>,
}

#[derive(Args)]
struct FilterArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    policy: PolicyArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TagArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExcludeHedged {
    /// Drop hedged claims, keep the rest of the unit.
    DropClaims,
    /// Drop a unit only when every claim is hedged.
    DropUnits,
    None,
}

impl ExcludeHedged {
    fn mode(self) -> Option<HedgeExclusion> {
        match self {
            ExcludeHedged::DropClaims => Some(HedgeExclusion::DropClaims),
            ExcludeHedged::DropUnits => Some(HedgeExclusion::DropUnitsIfAllHedged),
            ExcludeHedged::None => None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScoreWith {
    Hedge,
    All,
}

#[derive(Args)]
struct UnitOptions {
    #[arg(long, value_enum, default_value = "drop-claims")]
    exclude_hedged: ExcludeHedged,
    #[arg(long, default_value = "unversioned")]
    corpus_version: String,
    /// Which cues count toward the uncertainty score.
    #[arg(long, value_enum, default_value = "all")]
    score_cues: ScoreWith,
}

impl UnitOptions {
    fn settings(&self) -> UnitSettings {
        UnitSettings {
            corpus_version: self.corpus_version.clone(),
            exclusion: self.exclude_hedged.mode(),
            score_cues: match self.score_cues {
                ScoreWith::Hedge => ScoreCues::Hedge,
                ScoreWith::All => ScoreCues::All,
            },
        }
    }
}

#[derive(Args)]
struct UnitsArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Tags from `tag`; without them the corpus is tagged here.
    #[arg(long)]
    tags: Option<PathBuf>,
    #[arg(long, conflicts_with = "tags")]
    lexicon: Option<PathBuf>,
    #[command(flatten)]
    options: UnitOptions,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ShowArgs {
    #[arg(long)]
    units: PathBuf,
    /// Object id; omit to list every object.
    object_id: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    Abstract,
    All,
}

#[derive(Args)]
struct DetectOptionArgs {
    #[arg(long)]
    polarity: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    min_claims: u32,
    /// Leave claims from disagreement-cue sentences out of pair detection.
    #[arg(long)]
    drop_cue_claims: bool,
    /// Sentences that may yield apparent findings.
    #[arg(long, value_enum, default_value = "abstract")]
    cue_scope: Scope,
}

impl DetectOptionArgs {
    fn options(&self) -> DetectOptions {
        DetectOptions {
            min_claims: self.min_claims,
            cue_scope: match self.cue_scope {
                Scope::Abstract => CueScope::AbstractOnly,
                Scope::All => CueScope::All,
            },
            drop_cue_claims: self.drop_cue_claims,
        }
    }
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    units: PathBuf,
    #[command(flatten)]
    options: DetectOptionArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    findings: PathBuf,
    #[arg(long)]
    units: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Contradictions,
    Diversity,
    Apparent,
    Summary,
}

impl From<Kind> for ReportKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Contradictions => ReportKind::Contradictions,
            Kind::Diversity => ReportKind::Diversity,
            Kind::Apparent => ReportKind::Apparent,
            Kind::Summary => ReportKind::Summary,
        }
    }
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    findings: PathBuf,
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    units: Option<PathBuf>,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    findings: PathBuf,
    #[arg(long)]
    units: PathBuf,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    log: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    /// Lexicon used to locate cue terms in evidence sentences.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Built UI assets to serve next to the API.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    policy: PolicyArgs,
    /// Skip the evidence and concept filter.
    #[arg(long)]
    no_filter: bool,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[command(flatten)]
    units: UnitOptions,
    #[command(flatten)]
    detect: DetectOptionArgs,
    /// Decision log to apply before writing reports.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "knowcert=info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Filter(a) => filter(a),
        Command::Tag(a) => tag(a),
        Command::Units(a) => units(a),
        Command::Show(a) => show(a),
        Command::Detect(a) => detect(a),
        Command::Apply(a) => apply(a),
        Command::Report(a) => report(a),
        Command::Serve(a) => serve(a),
        Command::Run(a) => run(a),
    };
    // a closed stdout (`| head`) is not a failure
    match result {
        Err(e) if e.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe) => {
            Ok(())
        }
        other => other,
    }
}

fn read_inputs(input: &InputArgs) -> Result<CorpusArtifact> {
    let ingested = pipeline::ingest_files(&input.predications, &input.sentences, &input.articles, input.strict)?;
    for (file, e) in ingested.errors.iter().take(20) {
        warn!("{file} line {}: {}", e.line, e.message);
    }
    for (file, e) in ingested.warnings.iter().take(20) {
        warn!("{file} line {}: {}", e.line, e.message);
    }
    for q in ingested.quarantine.iter().take(20) {
        warn!("quarantined {q:?}");
    }
    let art = ingested.into_artifact();
    info!(
        predications = art.corpus.predications().len(),
        sentences = art.corpus.sentences().len(),
        articles = art.corpus.articles().len(),
        row_errors = art.stats.row_errors,
        quarantined = art.stats.quarantined,
        "ingested"
    );
    Ok(art)
}

fn ingest(a: IngestArgs) -> Result<()> {
    read_inputs(&a.input)?.save(&a.out)?;
    Ok(())
}

fn policies(p: &PolicyArgs) -> Result<(knowcert_core::EvidencePolicy, knowcert_core::ConceptPolicy)> {
    Ok((
        config::load_evidence_policy(p.evidence_policy.as_deref())?,
        config::load_concept_policy(p.concept_policy.as_deref(), p.excluded_cuis.as_deref())?,
    ))
}

fn filter(a: FilterArgs) -> Result<()> {
    let art = CorpusArtifact::load(&a.corpus)?;
    let (e, c) = policies(&a.policy)?;
    let corpus = filter_corpus(&art.corpus, &e, &c);
    info!(kept = corpus.predications().len(), of = art.corpus.predications().len(), "filtered");
    CorpusArtifact {
        corpus,
        stats: art.stats,
    }
    .save(&a.out)?;
    Ok(())
}

fn tag(a: TagArgs) -> Result<()> {
    let art = CorpusArtifact::load(&a.corpus)?;
    let lex = config::load_lexicon(a.lexicon.as_deref())?;
    let tags = tag_corpus(&art.corpus, &lex);
    let hedged = tags.values().filter(|t| t.is_hedged()).count();
    info!(sentences = tags.len(), hedged, "tagged");
    TagsArtifact { tags }.save(&a.out)?;
    Ok(())
}

fn units(a: UnitsArgs) -> Result<()> {
    let art = CorpusArtifact::load(&a.corpus)?;
    let tags = match &a.tags {
        Some(p) => TagsArtifact::load(p)?.tags,
        None => tag_corpus(&art.corpus, &config::load_lexicon(a.lexicon.as_deref())?),
    };
    let units = pipeline::make_units(&art.corpus, &tags, &a.options.settings());
    info!(
        units = units.units.len(),
        claims = units.claim_count(),
        hedged_filtered = units.hedged_claims_filtered(),
        "built units"
    );
    units.save(&a.out)?;
    Ok(())
}

fn show(a: ShowArgs) -> Result<()> {
    let units = UnitsArtifact::load(&a.units)?;
    let mut out = std::io::stdout().lock();
    match a.object_id {
        None => {
            for u in units.units.values() {
                let o = make_object(u, &units.corpus_version, units.score_cues);
                use std::io::Write;
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    o.id,
                    u.subject_name(),
                    u.key.predicate.raw(),
                    u.object_name(),
                    u.claims.len()
                )?;
            }
        }
        Some(id) => {
            let unit = units
                .units
                .values()
                .find(|u| knowcert_core::object_id(&u.key, &units.corpus_version) == id)
                .with_context(|| format!("no object {id}"))?;
            let o = make_object(unit, &units.corpus_version, units.score_cues);
            let value = serde_json::json!({
                "object": o,
                "score": o.uncertainty.score(),
                "timeline": timeline(unit, units.score_cues),
            });
            serde_json::to_writer_pretty(&mut out, &value)?;
            use std::io::Write;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn detect(a: DetectArgs) -> Result<()> {
    let units = UnitsArtifact::load(&a.units)?;
    let cfg = PipelineConfig {
        filter: None,
        lexicon: Default::default(),
        polarity: config::load_polarity(a.options.polarity.as_deref())?,
        units: UnitSettings {
            corpus_version: units.corpus_version.clone(),
            exclusion: units.exclusion,
            score_cues: units.score_cues,
        },
        detect: a.options.options(),
    };
    let findings = pipeline::detect(&units, &cfg.polarity, &cfg.detect);
    info!(findings = findings.len(), "detected");
    save_findings(&a.out, &cfg.findings_header(), &findings)
}

fn apply(a: ApplyArgs) -> Result<()> {
    let (header, findings) = load_findings(&a.findings)?;
    let units = UnitsArtifact::load(&a.units)?;
    let log = read_log(&a.log)?;
    let (header, curated) = pipeline::curate(&header, &findings, &units, &log)?;
    info!(decisions = log.len(), findings = curated.len(), "applied");
    save_findings(&a.out, &header, &curated)
}

fn report(a: ReportArgs) -> Result<()> {
    let (_, findings) = load_findings(&a.findings)?;
    let corpus = a.corpus.as_deref().map(CorpusArtifact::load).transpose()?;
    let units = a.units.as_deref().map(UnitsArtifact::load).transpose()?;
    let report = pipeline::build_report(a.kind.into(), &findings, corpus.as_ref().map(|c| &c.corpus), units.as_ref())?;
    let text = render(&report, a.format)?;
    match a.out {
        Some(p) => fs::write(&p, text).with_context(|| p.display().to_string())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let (header, findings) = load_findings(&a.findings)?;
    let units = UnitsArtifact::load(&a.units)?;
    let corpus = a.corpus.as_deref().map(CorpusArtifact::load).transpose()?.map(|c| c.corpus);
    if corpus.is_none() {
        warn!("no corpus given; evidence will be served without sentence texts");
    }
    let log = DecisionLog::open(&a.log)?;
    info!(decisions = log.len(), "decision log replayed");
    let state = AppState::new(ServiceInputs {
        header,
        findings,
        units,
        corpus,
        lexicon: config::load_lexicon(a.lexicon.as_deref())?,
        log,
    })?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(service::serve(state, a.bind, a.static_dir))
}

fn ext(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Md => "md",
    }
}

fn run(a: RunArgs) -> Result<()> {
    fs::create_dir_all(&a.out_dir)?;
    let dir = a.out_dir.as_path();
    let art = read_inputs(&a.input)?;
    art.save(&dir.join("corpus.bin"))?;
    let cfg = PipelineConfig {
        filter: if a.no_filter { None } else { Some(policies(&a.policy)?) },
        lexicon: config::load_lexicon(a.lexicon.as_deref())?,
        polarity: config::load_polarity(a.detect.polarity.as_deref())?,
        units: a.units.settings(),
        detect: a.detect.options(),
    };
    let out = pipeline::run(art.corpus, &cfg);
    out.units.save(&dir.join("units.bin"))?;
    let header = cfg.findings_header();
    save_findings(&dir.join("findings.jsonl"), &header, &out.findings)?;
    info!(findings = out.findings.len(), "detected");

    let findings = match &a.log {
        Some(p) => {
            let (h, curated) = pipeline::curate(&header, &out.findings, &out.units, &read_log(p)?)?;
            save_findings(&dir.join("curated.jsonl"), &h, &curated)?;
            curated
        }
        None => out.findings,
    };
    write_reports(dir, &findings, &out.corpus, &out.units)
}

fn write_reports(
    dir: &Path,
    findings: &[knowcert_core::Finding],
    corpus: &knowcert_core::ClaimCorpus,
    units: &UnitsArtifact,
) -> Result<()> {
    let reports = dir.join("reports");
    fs::create_dir_all(&reports)?;
    for kind in pipeline::REPORT_KINDS {
        let report = pipeline::build_report(kind, findings, Some(corpus), Some(units))?;
        for format in [Format::Csv, Format::Json, Format::Md] {
            let path = reports.join(format!("{}.{}", pipeline::report_name(kind), ext(format)));
            fs::write(&path, render(&report, format)?)?;
        }
    }
    if findings.is_empty() {
        info!("no findings");
    }
    Ok(())
}
