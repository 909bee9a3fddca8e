//! HTTP JSON API for the review workflow.
//!
//! The artifacts are loaded once and never change. The curated view is
//! rebuilt after every append and published as an `Arc` snapshot; the log
//! mutex makes the handler that appends the only writer.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use anyhow::{bail, Result};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use knowcert_core::{
    apply_history, format_pub_date, mark_statuses, tag_text, timeline, validate_decision, Claim, ClaimCorpus,
    CueHit, CueLexicon, Curation, CurationDecision, CurationState, DecisionError, DecisionHistory, Finding,
    FindingKind, KnowledgeObject, LoggedDecision, Polarity, Predicate, RemovalReason, TimelineRow, UnitKey, UnitMap,
    UncertaintyStatus, Verdict,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::artifact::UnitsArtifact;
use crate::decision_log::DecisionLog;
use crate::findings::FindingsHeader;

pub const CURATOR_HEADER: &str = "x-curator";

/// Everything the service serves from.
pub struct ServiceInputs {
    pub header: FindingsHeader,
    /// Detector output, before any curation.
    pub findings: Vec<Finding>,
    pub units: UnitsArtifact,
    pub corpus: Option<ClaimCorpus>,
    pub lexicon: CueLexicon,
    pub log: DecisionLog,
}

struct View {
    history: DecisionHistory,
    curation: Curation,
    /// Finding id to position in `curation.findings`, or in `removed` when
    /// the flag is set.
    index: HashMap<String, (bool, usize)>,
}

impl View {
    fn build(base: &[Finding], working: &UnitMap, header: &FindingsHeader, history: DecisionHistory) -> Self {
        let curation = apply_history(base, working, &history, &header.polarity, &header.detect);
        let mut index = HashMap::with_capacity(base.len());
        for (i, f) in curation.findings.iter().enumerate() {
            index.insert(f.id().to_string(), (false, i));
        }
        for (i, r) in curation.removed.iter().enumerate() {
            index.insert(r.finding.id().to_string(), (true, i));
        }
        View {
            history,
            curation,
            index,
        }
    }

    fn get(&self, id: &str) -> Option<(&Finding, Option<RemovalReason>)> {
        match *self.index.get(id)? {
            (false, i) => Some((&self.curation.findings[i], None)),
            (true, i) => {
                let r = &self.curation.removed[i];
                Some((&r.finding, Some(r.reason)))
            }
        }
    }

    /// Current findings and removed ones, pending first, then in canonical order.
    fn listing(&self) -> Vec<(&Finding, Option<RemovalReason>)> {
        let mut all: Vec<_> = self
            .curation
            .findings
            .iter()
            .map(|f| (f, None))
            .chain(self.curation.removed.iter().map(|r| (&r.finding, Some(r.reason))))
            .collect();
        all.sort_by(|a, b| {
            (a.0.state() != CurationState::Pending)
                .cmp(&(b.0.state() != CurationState::Pending))
                .then_with(|| knowcert_core::detect::finding_order(a.0, b.0))
        });
        all
    }
}

pub struct AppState {
    header: FindingsHeader,
    base: Vec<Finding>,
    base_index: HashMap<String, usize>,
    units: UnitsArtifact,
    working: UnitMap,
    objects: BTreeMap<UnitKey, KnowledgeObject>,
    object_ids: HashMap<String, UnitKey>,
    corpus: Option<ClaimCorpus>,
    lexicon: CueLexicon,
    log: Mutex<DecisionLog>,
    view: RwLock<Arc<View>>,
}

impl AppState {
    pub fn new(inputs: ServiceInputs) -> Result<Arc<Self>> {
        if inputs.header.curated {
            bail!("the service needs detector output, not a curated findings file");
        }
        let working = inputs.units.working_units().into_owned();
        let objects = inputs.units.objects();
        let object_ids = objects.iter().map(|(k, o)| (o.id.clone(), k.clone())).collect();
        let base_index = inputs
            .findings
            .iter()
            .enumerate()
            .map(|(i, f)| (f.id().to_string(), i))
            .collect();
        let history = DecisionHistory::from_log(inputs.log.entries());
        let view = View::build(&inputs.findings, &working, &inputs.header, history);
        Ok(Arc::new(AppState {
            header: inputs.header,
            base: inputs.findings,
            base_index,
            units: inputs.units,
            working,
            objects,
            object_ids,
            corpus: inputs.corpus,
            lexicon: inputs.lexicon,
            log: Mutex::new(inputs.log),
            view: RwLock::new(Arc::new(view)),
        }))
    }

    fn snapshot(&self) -> Arc<View> {
        self.view.read().expect("view lock poisoned").clone()
    }

    fn base_finding(&self, id: &str) -> Option<&Finding> {
        self.base_index.get(id).map(|&i| &self.base[i])
    }

    /// Validates, appends and republishes. Holding the log mutex for the
    /// whole step keeps appends and view swaps in the same order.
    fn record(&self, decision: CurationDecision) -> Result<LoggedDecision, ApiError> {
        let mut log = self.log.lock().expect("log lock poisoned");
        let view = self.snapshot();
        let mut versions: Vec<&Finding> = Vec::with_capacity(2);
        versions.extend(self.base_finding(&decision.finding_id));
        versions.extend(view.get(&decision.finding_id).map(|(f, _)| f));
        validate_decision(&decision, &versions)?;
        let entry = log
            .append(decision)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        let mut history = view.history.clone();
        history.push(entry.clone());
        let next = View::build(&self.base, &self.working, &self.header, history);
        *self.view.write().expect("view lock poisoned") = Arc::new(next);
        Ok(entry)
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} {id}"))
    }
}

impl From<DecisionError> for ApiError {
    fn from(e: DecisionError) -> Self {
        let message = e.to_string();
        match e {
            DecisionError::UnknownFinding(id) => ApiError::not_found("finding", &id),
            DecisionError::HashMismatch { current, .. } => ApiError {
                status: StatusCode::CONFLICT,
                body: json!({ "error": message, "current_content_hash": current }),
            },
            _ => ApiError::bad_request(message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/v1/findings", get(list_findings))
        .route("/api/v1/findings/{id}", get(get_finding))
        .route("/api/v1/findings/{id}/decision", post(post_decision))
        .route("/api/v1/objects/{id}", get(get_object))
        .route("/api/v1/stats", get(stats))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(state: Arc<AppState>, bind: SocketAddr, static_dir: Option<PathBuf>) -> Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

#[derive(Serialize)]
struct ListedFinding<'a> {
    #[serde(flatten)]
    finding: &'a Finding,
    #[serde(skip_serializing_if = "Option::is_none")]
    removal_reason: Option<RemovalReason>,
}

#[derive(Deserialize)]
struct ListParams {
    #[serde(rename = "type")]
    kind: Option<String>,
    state: Option<String>,
    offset: Option<usize>,
    limit: Option<usize>,
}

fn parse_kind(s: &str) -> Result<FindingKind, ApiError> {
    serde_json::from_value(json!(s)).map_err(|_| ApiError::bad_request(format!("unknown finding type {s:?}")))
}

fn parse_state(s: &str) -> Result<CurationState, ApiError> {
    serde_json::from_value(json!(s)).map_err(|_| ApiError::bad_request(format!("unknown state {s:?}")))
}

async fn list_findings(
    State(app): State<Arc<AppState>>,
    params: Result<Query<ListParams>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let Query(params) = params.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let kind = params.kind.as_deref().map(parse_kind).transpose()?;
    let state = params.state.as_deref().map(parse_state).transpose()?;
    let view = app.snapshot();
    let matching: Vec<_> = view
        .listing()
        .into_iter()
        .filter(|(f, _)| kind.map_or(true, |k| f.kind() == k) && state.map_or(true, |s| f.state() == s))
        .collect();
    let total = matching.len();
    let offset = params.offset.unwrap_or(0);
    let page: Vec<_> = matching
        .into_iter()
        .skip(offset)
        .take(params.limit.unwrap_or(usize::MAX))
        .map(|(finding, removal_reason)| ListedFinding {
            finding,
            removal_reason,
        })
        .collect();
    Ok(Json(json!({ "total": total, "offset": offset, "findings": page })))
}

#[derive(Serialize)]
struct EvidenceClaim {
    predication_id: String,
    merged_ids: Vec<String>,
    sentence_id: String,
    article_id: String,
    location: &'static str,
    ordinal: Option<u32>,
    pub_date: String,
    hedged: bool,
    /// Full sentence text; absent when the service runs without a corpus.
    text: Option<String>,
    hedge_hits: Vec<CueHit>,
    disagreement_hits: Vec<CueHit>,
    /// Marked as an extraction error by some decision.
    invalidated: bool,
}

#[derive(Serialize)]
struct EvidenceGroup {
    predicate: Predicate,
    polarity: Polarity,
    claims: Vec<EvidenceClaim>,
}

impl AppState {
    fn evidence_claim(&self, claim: &Claim, view: &View) -> EvidenceClaim {
        let sentence = self.corpus.as_ref().and_then(|c| c.sentence(&claim.sentence_id));
        let (hedge_hits, disagreement_hits) = match sentence {
            Some(s) => tag_text(&s.text, &self.lexicon),
            None => (Vec::new(), Vec::new()),
        };
        let invalid = view.history.invalidated_claims();
        EvidenceClaim {
            predication_id: claim.predication_id.clone(),
            merged_ids: claim.merged_ids.clone(),
            sentence_id: claim.sentence_id.clone(),
            article_id: claim.article_id.clone(),
            location: claim.location.code(),
            ordinal: sentence.map(|s| s.ordinal),
            pub_date: format_pub_date(claim.pub_year, claim.pub_month),
            hedged: claim.hedged,
            text: sentence.map(|s| s.text.clone()),
            hedge_hits,
            disagreement_hits,
            invalidated: invalid.contains(&claim.predication_id),
        }
    }

    /// Evidence as detected, so claims dropped by curation stay visible
    /// with their `invalidated` flag.
    fn evidence(&self, finding: &Finding, view: &View) -> Vec<EvidenceGroup> {
        let shown = self.base_finding(finding.id()).unwrap_or(finding);
        let pair = shown.pair();
        let group = |predicate: &Predicate, ids: &mut dyn Iterator<Item = &str>| {
            let key = UnitKey::new(&pair.subject_cui, predicate.clone(), &pair.object_cui);
            let unit = self.units.units.get(&key);
            let claims = ids
                .filter_map(|id| unit.and_then(|u| u.claims.iter().find(|c| c.predication_id == id)))
                .map(|c| self.evidence_claim(c, view))
                .collect();
            EvidenceGroup {
                predicate: predicate.clone(),
                polarity: self.header.polarity.polarity(predicate),
                claims,
            }
        };
        match shown {
            Finding::Apparent(a) => {
                vec![group(&a.unit_key.predicate, &mut std::iter::once(a.claim.predication_id.as_str()))]
            }
            _ => shown
                .supports()
                .into_iter()
                .map(|s| group(&s.predicate, &mut s.claims.iter().map(|c| c.predication_id.as_str())))
                .collect(),
        }
    }
}

async fn get_finding(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let view = app.snapshot();
    let (finding, removal_reason) = view.get(&id).ok_or_else(|| ApiError::not_found("finding", &id))?;
    let evidence = app.evidence(finding, &view);
    Ok(Json(json!({
        "finding": finding,
        "removal_reason": removal_reason,
        "detected_as": app.base_finding(&id).map(Finding::kind),
        "evidence": evidence,
        "history": view.history.history(&id),
        "effective_decision": view.history.effective(&id).map(|d| &d.decision_id),
    })))
}

/// Decision body. The finding id comes from the path; the curator may come
/// from the `X-Curator` header instead of the body.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    #[serde(default)]
    finding_id: Option<String>,
    verdict: Verdict,
    #[serde(default)]
    affected_claims: Vec<String>,
    #[serde(default)]
    category_label: Option<String>,
    #[serde(default)]
    curator: Option<String>,
    #[serde(default)]
    timestamp: Option<DateTime<Utc>>,
    #[serde(default)]
    note: Option<String>,
    content_hash: String,
}

async fn post_decision(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let body: DecisionBody =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed decision: {e}")))?;
    if body.finding_id.as_ref().is_some_and(|f| *f != id) {
        return Err(ApiError::bad_request("finding_id in the body differs from the path"));
    }
    let header_curator = match headers.get(CURATOR_HEADER) {
        Some(v) => Some(
            v.to_str()
                .map_err(|_| ApiError::bad_request("X-Curator is not valid text"))?
                .to_string(),
        ),
        None => None,
    };
    let decision = CurationDecision {
        finding_id: id.clone(),
        verdict: body.verdict,
        affected_claims: body.affected_claims,
        category_label: body.category_label,
        curator: body.curator.or(header_curator).unwrap_or_default(),
        timestamp: body.timestamp.unwrap_or_else(Utc::now),
        note: body.note,
        content_hash: body.content_hash,
    };
    let app2 = app.clone();
    let entry = tokio::task::spawn_blocking(move || app2.record(decision))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let view = app.snapshot();
    let (finding, removal_reason) = view.get(&id).expect("recorded decisions name known findings");
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "decision": entry,
            "finding": finding,
            "removal_reason": removal_reason,
        })),
    ))
}

impl AppState {
    /// Object statuses from the curated findings still standing.
    fn curated_object(&self, key: &UnitKey, view: &View) -> Option<KnowledgeObject> {
        let mut one = BTreeMap::new();
        one.insert(key.clone(), self.objects.get(key)?.clone());
        let standing: Vec<Finding> = view
            .curation
            .findings
            .iter()
            .filter(|f| f.state() != CurationState::Rejected && f.unit_keys().contains(key))
            .cloned()
            .collect();
        mark_statuses(&mut one, &standing);
        one.remove(key)
    }
}

async fn get_object(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<serde_json::Value>, ApiError> {
    let key = app.object_ids.get(&id).ok_or_else(|| ApiError::not_found("object", &id))?;
    let view = app.snapshot();
    let object = app.curated_object(key, &view).expect("indexed objects exist");
    let rows: Vec<TimelineRow> = timeline(&object.unit, app.units.score_cues);
    let findings: Vec<&str> = view
        .curation
        .findings
        .iter()
        .filter(|f| f.unit_keys().contains(key))
        .map(Finding::id)
        .collect();
    Ok(Json(json!({
        "object": object,
        "score": object.uncertainty.score(),
        "timeline": rows,
        "findings": findings,
    })))
}

#[derive(Serialize, Default)]
struct Stats {
    total: usize,
    by_type: BTreeMap<&'static str, usize>,
    by_state: BTreeMap<&'static str, usize>,
    by_type_and_state: BTreeMap<&'static str, BTreeMap<&'static str, usize>>,
    /// Knowledge objects per uncertainty status, after curation.
    objects_by_status: BTreeMap<&'static str, usize>,
    objects: usize,
    decisions: usize,
}

fn status_name(s: UncertaintyStatus) -> &'static str {
    match s {
        UncertaintyStatus::Hedging => "hedging",
        UncertaintyStatus::Diversity => "diversity",
        UncertaintyStatus::ControversyContradiction => "controversy_contradiction",
    }
}

async fn stats(State(app): State<Arc<AppState>>) -> Json<Stats> {
    let view = app.snapshot();
    let mut s = Stats {
        objects: app.objects.len(),
        decisions: view.history.len(),
        ..Stats::default()
    };
    for kind in [FindingKind::Contradiction, FindingKind::Diversity, FindingKind::Apparent] {
        s.by_type.insert(kind.as_str(), 0);
        let states = s.by_type_and_state.entry(kind.as_str()).or_default();
        for state in [
            CurationState::Pending,
            CurationState::Accepted,
            CurationState::Rejected,
            CurationState::Reclassified,
        ] {
            s.by_state.insert(state.as_str(), 0);
            states.insert(state.as_str(), 0);
        }
    }
    for (f, _) in view.listing() {
        s.total += 1;
        *s.by_type.entry(f.kind().as_str()).or_default() += 1;
        *s.by_state.entry(f.state().as_str()).or_default() += 1;
        *s.by_type_and_state
            .entry(f.kind().as_str())
            .or_default()
            .entry(f.state().as_str())
            .or_default() += 1;
    }

    let mut objects = app.objects.clone();
    let standing: Vec<Finding> = view
        .curation
        .findings
        .iter()
        .filter(|f| f.state() != CurationState::Rejected)
        .cloned()
        .collect();
    mark_statuses(&mut objects, &standing);
    for status in [
        UncertaintyStatus::Hedging,
        UncertaintyStatus::Diversity,
        UncertaintyStatus::ControversyContradiction,
    ] {
        s.objects_by_status.insert(status_name(status), 0);
    }
    for o in objects.values() {
        for st in &o.statuses {
            *s.objects_by_status.entry(status_name(*st)).or_default() += 1;
        }
    }
    Json(s)
}
