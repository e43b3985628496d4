//! HTTP routes under `/api/v1`.

use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::labels::{Decision, LabelRecord};
use crate::network::{propagated_decision, DEFAULT_THRESHOLD};
use crate::store::Candidate;
use crate::{AdjudicationError, LabelSubmission, Service};

impl IntoResponse for AdjudicationError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            AdjudicationError::UnknownScaffold(_) | AdjudicationError::UnknownId(_) => (StatusCode::NOT_FOUND, "not_found"),
            AdjudicationError::InvalidDecision(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_decision"),
            AdjudicationError::NoLabels => (StatusCode::CONFLICT, "no_labels"),
            AdjudicationError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        (status, Json(json!({ "error": code, "message": self.to_string() }))).into_response()
    }
}

type ApiResult<T> = Result<T, AdjudicationError>;

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/api/v1/candidates", get(candidates))
        .route("/api/v1/scaffolds", get(scaffolds))
        .route("/api/v1/scaffolds/{id}", get(scaffold))
        .route("/api/v1/network", get(network))
        .route("/api/v1/labels", get(labels).post(submit))
        .route("/api/v1/export", get(export))
        .route("/api/v1/depict/{id}", get(depict))
        .with_state(service)
}

#[derive(Debug, Deserialize)]
struct PageQuery {
    page: Option<usize>,
    per_page: Option<usize>,
}

#[derive(Debug, Serialize)]
struct CandidateView<'a> {
    #[serde(flatten)]
    candidate: &'a Candidate,
    decision: Option<Decision>,
}

async fn candidates(State(svc): State<Arc<Service>>, Query(q): Query<PageQuery>) -> ApiResult<Json<serde_json::Value>> {
    let page = q.page.unwrap_or(1);
    let per_page = q.per_page.unwrap_or(50);
    if page == 0 || per_page == 0 || per_page > 500 {
        return Err(AdjudicationError::BadRequest("page ≥ 1 and 1 ≤ per_page ≤ 500".into()));
    }
    let labels = svc.labels();
    let order = svc.store().queue_order();
    let items: Vec<CandidateView> = order
        .iter()
        .skip((page - 1) * per_page)
        .take(per_page)
        .map(|c| CandidateView {
            candidate: c,
            decision: propagated_decision(c.scaffold_ids.iter().map(|s| labels.decision(s))),
        })
        .collect();
    Ok(Json(json!({ "page": page, "per_page": per_page, "total": order.len(), "items": items })))
}

async fn scaffolds(State(svc): State<Arc<Service>>) -> Json<serde_json::Value> {
    let labels = svc.labels();
    let store = svc.store();
    let mut rows: Vec<(f64, serde_json::Value)> = store
        .scaffolds()
        .iter()
        .map(|s| {
            let best = s
                .parents
                .iter()
                .filter_map(|p| store.candidate(p))
                .map(|c| c.classifier_score)
                .fold(0.0, f64::max);
            (best, json!({ "scaffold": s, "decision": labels.decision(&s.id), "max_parent_score": best }))
        })
        .collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    Json(json!({ "items": rows.into_iter().map(|r| r.1).collect::<Vec<_>>() }))
}

async fn scaffold(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let store = svc.store();
    let s = store.scaffold(&id).ok_or_else(|| AdjudicationError::UnknownScaffold(id.clone()))?;
    let labels = svc.labels();
    let parents: Vec<&Candidate> = s.parents.iter().filter_map(|p| store.candidate(p)).collect();
    Ok(Json(json!({
        "scaffold": s,
        "decision": labels.decision(&id),
        "history": labels.scaffold_history(&id),
        "parents": parents,
    })))
}

#[derive(Debug, Deserialize)]
struct NetworkQuery {
    threshold: Option<f64>,
}

async fn network(State(svc): State<Arc<Service>>, Query(q): Query<NetworkQuery>) -> ApiResult<Json<serde_json::Value>> {
    let t = q.threshold.unwrap_or(DEFAULT_THRESHOLD);
    if !(0.0..=1.0).contains(&t) {
        return Err(AdjudicationError::BadRequest(format!("threshold {t} outside [0, 1]")));
    }
    Ok(Json(serde_json::to_value(svc.network(t)).map_err(|e| AdjudicationError::Internal(e.to_string()))?))
}

async fn labels(State(svc): State<Arc<Service>>) -> Json<serde_json::Value> {
    let labels = svc.labels();
    let mut counts = serde_json::Map::new();
    let effective = labels.effective();
    for d in Decision::ALL {
        counts.insert(d.as_str().into(), json!(effective.values().filter(|&&x| x == d).count()));
    }
    Json(json!({
        "effective": effective,
        "counts": counts,
        "records": labels.history().len(),
        "unlabelled": svc.store().scaffolds().len() - effective.len(),
    }))
}

async fn submit(State(svc): State<Arc<Service>>, Json(sub): Json<LabelSubmission>) -> ApiResult<(StatusCode, Json<LabelRecord>)> {
    let record = svc.submit(sub)?;
    Ok((StatusCode::CREATED, Json(record)))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(State(svc): State<Arc<Service>>, Query(q): Query<ExportQuery>) -> ApiResult<Response> {
    let report = svc.export()?;
    Ok(match q.format.as_deref() {
        None | Some("json") => ([(header::CONTENT_TYPE, "application/json")], report.to_json()).into_response(),
        Some("text") => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], report.to_text()).into_response(),
        Some(other) => return Err(AdjudicationError::BadRequest(format!("unknown format {other}"))),
    })
}

async fn depict(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult<Response> {
    let svg = svc.depict(&id)?;
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}
