use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{StatusCode, Uri};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::future::try_join_all;
use serde_json::json;

use scorelens_api::{
    word_underlines, AssignmentResponse, AttentionQuery, AttentionSliceResponse, CreateAssignmentRequest,
    DeriveRequest, DeriveResponse, HistoryQuery, HistoryResponse, IngestRequest, IngestResponse, JobCreated,
    JobResponse, JobStatus, LoadedExample, ModelsResponse, PerturbRequest, ScatterPayload, ScatterQuery,
    ScoreRequest, ScoreRunResponse, SlotScore, SummaryInput,
};
use scorelens_core::attention::SliceMode;
use scorelens_core::perturb::run_perturbation;
use scorelens_core::provenance::{derive_component_scores, load_example, scatter_payload, Axis, Dimension};
use scorelens_core::scoring::display_text;
use scorelens_core::{Assignment, Error};

use crate::error::{ApiError, ApiResult};
use crate::extract::{ApiJson, ApiQuery};
use crate::state::{pair_key, AppState, CachedAttention};

type AppStateRef = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/models", get(models))
        .route("/api/assignments", post(create_assignment))
        .route("/api/assignments/{id}", get(get_assignment))
        .route("/api/score", post(score))
        .route("/api/perturb", post(perturb))
        .route("/api/jobs/{id}", get(job))
        .route("/api/attention/{assignment}/{slot}/{model}", get(attention))
        .route("/api/history", get(history))
        .route("/api/training/scatter", get(scatter))
        .route("/api/training/ingest", post(ingest))
        .route("/api/training/derive", post(derive))
        .route("/api/training/{example_id}/load", post(load))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state)
}

async fn not_found(uri: Uri) -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "no such route", json!({ "path": uri.path() }))
}

async fn method_not_allowed(uri: Uri) -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method not allowed", json!({ "path": uri.path() }))
}

async fn models(State(state): AppStateRef) -> Json<ModelsResponse> {
    Json(ModelsResponse {
        models: state.registry.configs().map(|c| c.redacted()).collect(),
    })
}

fn new_assignment(state: &AppState, source: String, summaries: Vec<SummaryInput>) -> Result<Arc<Assignment>, ApiError> {
    if summaries.is_empty() {
        return Err(ApiError::bad_field("summaries", "summaries must be non-empty"));
    }
    let id = state.next_assignment_id();
    let assignment = Assignment::new(id, source, summaries.into_iter().map(|s| (s.text, s.options)));
    Ok(state.store_assignment(assignment))
}

fn find_assignment(state: &AppState, id: &str) -> Result<Arc<Assignment>, ApiError> {
    state.assignment(id).ok_or_else(|| ApiError::not_found("assignment", id))
}

async fn create_assignment(
    State(state): AppStateRef,
    ApiJson(req): ApiJson<CreateAssignmentRequest>,
) -> ApiResult<AssignmentResponse> {
    let assignment = new_assignment(&state, req.source, req.summaries)?;
    Ok(Json(AssignmentResponse {
        assignment_id: assignment.id.clone(),
        assignment: assignment.as_ref().clone(),
    }))
}

async fn get_assignment(State(state): AppStateRef, Path(id): Path<String>) -> ApiResult<AssignmentResponse> {
    let assignment = find_assignment(&state, &id)?;
    Ok(Json(AssignmentResponse {
        assignment_id: id,
        assignment: assignment.as_ref().clone(),
    }))
}

async fn score(State(state): AppStateRef, ApiJson(req): ApiJson<ScoreRequest>) -> ApiResult<ScoreRunResponse> {
    if let Some(summaries) = &req.summaries {
        if summaries.is_empty() {
            return Err(ApiError::bad_field("summaries", "summaries must be non-empty"));
        }
    }
    if req.model_ids.is_empty() {
        return Err(ApiError::bad_field("model_ids", "model_ids must be non-empty"));
    }
    for id in &req.model_ids {
        state.registry.config(id)?;
    }
    let assignment = match (req.assignment_id, req.source, req.summaries) {
        (Some(id), None, None) => find_assignment(&state, &id)?,
        (None, Some(source), Some(summaries)) => new_assignment(&state, source, summaries)?,
        (Some(_), _, _) => {
            return Err(ApiError::bad_field("assignment_id", "give either assignment_id or source and summaries"))
        }
        (None, None, _) => return Err(ApiError::bad_field("source", "source is required without assignment_id")),
        (None, Some(_), None) => return Err(ApiError::bad_field("summaries", "summaries must be non-empty")),
    };

    let jobs = assignment.slots.iter().flat_map(|slot| {
        req.model_ids.iter().map(move |model_id| (slot, model_id))
    });
    let results = try_join_all(jobs.map(|(slot, model_id)| {
        let state = state.clone();
        let source = assignment.source.clone();
        async move {
            let _permit = state.workers.acquire().await.expect("worker pool open");
            let r = state.registry.score_pair(model_id, &source, &slot.text, false).await?;
            Ok::<_, Error>(SlotScore {
                slot_id: slot.slot_id.clone(),
                model_id: model_id.clone(),
                score: r.score,
                truncated: r.truncated,
            })
        }
    }))
    .await?;

    let entries: Vec<(String, String, f64)> =
        results.iter().map(|r| (r.slot_id.clone(), r.model_id.clone(), r.score)).collect();
    let run = state.runlog.write().expect("run log lock").record_run(&assignment, &entries)?.clone();
    Ok(Json(ScoreRunResponse {
        assignment_id: assignment.id.clone(),
        run,
        results,
    }))
}

async fn perturb(State(state): AppStateRef, ApiJson(req): ApiJson<PerturbRequest>) -> ApiResult<JobCreated> {
    let assignment = find_assignment(&state, &req.assignment_id)?;
    let slot = assignment
        .slot(&req.slot_id)
        .ok_or_else(|| ApiError::not_found("slot", &req.slot_id))?
        .clone();
    state.registry.config(&req.model_id)?;

    let job_id = state.next_job_id();
    let queued = JobResponse {
        job_id: job_id.clone(),
        status: JobStatus::Queued,
        report: None,
        word_underlines: Vec::new(),
        error: None,
    };
    state.jobs.write().expect("job lock").insert(job_id.clone(), queued);

    let task_state = state.clone();
    let task_id = job_id.clone();
    tokio::spawn(async move {
        let state = task_state;
        let _permit = state.workers.acquire().await.expect("worker pool open");
        set_status(&state, &task_id, JobStatus::Running);
        let result = run_perturbation(
            &state.registry,
            &state.resources,
            &assignment.source,
            &slot.text,
            &req.model_id,
            req.method,
            state.worker_count,
        )
        .await;
        let mut jobs = state.jobs.write().expect("job lock");
        let job = jobs.get_mut(&task_id).expect("job registered");
        match result {
            Ok(report) => {
                job.word_underlines = word_underlines(&report);
                job.report = Some(report);
                job.status = JobStatus::Done;
            }
            Err(e) => {
                tracing::warn!(job = %task_id, error = %e, "perturbation failed");
                job.error = Some(ApiError::from(e).body);
                job.status = JobStatus::Failed;
            }
        }
    });
    Ok(Json(JobCreated { job_id }))
}

fn set_status(state: &AppState, id: &str, status: JobStatus) {
    if let Some(job) = state.jobs.write().expect("job lock").get_mut(id) {
        job.status = status;
    }
}

async fn job(State(state): AppStateRef, Path(id): Path<String>) -> ApiResult<JobResponse> {
    state
        .jobs
        .read()
        .expect("job lock")
        .get(&id)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found("job", &id))
}

async fn attention(
    State(state): AppStateRef,
    Path((assignment_id, slot_id, model_id)): Path<(String, String, String)>,
    ApiQuery(query): ApiQuery<AttentionQuery>,
) -> ApiResult<AttentionSliceResponse> {
    let mode = query.slice_mode().map_err(|(field, msg)| ApiError::bad_field(field, msg))?;
    let assignment = find_assignment(&state, &assignment_id)?;
    let slot = assignment.slot(&slot_id).ok_or_else(|| ApiError::not_found("slot", &slot_id))?;
    let config = state.registry.config(&model_id)?.clone();

    let key = pair_key(&model_id, &assignment.source, &slot.text);
    let cached = match state.cached_attention(&key) {
        Some(hit) => hit,
        None => {
            let _permit = state.workers.acquire().await.expect("worker pool open");
            let r = state.registry.score_pair(&model_id, &assignment.source, &slot.text, true).await?;
            let tensor = r
                .attention
                .ok_or_else(|| Error::schema("attention", "scorer returned no attention"))?;
            let entry = Arc::new(CachedAttention { tensor, tokens: r.tokens });
            state.cache_attention(key, entry.clone());
            entry
        }
    };
    let t = &cached.tensor;
    if query.token >= t.n() {
        return Err(ApiError::bad_field("token", format!("token {} out of range 0..{}", query.token, t.n())));
    }
    let (layer, head) = match mode {
        SliceMode::ByLayer { head } => (None, Some(head)),
        SliceMode::ByHead { layer } => (Some(layer), None),
        SliceMode::Rug { layer, head } => (Some(layer), Some(head)),
    };
    if let Some(l) = layer.filter(|&l| l >= t.layers()) {
        return Err(ApiError::bad_field("layer", format!("layer {l} out of range 0..{}", t.layers())));
    }
    if let Some(h) = head.filter(|&h| h >= t.heads()) {
        return Err(ApiError::bad_field("head", format!("head {h} out of range 0..{}", t.heads())));
    }
    let slice = t.slice(query.token, mode)?;
    Ok(Json(AttentionSliceResponse {
        model_id: config.model_id,
        n: t.n(),
        layers: t.layers(),
        heads: t.heads(),
        window: t.window(),
        global_indices: t.global_indices().to_vec(),
        display_text: display_text(&assignment.source, &slot.text),
        tokens: cached.tokens.clone(),
        mode,
        slice,
    }))
}

async fn history(State(state): AppStateRef, ApiQuery(q): ApiQuery<HistoryQuery>) -> Json<HistoryResponse> {
    let rows = state.runlog.read().expect("run log lock").history(&q.slot);
    Json(HistoryResponse { slot_id: q.slot, rows })
}

fn axis(state: &AppState, model_id: &str, fallback: Dimension) -> Result<Axis, ApiError> {
    let config = state.registry.config(model_id)?;
    let dimension = if config.score_dimension.is_empty() {
        fallback
    } else {
        Dimension::from_label(&config.score_dimension)
    };
    Ok(Axis {
        model_id: model_id.to_string(),
        dimension,
    })
}

async fn scatter(State(state): AppStateRef, ApiQuery(q): ApiQuery<ScatterQuery>) -> ApiResult<ScatterPayload> {
    let x = axis(&state, &q.x, Dimension::Content)?;
    let y = axis(&state, &q.y, Dimension::Wording)?;
    let corpus = state.corpus.read().expect("corpus lock");
    let log = state.runlog.read().expect("run log lock");
    Ok(Json(scatter_payload(&corpus, &log, x, y)))
}

async fn load(State(state): AppStateRef, Path(example_id): Path<String>) -> ApiResult<LoadedExample> {
    let loaded = {
        let corpus = state.corpus.read().expect("corpus lock");
        let log = state.runlog.read().expect("run log lock");
        load_example(&corpus, &log, &example_id)?
    };
    state.store_assignment(loaded.assignment.clone());
    Ok(Json(loaded))
}

async fn ingest(State(state): AppStateRef, ApiJson(req): ApiJson<IngestRequest>) -> ApiResult<IngestResponse> {
    let text = std::fs::read_to_string(&req.path)
        .map_err(|e| ApiError::bad_field("path", format!("cannot read {}: {e}", req.path)))?;
    let mut corpus = state.corpus.write().expect("corpus lock");
    let report = corpus.ingest_str(&text);
    Ok(Json(IngestResponse {
        report,
        total: corpus.len(),
    }))
}

async fn derive(ApiJson(req): ApiJson<DeriveRequest>) -> ApiResult<DeriveResponse> {
    Ok(Json(derive_component_scores(&req.rubric)?))
}
