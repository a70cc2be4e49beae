//! Typed client for the scorelens HTTP API.

use std::time::Duration;

use reqwest::{Method, StatusCode};
use serde::de::DeserializeOwned;
use serde::Serialize;

use scorelens_api::*;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("{status}: {}", body.error)]
    Api { status: StatusCode, body: ErrorBody },
    #[error("request to {url} failed: {source}")]
    Transport {
        url: String,
        #[source]
        source: reqwest::Error,
    },
    #[error("could not decode response from {url}: {reason}")]
    Decode { url: String, reason: String },
    #[error("job {job_id} did not finish within {seconds}s")]
    JobTimeout { job_id: String, seconds: u64 },
}

impl ClientError {
    pub fn status(&self) -> Option<StatusCode> {
        match self {
            ClientError::Api { status, .. } => Some(*status),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

#[derive(Debug, Clone)]
pub struct Client {
    base: String,
    http: reqwest::Client,
}

fn encode_segment(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

impl Client {
    pub fn new(base: impl Into<String>) -> Self {
        Client {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    async fn call<B: Serialize, Q: Serialize, T: DeserializeOwned>(
        &self,
        method: Method,
        path: &str,
        query: Option<&Q>,
        body: Option<&B>,
    ) -> Result<T> {
        let url = format!("{}{path}", self.base);
        let mut req = self.http.request(method, &url);
        if let Some(q) = query {
            req = req.query(q);
        }
        if let Some(b) = body {
            req = req.json(b);
        }
        let transport = |source| ClientError::Transport { url: url.clone(), source };
        let resp = req.send().await.map_err(transport)?;
        let status = resp.status();
        let bytes = resp.bytes().await.map_err(transport)?;
        if !status.is_success() {
            let body = serde_json::from_slice(&bytes).unwrap_or_else(|_| ErrorBody {
                error: String::from_utf8_lossy(&bytes).into_owned(),
                detail: serde_json::Value::Null,
            });
            return Err(ClientError::Api { status, body });
        }
        serde_json::from_slice(&bytes).map_err(|e| ClientError::Decode {
            url,
            reason: e.to_string(),
        })
    }

    async fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        self.call::<(), (), T>(Method::GET, path, None, None).await
    }

    async fn get_query<Q: Serialize, T: DeserializeOwned>(&self, path: &str, query: &Q) -> Result<T> {
        self.call::<(), Q, T>(Method::GET, path, Some(query), None).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T> {
        self.call::<B, (), T>(Method::POST, path, None, Some(body)).await
    }

    pub async fn models(&self) -> Result<ModelsResponse> {
        self.get("/api/models").await
    }

    pub async fn create_assignment(&self, req: &CreateAssignmentRequest) -> Result<AssignmentResponse> {
        self.post("/api/assignments", req).await
    }

    pub async fn assignment(&self, id: &str) -> Result<AssignmentResponse> {
        self.get(&format!("/api/assignments/{}", encode_segment(id))).await
    }

    pub async fn score(&self, req: &ScoreRequest) -> Result<ScoreRunResponse> {
        self.post("/api/score", req).await
    }

    pub async fn perturb(&self, req: &PerturbRequest) -> Result<JobCreated> {
        self.post("/api/perturb", req).await
    }

    pub async fn job(&self, job_id: &str) -> Result<JobResponse> {
        self.get(&format!("/api/jobs/{}", encode_segment(job_id))).await
    }

    /// Polls until the job is done or failed.
    pub async fn wait_job(&self, job_id: &str, poll: Duration, limit: Duration) -> Result<JobResponse> {
        let start = tokio::time::Instant::now();
        loop {
            let job = self.job(job_id).await?;
            if job.status.is_finished() {
                return Ok(job);
            }
            if start.elapsed() > limit {
                return Err(ClientError::JobTimeout {
                    job_id: job_id.to_string(),
                    seconds: limit.as_secs(),
                });
            }
            tokio::time::sleep(poll).await;
        }
    }

    pub async fn attention(
        &self,
        assignment_id: &str,
        slot_id: &str,
        model_id: &str,
        query: &AttentionQuery,
    ) -> Result<AttentionSliceResponse> {
        let path = format!(
            "/api/attention/{}/{}/{}",
            encode_segment(assignment_id),
            encode_segment(slot_id),
            encode_segment(model_id)
        );
        self.get_query(&path, query).await
    }

    pub async fn history(&self, slot_id: &str) -> Result<HistoryResponse> {
        self.get_query("/api/history", &HistoryQuery { slot: slot_id.to_string() }).await
    }

    pub async fn scatter(&self, x: &str, y: &str) -> Result<ScatterPayload> {
        self.get_query(
            "/api/training/scatter",
            &ScatterQuery {
                x: x.to_string(),
                y: y.to_string(),
            },
        )
        .await
    }

    pub async fn load_example(&self, example_id: &str) -> Result<LoadedExample> {
        let path = format!("/api/training/{}/load", encode_segment(example_id));
        self.post(&path, &serde_json::json!({})).await
    }

    pub async fn ingest_training(&self, path: &str) -> Result<IngestResponse> {
        self.post("/api/training/ingest", &IngestRequest { path: path.to_string() }).await
    }

    pub async fn derive_scores(&self, rubric: Vec<[f64; 6]>) -> Result<DeriveResponse> {
        self.post("/api/training/derive", &DeriveRequest { rubric }).await
    }
}
