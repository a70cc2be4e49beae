use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use super::input::TokenInfo;
use super::mask::MaskSpec;
use crate::attention::{ingest_attention, AttentionTensor, RawAttention};
use crate::error::{Error, Result};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
pub const DEFAULT_CONNECTIONS_PER_ENDPOINT: usize = 4;

/// Body of `POST {endpoint}/score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub model_id: String,
    pub source: String,
    pub summary: String,
    pub want_attention: bool,
}

pub type TokenPayload = TokenInfo;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub score: f64,
    #[serde(default)]
    pub truncated: bool,
    #[serde(default)]
    pub tokens: Vec<TokenPayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<AttentionPayload>,
}

/// Wire form of an [`AttentionTensor`]. The first axis of each block runs
/// over `layer * heads + head`; missing cells are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionPayload {
    pub layers: usize,
    pub heads: usize,
    pub window: usize,
    pub global_indices: Vec<usize>,
    pub band: Vec<Vec<Vec<Option<f32>>>>,
    pub global_rows: Vec<Vec<Vec<Option<f32>>>>,
    pub global_cols: Vec<Vec<Vec<Option<f32>>>>,
}

fn opt(x: f32) -> Option<f32> {
    (!x.is_nan()).then_some(x)
}

impl AttentionPayload {
    pub fn from_tensor(t: &AttentionTensor) -> Self {
        let g = t.global_indices().len();
        let planes = || (0..t.layers()).flat_map(|l| (0..t.heads()).map(move |h| (l, h)));
        let band = planes()
            .map(|(l, h)| {
                (0..t.n())
                    .map(|q| t.band_row(l, h, q).iter().copied().map(opt).collect())
                    .collect()
            })
            .collect();
        let global_rows = planes()
            .map(|(l, h)| {
                (0..g)
                    .map(|s| t.global_row(l, h, s).iter().copied().map(opt).collect())
                    .collect()
            })
            .collect();
        let global_cols = planes()
            .map(|(l, h)| {
                (0..t.n())
                    .map(|q| t.global_col_row(l, h, q).iter().copied().map(opt).collect())
                    .collect()
            })
            .collect();
        AttentionPayload {
            layers: t.layers(),
            heads: t.heads(),
            window: t.window(),
            global_indices: t.global_indices().to_vec(),
            band,
            global_rows,
            global_cols,
        }
    }

    /// Validates the block shape and unpacks it into a tensor satisfying
    /// every [`AttentionTensor`] invariant, including row normalization.
    pub fn decode(&self) -> Result<AttentionTensor> {
        if self.layers == 0 {
            return Err(Error::schema("attention.layers", "must be at least 1"));
        }
        if self.heads == 0 {
            return Err(Error::schema("attention.heads", "must be at least 1"));
        }
        if self.window < 2 || !self.window.is_multiple_of(2) {
            return Err(Error::schema(
                "attention.window",
                format!("must be even and at least 2, got {}", self.window),
            ));
        }
        let planes = self.layers * self.heads;
        let width = self.window + 1;
        if self.band.len() != planes {
            return Err(Error::schema(
                "attention.band",
                format!("expected {planes} layer/head planes, got {}", self.band.len()),
            ));
        }
        let n = self.band[0].len();
        if n == 0 {
            return Err(Error::schema("attention.band", "no tokens"));
        }
        if self
            .band
            .iter()
            .any(|p| p.len() != n || p.iter().any(|r| r.len() != width))
        {
            return Err(Error::schema(
                "attention.band",
                format!("every plane must be {n} x {width}"),
            ));
        }
        if self.global_indices.windows(2).any(|w| w[0] >= w[1])
            || self.global_indices.last().is_some_and(|&i| i >= n)
        {
            return Err(Error::schema(
                "attention.global_indices",
                "must be strictly ascending token positions",
            ));
        }
        let g = self.global_indices.len();
        let shape_ok = |block: &Vec<Vec<Vec<Option<f32>>>>, rows: usize, cols: usize| {
            block.len() == planes && block.iter().all(|p| p.len() == rows && p.iter().all(|r| r.len() == cols))
        };
        if !shape_ok(&self.global_rows, g, n) {
            return Err(Error::schema(
                "attention.global_rows",
                format!("every plane must be {g} x {n}"),
            ));
        }
        if !shape_ok(&self.global_cols, n, g) {
            return Err(Error::schema(
                "attention.global_cols",
                format!("every plane must be {n} x {g}"),
            ));
        }

        let mut flags = vec![false; n];
        for &i in &self.global_indices {
            flags[i] = true;
        }
        let hw = self.window / 2;
        let mut raw = RawAttention::new(n, self.layers, self.heads);
        for p in 0..planes {
            let (l, h) = (p / self.heads, p % self.heads);
            let mut slot = 0;
            for (q, &global) in flags.iter().enumerate() {
                let band = &self.band[p][q];
                let cols = &self.global_cols[p][q];
                let row = raw.row_mut(l, h, q);
                if global {
                    if band.iter().chain(cols).any(Option::is_some) {
                        return Err(Error::schema(
                            "attention.band",
                            format!("global query {q} must only appear in global_rows"),
                        ));
                    }
                    row.extend(
                        self.global_rows[p][slot]
                            .iter()
                            .enumerate()
                            .filter_map(|(k, w)| w.map(|w| (k, w))),
                    );
                    slot += 1;
                    continue;
                }
                for (offset, w) in band.iter().enumerate() {
                    let Some(w) = *w else { continue };
                    let k = (q + offset).checked_sub(hw).filter(|&k| k < n).ok_or_else(|| {
                        Error::schema("attention.band", format!("query {q} offset {offset} outside the text"))
                    })?;
                    row.push((k, w));
                }
                row.extend(
                    cols.iter()
                        .zip(&self.global_indices)
                        .filter_map(|(w, &k)| w.map(|w| (k, w))),
                );
            }
        }
        let mask = MaskSpec::new(hw, flags);
        let tensor = ingest_attention(&raw, &mask).map_err(|e| match e {
            Error::Schema { reason, .. } => Error::schema("attention.band", reason),
            Error::MaskViolation { .. } => Error::schema("attention.band", e.to_string()),
            e => e,
        })?;
        tensor
            .check_normalized(1e-5)
            .map_err(|e| Error::schema("attention.band", e.to_string()))?;
        Ok(tensor)
    }
}

/// Client for one external scorer endpoint.
#[derive(Debug, Clone)]
pub struct ExternalScorer {
    endpoint: String,
    client: reqwest::Client,
    timeout: Duration,
    permits: Arc<Semaphore>,
}

impl ExternalScorer {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, permits: Arc<Semaphore>) -> Result<Self> {
        let endpoint = endpoint.into();
        let client = reqwest::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| Error::ExternalUnreachable {
                endpoint: endpoint.clone(),
                reason: e.to_string(),
            })?;
        Ok(ExternalScorer {
            endpoint,
            client,
            timeout,
            permits,
        })
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn transport_error(&self, e: reqwest::Error) -> Error {
        if e.is_timeout() {
            Error::ExternalTimeout {
                endpoint: self.endpoint.clone(),
                seconds: self.timeout.as_secs(),
            }
        } else {
            Error::ExternalUnreachable {
                endpoint: self.endpoint.clone(),
                reason: e.to_string(),
            }
        }
    }

    pub async fn score(&self, request: &ScoreRequest) -> Result<ScoreResponse> {
        let _permit = self.permits.acquire().await.expect("semaphore never closed");
        let url = format!("{}/score", self.endpoint.trim_end_matches('/'));
        let response = self
            .client
            .post(&url)
            .json(request)
            .send()
            .await
            .map_err(|e| self.transport_error(e))?;
        let status = response.status();
        if !status.is_success() {
            return Err(Error::ExternalStatus {
                endpoint: self.endpoint.clone(),
                status: status.as_u16(),
            });
        }
        let body = response.bytes().await.map_err(|e| self.transport_error(e))?;
        parse_response(&body)
    }
}

/// Parses and validates a scorer response body.
pub fn parse_response(body: &[u8]) -> Result<ScoreResponse> {
    let de = &mut serde_json::Deserializer::from_slice(body);
    let response: ScoreResponse = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let reason = e.into_inner().to_string();
        let missing = reason
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next());
        let field = match (path.as_str(), missing) {
            (".", Some(m)) => m.to_string(),
            (".", None) => "response".to_string(),
            (_, Some(m)) => format!("{path}.{m}"),
            (_, None) => path,
        };
        Error::schema(field, reason)
    })?;
    if !response.score.is_finite() {
        return Err(Error::schema("score", "must be finite"));
    }
    if let Some(attention) = &response.attention {
        attention.decode()?;
    }
    Ok(response)
}
