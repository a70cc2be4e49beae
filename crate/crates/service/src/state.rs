use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use lru::LruCache;
use sha2::{Digest, Sha256};
use tokio::sync::Semaphore;

use scorelens_api::JobResponse;
use scorelens_core::attention::AttentionTensor;
use scorelens_core::perturb::{Lexicon, PerturbResources, StopWords, SymSpell};
use scorelens_core::provenance::{RunLog, TrainingCorpus};
use scorelens_core::scoring::{GlobalMode, TokenInfo};
use scorelens_core::{Assignment, ModelConfig, ModelRegistry};

use crate::{ServiceConfig, ServiceError};

pub const ASSIGNMENT_PREFIX: &str = "asg-";

/// Models registered when no models file is configured.
pub fn default_models() -> Vec<ModelConfig> {
    let make = |id: &str, seed: u64, dimension: &str, mode: GlobalMode| {
        let mut cfg = ModelConfig::test_scale(id, seed).with_global_mode(mode);
        cfg.score_dimension = dimension.into();
        cfg
    };
    vec![
        make("content", 1, "content", GlobalMode::ClsOnly),
        make("wording", 2, "wording", GlobalMode::ClsOnly),
        make("content-global", 1, "content", GlobalMode::SummaryGlobal),
        make("wording-global", 2, "wording", GlobalMode::SummaryGlobal),
    ]
}

/// Attention for one (model, pair), kept in the LRU.
#[derive(Debug)]
pub struct CachedAttention {
    pub tensor: Arc<AttentionTensor>,
    pub tokens: Vec<TokenInfo>,
}

pub fn pair_key(model_id: &str, source: &str, summary: &str) -> String {
    let mut h = Sha256::new();
    for part in [model_id, source, summary] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

pub struct AppState {
    pub registry: ModelRegistry,
    pub resources: PerturbResources,
    pub corpus: RwLock<TrainingCorpus>,
    pub runlog: RwLock<RunLog>,
    pub assignments: RwLock<HashMap<String, Arc<Assignment>>>,
    pub jobs: RwLock<HashMap<String, JobResponse>>,
    pub attention: Mutex<LruCache<String, Arc<CachedAttention>>>,
    pub workers: Arc<Semaphore>,
    pub worker_count: usize,
    next_assignment: AtomicU64,
    next_job: AtomicU64,
}

impl AppState {
    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let timeout = Duration::from_secs(config.external_timeout_secs);
        let registry = match &config.models {
            Some(path) => ModelRegistry::load(path, timeout)?,
            None => ModelRegistry::from_configs(default_models(), timeout)?,
        };
        let mut resources = PerturbResources::bundled();
        if let Some(path) = &config.lexicon {
            resources.lexicon = Arc::new(Lexicon::from_file(path)?);
        }
        if let Some(path) = &config.stopwords {
            resources.stopwords = Arc::new(StopWords::from_file(path)?);
        }
        if let Some(path) = &config.dictionary {
            resources.speller = Arc::new(SymSpell::from_file(path, 2)?);
        }
        let mut corpus = TrainingCorpus::new();
        if let Some(path) = &config.training_corpus {
            let report = corpus.ingest_path(path)?;
            for r in &report.rejected {
                tracing::warn!(line = r.line, reason = %r.reason, "skipped training example");
            }
            tracing::info!(accepted = report.accepted, "training corpus loaded");
        }
        let runlog = match &config.event_log {
            Some(path) => RunLog::open(path)?,
            None => RunLog::in_memory(),
        };
        Ok(Self::new(registry, resources, corpus, runlog, config.workers, config.attention_cache))
    }

    pub fn new(
        registry: ModelRegistry,
        resources: PerturbResources,
        corpus: TrainingCorpus,
        runlog: RunLog,
        workers: usize,
        attention_cache: usize,
    ) -> Self {
        // Keep fresh assignment ids clear of any already in the log.
        let last_id = runlog
            .records()
            .iter()
            .filter_map(|r| r.assignment_id.strip_prefix(ASSIGNMENT_PREFIX)?.parse::<u64>().ok())
            .max()
            .unwrap_or(0);
        let workers = workers.max(1);
        AppState {
            registry,
            resources,
            corpus: RwLock::new(corpus),
            runlog: RwLock::new(runlog),
            assignments: RwLock::new(HashMap::new()),
            jobs: RwLock::new(HashMap::new()),
            attention: Mutex::new(LruCache::new(NonZeroUsize::new(attention_cache.max(1)).expect("non-zero"))),
            workers: Arc::new(Semaphore::new(workers)),
            worker_count: workers,
            next_assignment: AtomicU64::new(last_id + 1),
            next_job: AtomicU64::new(1),
        }
    }

    pub fn next_assignment_id(&self) -> String {
        format!("{ASSIGNMENT_PREFIX}{}", self.next_assignment.fetch_add(1, Ordering::Relaxed))
    }

    pub fn next_job_id(&self) -> String {
        format!("job-{}", self.next_job.fetch_add(1, Ordering::Relaxed))
    }

    pub fn store_assignment(&self, assignment: Assignment) -> Arc<Assignment> {
        let assignment = Arc::new(assignment);
        self.assignments
            .write()
            .expect("assignment lock")
            .insert(assignment.id.clone(), assignment.clone());
        assignment
    }

    pub fn assignment(&self, id: &str) -> Option<Arc<Assignment>> {
        self.assignments.read().expect("assignment lock").get(id).cloned()
    }

    pub fn cached_attention(&self, key: &str) -> Option<Arc<CachedAttention>> {
        self.attention.lock().expect("cache lock").get(key).cloned()
    }

    pub fn cache_attention(&self, key: String, value: Arc<CachedAttention>) {
        self.attention.lock().expect("cache lock").put(key, value);
    }

    pub fn attention_cache_len(&self) -> usize {
        self.attention.lock().expect("cache lock").len()
    }
}
