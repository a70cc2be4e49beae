use std::sync::Arc;
use std::time::Duration;

use reqwest::StatusCode;
use serde_json::{json, Value};

use scorelens_core::perturb::{run_perturbation, Method, PerturbResources};
use scorelens_core::provenance::{RunLog, TrainingCorpus};
use scorelens_core::{ModelRegistry, ScoreResult};
use scorelens_service::{default_models, spawn, AppState, RunningService, ServiceConfig};

const SOURCE: &str = "Bees carry pollen from flower to flower while they collect nectar. This lets plants make fruit.";
const SUMMARY: &str = "Bees move pollen. Plants then make fruit.";

fn corpus_path() -> String {
    format!("{}/../core/data/fixtures/training_corpus.jsonl", env!("CARGO_MANIFEST_DIR"))
}

fn registry() -> ModelRegistry {
    ModelRegistry::from_configs(default_models(), Duration::from_secs(5)).unwrap()
}

async fn start_with(log: RunLog) -> RunningService {
    let mut corpus = TrainingCorpus::new();
    corpus.ingest_path(corpus_path()).unwrap();
    let state = AppState::new(registry(), PerturbResources::bundled(), corpus, log, 4, 8);
    spawn(Arc::new(state), "127.0.0.1:0".parse().unwrap()).await.unwrap()
}

async fn start() -> RunningService {
    start_with(RunLog::in_memory()).await
}

async fn send(method: reqwest::Method, url: String, body: Option<Value>) -> (StatusCode, Value) {
    let mut req = reqwest::Client::new().request(method, url);
    if let Some(b) = body {
        req = req.json(&b);
    }
    let resp = req.send().await.unwrap();
    let status = resp.status();
    (status, resp.json().await.unwrap())
}

async fn get(svc: &RunningService, path: &str) -> (StatusCode, Value) {
    send(reqwest::Method::GET, format!("{}{path}", svc.url()), None).await
}

async fn post(svc: &RunningService, path: &str, body: Value) -> (StatusCode, Value) {
    send(reqwest::Method::POST, format!("{}{path}", svc.url()), Some(body)).await
}

async fn assignment(svc: &RunningService) -> String {
    let (s, v) = post(svc, "/api/assignments", json!({"source": SOURCE, "summaries": [{"text": SUMMARY, "options": {"tokens": true}}]})).await;
    assert_eq!(s, StatusCode::OK);
    v["assignment_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn models_are_redacted() {
    let svc = start().await;
    let (s, v) = get(&svc, "/api/models").await;
    assert_eq!(s, StatusCode::OK);
    let ids: Vec<&str> = v["models"].as_array().unwrap().iter().map(|m| m["model_id"].as_str().unwrap()).collect();
    assert_eq!(ids, ["content", "wording", "content-global", "wording-global"]);
    assert!(v["models"].as_array().unwrap().iter().all(|m| m.get("endpoint").is_none()));
}

#[tokio::test]
async fn error_shapes() {
    let svc = start().await;
    let (s, v) = post(&svc, "/api/score", json!({"source": "s", "summaries": [], "model_ids": ["content"]})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "summaries must be non-empty");
    assert_eq!(v["detail"]["field"], "summaries");

    let (s, v) = post(&svc, "/api/assignments", json!({"source": "s", "summaries": [{"txt": "x"}]})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["detail"]["field"], "summaries[0].text");

    let (s, v) = post(&svc, "/api/assignments", json!({"source": 3, "summaries": []})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["detail"]["field"], "source");

    let (s, v) = get(&svc, "/api/nothing/here").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["detail"]["path"], "/api/nothing/here");

    let (s, v) = post(&svc, "/api/score", json!({"source": "s", "summaries": [{"text": "t"}], "model_ids": ["nope"]})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["detail"]["model_id"], "nope");

    let (s, _) = get(&svc, "/api/jobs/job-999").await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn score_matches_engine_and_is_stable_under_concurrency() {
    let svc = start().await;
    let id = assignment(&svc).await;
    let body = json!({"assignment_id": id, "model_ids": ["content", "wording-global"]});
    let url = format!("{}/api/score", svc.url());
    let calls = (0..6).map(|_| send(reqwest::Method::POST, url.clone(), Some(body.clone())));
    let responses = futures_join(calls).await;
    let reg = registry();
    for (s, v) in &responses {
        assert_eq!(*s, StatusCode::OK);
        for r in v["results"].as_array().unwrap() {
            let model = reg.reference_model(r["model_id"].as_str().unwrap()).unwrap().unwrap();
            let direct: ScoreResult = ModelRegistry::score_reference(&model, SOURCE, SUMMARY, false).unwrap();
            assert_eq!(r["score"].as_f64().unwrap().to_bits(), direct.score.to_bits());
        }
    }
    let mut runs: Vec<u64> = responses.iter().map(|(_, v)| v["run"]["run_number"].as_u64().unwrap()).collect();
    runs.sort();
    assert_eq!(runs, (1..=6).collect::<Vec<_>>());
    let (_, h) = get(&svc, &format!("/api/history?slot={id}/0")).await;
    assert_eq!(h["rows"].as_array().unwrap().len(), 12);
}

async fn futures_join<F>(calls: impl Iterator<Item = F>) -> Vec<(StatusCode, Value)>
where
    F: std::future::Future<Output = (StatusCode, Value)> + Send + 'static,
{
    let handles: Vec<_> = calls.map(tokio::spawn).collect();
    let mut out = Vec::new();
    for h in handles {
        out.push(h.await.unwrap());
    }
    out
}

#[tokio::test]
async fn perturb_job_matches_engine() {
    let svc = start().await;
    let id = assignment(&svc).await;
    let (s, v) = post(&svc, "/api/perturb", json!({"assignment_id": id, "slot_id": format!("{id}/0"), "model_id": "content", "method": "tokens"})).await;
    assert_eq!(s, StatusCode::OK);
    let job_id = v["job_id"].as_str().unwrap().to_string();
    let job = loop {
        let (_, job) = get(&svc, &format!("/api/jobs/{job_id}")).await;
        if job["status"] == "done" || job["status"] == "failed" {
            break job;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    assert_eq!(job["status"], "done");
    let direct = run_perturbation(&registry(), &PerturbResources::bundled(), SOURCE, SUMMARY, "content", Method::Tokens, 1)
        .await
        .unwrap();
    assert_eq!(job["report"], serde_json::to_value(&direct).unwrap());

    let (s, v) = post(&svc, "/api/perturb", json!({"assignment_id": id, "slot_id": "0", "model_id": "content", "method": "letters"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["detail"]["field"], "method");
}

#[tokio::test]
async fn words_job_reports_underlines() {
    let svc = start().await;
    let (_, v) = post(&svc, "/api/assignments", json!({"source": SOURCE, "summaries": [{"text": "The cat sat."}]})).await;
    let id = v["assignment_id"].as_str().unwrap();
    let (_, v) = post(&svc, "/api/perturb", json!({"assignment_id": id, "slot_id": "0", "model_id": "wording", "method": "words"})).await;
    let job_id = v["job_id"].as_str().unwrap().to_string();
    let job = loop {
        let (_, job) = get(&svc, &format!("/api/jobs/{job_id}")).await;
        if job["status"] == "done" {
            break job;
        }
        tokio::time::sleep(Duration::from_millis(20)).await;
    };
    let underlines = job["word_underlines"].as_array().unwrap();
    assert_eq!(underlines.len(), 2);
    assert_eq!(underlines[0]["span"]["surface"], "cat");
}

#[tokio::test]
async fn attention_slices_and_cache() {
    let svc = start().await;
    let id = assignment(&svc).await;
    let base = format!("/api/attention/{id}/0/content-global");
    let (s, rug) = get(&svc, &format!("{base}?token=0&layer=1&head=2&mode=rug")).await;
    assert_eq!(s, StatusCode::OK);
    let n = rug["n"].as_u64().unwrap() as usize;
    assert_eq!(rug["slice"]["cells"].as_array().unwrap().len(), n);
    assert!(rug["slice"]["cells"].as_array().unwrap().iter().all(|c| c[0]["s"] == "w" || c[0]["s"] == "z"));
    assert_eq!(rug["tokens"].as_array().unwrap().len(), n);
    assert!(rug["display_text"].as_str().unwrap().starts_with("[CLS] "));

    let (s, by_layer) = get(&svc, &format!("{base}?token=5&head=0&mode=by_layer")).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(by_layer["slice"]["columns"], json!([0, 1, 2, 3]));
    assert_eq!(svc.state().attention_cache_len(), 1);

    let (s, v) = get(&svc, &format!("{base}?token=5&mode=by_head")).await;
    assert_eq!((s, v["detail"]["field"].clone()), (StatusCode::BAD_REQUEST, json!("layer")));
    let (s, v) = get(&svc, &format!("{base}?token={n}&layer=0&mode=by_head")).await;
    assert_eq!((s, v["detail"]["field"].clone()), (StatusCode::BAD_REQUEST, json!("token")));
    let (s, v) = get(&svc, &format!("{base}?token=1&layer=0&mode=by_head&head=99")).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let (s, v) = get(&svc, &format!("{base}?token=x&layer=0&mode=by_head")).await;
    assert_eq!((s, v["detail"]["field"].clone()), (StatusCode::BAD_REQUEST, json!("token")));
}

#[tokio::test]
async fn attention_cache_evicts_oldest() {
    let svc = start().await;
    for i in 0..10 {
        let (_, v) = post(&svc, "/api/assignments", json!({"source": SOURCE, "summaries": [{"text": format!("Summary {i}.")}]})).await;
        let id = v["assignment_id"].as_str().unwrap();
        let (s, _) = get(&svc, &format!("/api/attention/{id}/0/content?token=0&layer=0&head=0&mode=rug")).await;
        assert_eq!(s, StatusCode::OK);
    }
    assert_eq!(svc.state().attention_cache_len(), 8);
}

#[tokio::test]
async fn history_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.jsonl");
    let svc = start_with(RunLog::open(&path).unwrap()).await;
    let id = assignment(&svc).await;
    for _ in 0..3 {
        post(&svc, "/api/score", json!({"assignment_id": id, "model_ids": ["content"]})).await;
    }
    let (_, before) = get(&svc, &format!("/api/history?slot={id}/0")).await;
    svc.stop().await.unwrap();

    let svc = start_with(RunLog::open(&path).unwrap()).await;
    let (_, after) = get(&svc, &format!("/api/history?slot={id}/0")).await;
    assert_eq!(before, after);
    assert_eq!(after["rows"].as_array().unwrap().len(), 3);
    let fresh = assignment(&svc).await;
    assert_ne!(fresh, id);
}

#[tokio::test]
async fn training_endpoints() {
    let svc = start().await;
    let (s, scatter) = get(&svc, "/api/training/scatter?x=content&y=wording").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(scatter["training_points"].as_array().unwrap().len(), 48);
    assert_eq!(scatter["x_hist"].as_array().unwrap().len(), 20);

    let (s, loaded) = post(&svc, "/api/training/ex004/load", json!({})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(loaded["cached_scores"], json!({}));
    let aid = loaded["assignment"]["id"].as_str().unwrap();
    let (s, scored) = post(&svc, "/api/score", json!({"assignment_id": aid, "model_ids": ["content", "wording"]})).await;
    assert_eq!(s, StatusCode::OK);
    let (_, again) = post(&svc, "/api/training/ex004/load", json!({})).await;
    assert_eq!(again["cached_scores"]["content"], scored["results"][0]["score"]);

    let (_, scatter) = get(&svc, "/api/training/scatter?x=content&y=wording").await;
    assert_eq!(scatter["current_points"].as_array().unwrap().len(), 1);

    let (s, _) = post(&svc, "/api/training/nope/load", json!({})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let (s, v) = post(&svc, "/api/training/ingest", json!({"path": corpus_path()})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["report"]["accepted"], 0);
    assert_eq!(v["report"]["rejected"].as_array().unwrap().len(), 50);
    let (s, v) = post(&svc, "/api/training/ingest", json!({"path": "/definitely/missing"})).await;
    assert_eq!((s, v["detail"]["field"].clone()), (StatusCode::BAD_REQUEST, json!("path")));

    let rubric = json!([[1,2,3,4,1,2],[2,2,3,1,4,4],[3,1,2,2,3,1],[4,4,1,3,2,3]]);
    let (s, v) = post(&svc, "/api/training/derive", json!({"rubric": rubric})).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["content"].as_array().unwrap().len(), 4);
    let (s, v) = post(&svc, "/api/training/derive", json!({"rubric": [[2,2,2,2,2,2],[2,2,2,2,2,2],[2,2,2,2,2,2]]})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("degenerate rubric criterion"));
}

#[test]
fn config_file_drives_state() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("scorelens.toml");
    std::fs::write(dir.path().join("models.json"), serde_json::to_string(&default_models()[..1]).unwrap()).unwrap();
    std::fs::write(
        &cfg_path,
        format!("listen = \"127.0.0.1:8099\"\nmodels = \"models.json\"\nevent_log = \"runs.jsonl\"\ntraining_corpus = \"{}\"\n", corpus_path()),
    )
    .unwrap();
    let cfg = ServiceConfig::load(&cfg_path).unwrap();
    let state = AppState::from_config(&cfg).unwrap();
    assert_eq!(state.registry.configs().count(), 1);
    assert_eq!(state.corpus.read().unwrap().len(), 48);
    assert!(dir.path().join("runs.jsonl").exists());
}
