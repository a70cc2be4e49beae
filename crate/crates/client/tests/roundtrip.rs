use std::sync::Arc;
use std::time::Duration;

use reqwest::StatusCode;
use scorelens_api::{AttentionQuery, CreateAssignmentRequest, PerturbRequest, ScoreRequest, SummaryInput};
use scorelens_client::{Client, ClientError};
use scorelens_core::attention::SliceMode;
use scorelens_core::perturb::{Method, PerturbResources};
use scorelens_core::{ModelRegistry, RunLog, TrainingCorpus};
use scorelens_service::{default_models, spawn, AppState, RunningService};

async fn service() -> RunningService {
    let registry = ModelRegistry::from_configs(default_models(), Duration::from_secs(5)).unwrap();
    let state = AppState::new(registry, PerturbResources::bundled(), TrainingCorpus::new(), RunLog::in_memory(), 2, 4);
    spawn(Arc::new(state), "127.0.0.1:0".parse().unwrap()).await.unwrap()
}

#[tokio::test(flavor = "multi_thread")]
async fn score_perturb_and_slice() {
    let svc = service().await;
    let client = Client::new(svc.url());

    let models = client.models().await.unwrap();
    assert_eq!(models.models.len(), 4);

    let created = client
        .create_assignment(&CreateAssignmentRequest {
            source: "Bees carry pollen between flowers. Flowers then make seeds.".into(),
            summaries: vec![SummaryInput::from("Bees move pollen. Seeds follow.")],
        })
        .await
        .unwrap();
    let fetched = client.assignment(&created.assignment_id).await.unwrap();
    assert_eq!(fetched, created);

    let scored = client
        .score(&ScoreRequest {
            assignment_id: Some(created.assignment_id.clone()),
            model_ids: vec!["content".into(), "wording".into()],
            ..Default::default()
        })
        .await
        .unwrap();
    assert_eq!(scored.run.run_number, 1);
    assert_eq!(scored.results.len(), 2);

    let slot = &created.assignment.slots[0].slot_id;
    let job = client
        .perturb(&PerturbRequest {
            assignment_id: created.assignment_id.clone(),
            slot_id: slot.clone(),
            model_id: "content".into(),
            method: Method::Sentences,
        })
        .await
        .unwrap();
    let done = client.wait_job(&job.job_id, Duration::from_millis(10), Duration::from_secs(10)).await.unwrap();
    assert_eq!(done.report.unwrap().variants.len(), 2);

    let slice = client
        .attention(&created.assignment_id, slot, "content-global", &AttentionQuery::new(2, SliceMode::Rug { layer: 0, head: 0 }))
        .await
        .unwrap();
    assert_eq!(slice.slice.query, 2);

    let history = client.history(slot).await.unwrap();
    assert_eq!(history.rows.len(), 2);
    svc.stop().await.unwrap();
}

#[tokio::test]
async fn api_errors_carry_status_and_body() {
    let svc = service().await;
    let client = Client::new(svc.url());
    let err = client.assignment("asg-404").await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::NOT_FOUND));
    let ClientError::Api { body, .. } = &err else { panic!("{err:?}") };
    assert!(!body.error.is_empty());

    let err = client.derive_scores(vec![[1.0; 6]]).await.unwrap_err();
    assert_eq!(err.status(), Some(StatusCode::BAD_REQUEST));
    svc.stop().await.unwrap();
}

#[tokio::test]
async fn unreachable_server_is_a_transport_error() {
    let client = Client::new("http://127.0.0.1:9");
    let err = client.models().await.unwrap_err();
    assert!(matches!(err, ClientError::Transport { .. }), "{err:?}");
    assert_eq!(err.status(), None);
}
