mod common;

use scorelens_core::attention::CellState;
use scorelens_core::scoring::{build_model_input, GlobalMode, ModelConfig, ReferenceModel};

fn fixtures() -> Vec<(ModelConfig, String, String)> {
    let mut out = Vec::new();
    for (i, pair) in common::pairs().into_iter().enumerate() {
        for seed in [11, 12] {
            for mode in [GlobalMode::ClsOnly, GlobalMode::SummaryGlobal] {
                let mut cfg = ModelConfig::test_scale(format!("m{i}"), seed + i as u64).with_global_mode(mode);
                cfg.layers = 2;
                out.push((cfg, pair.source.clone(), pair.summary.clone()));
            }
        }
    }
    out
}

#[test]
fn score_and_weights_match_dense_oracle() {
    let fixtures = fixtures();
    assert_eq!(fixtures.len(), 20);
    for (cfg, source, summary) in fixtures {
        let model = ReferenceModel::new(cfg.clone()).unwrap();
        let input = build_model_input(&source, &summary, &cfg, model.tokenizer()).unwrap();
        let (score, tensor) = model.reference_forward(&input).unwrap();
        let oracle = common::dense_forward(&model, &input);
        assert!((score - oracle.score).abs() < 1e-6, "{}: {score} vs {}", cfg.model_id, oracle.score);

        let n = input.len();
        for l in 0..cfg.layers {
            for h in 0..cfg.heads {
                let dense = &oracle.attention[l][h];
                for q in 0..n {
                    for k in 0..n {
                        match tensor.classify_cell(l, h, q, k).unwrap() {
                            CellState::Missing => assert_eq!(dense[(q, k)], 0.0),
                            cell => {
                                let v = f64::from(cell.value().unwrap());
                                assert!((v - dense[(q, k)]).abs() < 1e-6);
                            }
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn truncated_input_still_matches() {
    let mut cfg = ModelConfig::test_scale("short", 3);
    cfg.max_len = 24;
    cfg.layers = 1;
    let pair = &common::pairs()[0];
    let model = ReferenceModel::new(cfg.clone()).unwrap();
    let input = build_model_input(&pair.source, &pair.summary, &cfg, model.tokenizer()).unwrap();
    assert!(input.truncated);
    assert_eq!(input.len(), 24);
    let score = model.forward(&input).unwrap().score;
    assert!((score - common::dense_forward(&model, &input).score).abs() < 1e-6);
}
