mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scorelens_core::attention::{storage_cells, AttentionTensor, CellState, SliceMode, StorageMode};
use scorelens_core::scoring::{build_model_input, parse_response, AttentionPayload, GlobalMode, ModelConfig, ReferenceModel, Segment};

fn words(rng: &mut ChaCha8Rng, count: usize) -> String {
    const VOCAB: &[&str] = &["plants", "light", "water", "the", "sun", "rises", "and", "falls", "ice", "moves", "bees", "fly"];
    (0..count).map(|_| VOCAB[rng.random_range(0..VOCAB.len())]).collect::<Vec<_>>().join(" ")
}

fn tensor_for(seed: u64, mode: GlobalMode, src_words: usize, sum_words: usize) -> (ModelConfig, scorelens_core::scoring::ModelInput, AttentionTensor) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = ModelConfig::test_scale("m", seed).with_global_mode(mode);
    let source = words(&mut rng, src_words);
    let summary = words(&mut rng, sum_words);
    let model = ReferenceModel::new(cfg.clone()).unwrap();
    let input = build_model_input(&source, &summary, &cfg, model.tokenizer()).unwrap();
    let (_, tensor) = model.reference_forward(&input).unwrap();
    (cfg, input, tensor)
}

#[test]
fn storage_arithmetic() {
    assert_eq!(storage_cells(700, 256, 12, 12, StorageMode::Windowed), 25_804_800);
    assert_eq!(storage_cells(700, 256, 12, 12, StorageMode::FullGlobal), 70_560_000);
}

#[test]
fn rows_normalized_and_inside_mask() {
    for seed in 0..20u64 {
        let mode = if seed % 2 == 0 { GlobalMode::ClsOnly } else { GlobalMode::SummaryGlobal };
        let (cfg, input, t) = tensor_for(seed, mode, 10 + seed as usize * 3, 4);
        let n = input.len();
        let half = cfg.window / 2;
        for l in 0..cfg.layers {
            for h in 0..cfg.heads {
                for q in 0..n {
                    let mut sum = 0.0;
                    for k in 0..n {
                        let permitted = q.abs_diff(k) <= half || input.global_flags[q] || input.global_flags[k];
                        let cell = t.classify_cell(l, h, q, k).unwrap();
                        assert_eq!(cell.is_missing(), !permitted, "({l},{h},{q},{k})");
                        sum += f64::from(cell.value().unwrap_or(0.0));
                    }
                    assert!((sum - 1.0).abs() < 1e-5);
                }
            }
        }
    }
}

#[test]
fn global_mode_contract() {
    let (cfg, input, t) = tensor_for(5, GlobalMode::SummaryGlobal, 30, 6);
    let summary: Vec<usize> = (0..input.len()).filter(|&i| input.segments[i] == Segment::Summary).collect();
    assert!(!summary.is_empty());
    for &q in &summary {
        for l in 0..cfg.layers {
            for h in 0..cfg.heads {
                let rug = t.slice(q, SliceMode::Rug { layer: l, head: h }).unwrap();
                assert!(rug.cells.iter().all(|c| !c[0].is_missing()));
            }
        }
    }

    let (cfg, input, t) = tensor_for(5, GlobalMode::ClsOnly, 30, 6);
    let q = 15;
    assert_eq!(input.segments[q], Segment::Source);
    let half = cfg.window / 2;
    let mut expected: Vec<usize> = (q - half..=q + half).collect();
    expected.insert(0, 0);
    for l in 0..cfg.layers {
        for h in 0..cfg.heads {
            let keys: Vec<usize> = t.row(l, h, q).into_iter().map(|(k, _)| k).collect();
            assert_eq!(keys, expected);
        }
    }
}

#[test]
fn zero_is_not_missing() {
    let fixture = std::fs::read(common::fixture_path("external_response.json")).unwrap();
    let response = parse_response(&fixture).unwrap();
    let t = response.attention.unwrap().decode().unwrap();
    assert_eq!(t.classify_cell(0, 0, 1, 0).unwrap(), CellState::Weight { v: 0.2 });
    assert!(t.classify_cell(0, 0, 1, 3).unwrap().is_missing());
    assert_eq!(t.row(0, 0, 3), vec![(0, 0.5), (2, 0.25), (3, 0.25)]);
}

#[test]
fn slices_agree_with_cells() {
    let (cfg, input, t) = tensor_for(9, GlobalMode::SummaryGlobal, 20, 5);
    for q in [0, 3, input.len() - 2] {
        let by_layer = t.slice(q, SliceMode::ByLayer { head: 1 }).unwrap();
        let by_head = t.slice(q, SliceMode::ByHead { layer: 2 }).unwrap();
        assert_eq!(by_layer.columns, (0..cfg.layers).collect::<Vec<_>>());
        for k in 0..input.len() {
            for l in 0..cfg.layers {
                assert_eq!(by_layer.cells[k][l], t.classify_cell(l, 1, q, k).unwrap());
            }
            for h in 0..cfg.heads {
                assert_eq!(by_head.cells[k][h], t.classify_cell(2, h, q, k).unwrap());
            }
        }
    }
    assert!(t.slice(input.len(), SliceMode::Rug { layer: 0, head: 0 }).is_err());
    assert!(t.slice(0, SliceMode::ByHead { layer: cfg.layers }).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wire_round_trip(seed in 0u64..1000, src in 1usize..40, sum in 1usize..8, global in any::<bool>()) {
        let mode = if global { GlobalMode::SummaryGlobal } else { GlobalMode::ClsOnly };
        let (_, _, t) = tensor_for(seed, mode, src, sum);
        let payload = AttentionPayload::from_tensor(&t);
        let json = serde_json::to_vec(&payload).unwrap();
        let back: AttentionPayload = serde_json::from_slice(&json).unwrap();
        prop_assert_eq!(&back, &payload);
        prop_assert_eq!(back.decode().unwrap(), t.clone());
        prop_assert!(t.check_normalized(1e-5).is_ok());
        let g = t.global_indices().len();
        let expected = t.layers() * t.heads() * (t.n() * (t.window() + 1) + 2 * g * t.n());
        prop_assert_eq!(t.stored_cells(), expected);
    }
}
