use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::runlog::RunLog;
use super::training::TrainingCorpus;

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Content,
    Wording,
}

impl Dimension {
    /// Maps a model's score label to an axis; anything but "wording" reads
    /// as content.
    pub fn from_label(label: &str) -> Self {
        if label.eq_ignore_ascii_case("wording") {
            Dimension::Wording
        } else {
            Dimension::Content
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub model_id: String,
    pub dimension: Dimension,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPoint {
    pub example_id: String,
    pub x: f64,
    pub y: f64,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPoint {
    pub slot_id: String,
    pub run_number: u64,
    pub x: f64,
    pub y: f64,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunArrow {
    pub slot_id: String,
    pub from_run: u64,
    pub to_run: u64,
    pub from: [f64; 2],
    pub to: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPayload {
    pub x: Axis,
    pub y: Axis,
    pub training_points: Vec<TrainingPoint>,
    pub run_points: Vec<RunPoint>,
    pub current_points: Vec<RunPoint>,
    pub run_arrows: Vec<RunArrow>,
    pub x_hist: Vec<HistogramBin>,
    pub y_hist: Vec<HistogramBin>,
}

const SNIPPET_CHARS: usize = 80;

fn snippet(text: &str) -> String {
    let mut s: String = text.chars().take(SNIPPET_CHARS).collect();
    if text.chars().nth(SNIPPET_CHARS).is_some() {
        s.push('…');
    }
    s
}

pub fn scatter_payload(corpus: &TrainingCorpus, log: &RunLog, x: Axis, y: Axis) -> ScatterPayload {
    let pick = |d: Dimension, content: f64, wording: f64| match d {
        Dimension::Content => content,
        Dimension::Wording => wording,
    };
    let training_points: Vec<TrainingPoint> = corpus
        .examples()
        .iter()
        .map(|e| TrainingPoint {
            example_id: e.example_id.clone(),
            x: pick(x.dimension, e.content, e.wording),
            y: pick(y.dimension, e.content, e.wording),
            snippet: snippet(&e.summary),
        })
        .collect();

    // A run contributes a point for a slot once both axis models scored it.
    let mut run_points = Vec::new();
    for record in log.records() {
        let mut per_slot: BTreeMap<&str, (Option<f64>, Option<f64>, &str)> = BTreeMap::new();
        for e in &record.entries {
            let slot = per_slot.entry(&e.slot_id).or_insert((None, None, &e.summary_text));
            if e.model_id == x.model_id {
                slot.0 = Some(e.score);
            }
            if e.model_id == y.model_id {
                slot.1 = Some(e.score);
            }
        }
        for (slot_id, (px, py, text)) in per_slot {
            if let (Some(px), Some(py)) = (px, py) {
                run_points.push(RunPoint {
                    slot_id: slot_id.to_string(),
                    run_number: record.run_number,
                    x: px,
                    y: py,
                    snippet: snippet(text),
                });
            }
        }
    }

    let mut by_slot: BTreeMap<&str, Vec<&RunPoint>> = BTreeMap::new();
    for p in &run_points {
        by_slot.entry(&p.slot_id).or_default().push(p);
    }
    let mut run_arrows = Vec::new();
    let mut current_points = Vec::new();
    for points in by_slot.values() {
        for pair in points.windows(2) {
            run_arrows.push(RunArrow {
                slot_id: pair[0].slot_id.clone(),
                from_run: pair[0].run_number,
                to_run: pair[1].run_number,
                from: [pair[0].x, pair[0].y],
                to: [pair[1].x, pair[1].y],
            });
        }
        current_points.push((*points.last().expect("non-empty group")).clone());
    }

    let tx: Vec<f64> = training_points.iter().map(|p| p.x).collect();
    let ty: Vec<f64> = training_points.iter().map(|p| p.y).collect();
    let x_hist = histogram(&tx, run_points.iter().map(|p| p.x), HISTOGRAM_BINS);
    let y_hist = histogram(&ty, run_points.iter().map(|p| p.y), HISTOGRAM_BINS);

    ScatterPayload {
        x,
        y,
        training_points,
        run_points,
        current_points,
        run_arrows,
        x_hist,
        y_hist,
    }
}

/// Equal-width bins spanning `counted` plus `extra`; only `counted` values
/// add to the bin counts. Returns no bins when there is no data at all.
pub fn histogram(counted: &[f64], extra: impl IntoIterator<Item = f64>, bins: usize) -> Vec<HistogramBin> {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in counted.iter().copied().chain(extra) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if bins == 0 || lo > hi {
        return Vec::new();
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lo: lo + width * i as f64,
            hi: if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 },
            count: 0,
        })
        .collect();
    for &v in counted {
        let idx = (((v - lo) / width).floor() as usize).min(bins - 1);
        out[idx].count += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{AnalysisOptions, Assignment};

    fn axes() -> (Axis, Axis) {
        (
            Axis { model_id: "c".into(), dimension: Dimension::Content },
            Axis { model_id: "w".into(), dimension: Dimension::Wording },
        )
    }

    #[test]
    fn one_arrow_between_two_runs() {
        let mut log = RunLog::in_memory();
        let a = Assignment::new("a", "src", [("one".to_string(), AnalysisOptions::default())]);
        for s in [0.1, 0.4] {
            log.record_run(&a, &[("a/0".into(), "c".into(), s), ("a/0".into(), "w".into(), -s)]).unwrap();
        }
        let (x, y) = axes();
        let p = scatter_payload(&TrainingCorpus::new(), &log, x, y);
        assert!(p.training_points.is_empty());
        assert_eq!(p.run_arrows.len(), 1);
        assert_eq!((p.run_arrows[0].from_run, p.run_arrows[0].to_run), (1, 2));
        assert_eq!(p.run_arrows[0].to, [0.4, -0.4]);
        assert_eq!(p.current_points.len(), 1);
        assert_eq!(p.x_hist.iter().map(|b| b.count).sum::<usize>(), 0);
    }

    #[test]
    fn histogram_partition() {
        let v = [0.0, 0.5, 1.0, 1.0, 2.0];
        let h = histogram(&v, [3.0], 4);
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), [2, 2, 1, 0]);
        assert_eq!(h[3].hi, 3.0);
        assert!(histogram(&[], [], 20).is_empty());
        assert_eq!(histogram(&[1.0], [], 20).iter().map(|b| b.count).sum::<usize>(), 1);
    }
}
