//! Independent oracles and fixture loaders shared by integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::HashMap;
use std::path::PathBuf;

use nalgebra::DMatrix;
use scorelens_core::scoring::{ModelInput, ReferenceModel};
use scorelens_core::perturb::symspell::CORPUS_WORDS;
use scorelens_core::perturb::SymSpell;
use serde::Deserialize;

/// The core crate's data directory, from either the core crate or a
/// sibling crate that includes this module.
pub fn data_dir() -> PathBuf {
    let here = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let own = here.join("data");
    if own.join("fixtures").is_dir() {
        own
    } else {
        here.join("../core/data")
    }
}

pub fn fixture_path(name: &str) -> PathBuf {
    data_dir().join("fixtures").join(name)
}

#[derive(Debug, Clone, Deserialize)]
pub struct Pair {
    pub source: String,
    pub summary: String,
}

pub fn pairs() -> Vec<Pair> {
    serde_json::from_str(&std::fs::read_to_string(fixture_path("pairs.json")).unwrap()).unwrap()
}

pub fn rubric_8x6() -> Vec<[f64; 6]> {
    serde_json::from_str(&std::fs::read_to_string(fixture_path("rubric_8x6.json")).unwrap()).unwrap()
}

// ---------------------------------------------------------------------------
// Dense forward pass

pub struct DenseOutput {
    pub score: f64,
    /// `[layer][head]`, n×n, zero where the mask forbids.
    pub attention: Vec<Vec<DMatrix<f64>>>,
}

fn sinusoid(pos: usize, d: usize) -> Vec<f64> {
    (0..d)
        .map(|j| {
            let rate = 1.0 / 10000f64.powf((2 * (j / 2)) as f64 / d as f64);
            let a = pos as f64 * rate;
            if j % 2 == 0 { a.sin() } else { a.cos() }
        })
        .collect()
}

fn mat(m: &scorelens_core::scoring::Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

fn add_row_bias(x: &mut DMatrix<f64>, b: &[f64]) {
    for mut row in x.row_iter_mut() {
        for (v, bb) in row.iter_mut().zip(b) {
            *v += bb;
        }
    }
}

fn layer_norm_rows(x: &DMatrix<f64>, gain: &[f64], bias: &[f64]) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let n = row.len() as f64;
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let inv = 1.0 / (var + 1e-5).sqrt();
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - mean) * inv * gain[j] + bias[j];
        }
    }
    out
}

/// Whole-matrix re-derivation of the reference encoder: dense n×n logits,
/// mask applied as −∞ from the window/global rule written out here.
pub fn dense_forward(model: &ReferenceModel, input: &ModelInput) -> DenseOutput {
    let cfg = model.config();
    let (n, d, heads) = (input.tokens.len(), cfg.embed_dim, cfg.heads);
    let hd = d / heads;
    let half = cfg.window / 2;
    let allowed = |q: usize, k: usize| q.abs_diff(k) <= half || input.global_flags[q] || input.global_flags[k];

    let mut x = DMatrix::from_fn(n, d, |i, j| model.embedding(input.tokens[i])[j]);
    for i in 0..n {
        let p = sinusoid(i, d);
        for j in 0..d {
            x[(i, j)] += p[j];
        }
    }
    let mut attention = Vec::new();
    for w in model.layers() {
        let mut q = &x * mat(&w.query);
        add_row_bias(&mut q, &w.query_bias);
        let mut k = &x * mat(&w.key);
        add_row_bias(&mut k, &w.key_bias);
        let mut v = &x * mat(&w.value);
        add_row_bias(&mut v, &w.value_bias);

        let mut context = DMatrix::zeros(n, d);
        let mut per_head = Vec::new();
        for h in 0..heads {
            let qh = q.columns(h * hd, hd);
            let kh = k.columns(h * hd, hd);
            let vh = v.columns(h * hd, hd);
            let mut s = qh * kh.transpose() / (hd as f64).sqrt();
            for i in 0..n {
                let max = (0..n).filter(|&j| allowed(i, j)).map(|j| s[(i, j)]).fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for j in 0..n {
                    s[(i, j)] = if allowed(i, j) { (s[(i, j)] - max).exp() } else { 0.0 };
                    total += s[(i, j)];
                }
                for j in 0..n {
                    s[(i, j)] /= total;
                }
            }
            context.columns_mut(h * hd, hd).copy_from(&(&s * vh));
            per_head.push(s);
        }
        attention.push(per_head);

        let mut attn = &context * mat(&w.output);
        add_row_bias(&mut attn, &w.output_bias);
        let x1 = layer_norm_rows(&(&x + attn), &w.attn_norm_gain, &w.attn_norm_bias);
        let mut hidden = &x1 * mat(&w.ff_in);
        add_row_bias(&mut hidden, &w.ff_in_bias);
        hidden.apply(|v| *v = v.max(0.0));
        let mut ff = hidden * mat(&w.ff_out);
        add_row_bias(&mut ff, &w.ff_out_bias);
        x = layer_norm_rows(&(&x1 + ff), &w.ff_norm_gain, &w.ff_norm_bias);
    }
    let (hw, hb) = model.head();
    let score = x.row(0).iter().zip(hw).map(|(a, b)| a * b).sum::<f64>() + hb;
    DenseOutput { score, attention }
}

// ---------------------------------------------------------------------------
// Spelling

/// Full Damerau-Levenshtein (restricted / OSA) by the textbook table.
pub fn osa(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        t[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let cost = usize::from(a[i - 1] != b[j - 1]);
            t[i][j] = (t[i - 1][j] + 1).min(t[i][j - 1] + 1).min(t[i - 1][j - 1] + cost);
            if i > 1 && j > 1 && a[i - 1] == b[j - 2] && a[i - 2] == b[j - 1] {
                t[i][j] = t[i][j].min(t[i - 2][j - 2] + 1);
            }
        }
    }
    t[a.len()][b.len()]
}

/// Scans the whole dictionary: smallest distance, then highest count, then
/// lexicographic term.
pub fn brute_top(dict: &HashMap<String, u64>, word: &str, max: usize) -> Option<(String, usize, u64)> {
    dict.iter()
        .filter(|(t, _)| t.chars().count().abs_diff(word.chars().count()) <= max)
        .filter_map(|(t, &c)| {
            let d = osa(word, t);
            (d <= max).then(|| (t.clone(), d, c))
        })
        .min_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)))
}

pub fn dictionary(speller: &SymSpell) -> HashMap<String, u64> {
    speller.words().map(|(w, c)| (w.to_string(), c)).collect()
}

/// Exact-match segmentation by dynamic programming over every split point,
/// maximising the summed log10 word probability. Unknown pieces get the
/// usual length-penalised probability.
pub fn segment_dp(dict: &HashMap<String, u64>, text: &str, max_len: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let score = |w: &str| match dict.get(&w.to_lowercase()) {
        Some(&c) => (c as f64 / CORPUS_WORDS).log10(),
        None => (10.0 / (CORPUS_WORDS * 10f64.powi(w.chars().count() as i32))).log10(),
    };
    let mut best: Vec<Option<(f64, usize)>> = vec![None; n + 1];
    best[0] = Some((0.0, 0));
    for end in 1..=n {
        for start in end.saturating_sub(max_len)..end {
            let Some((prev, _)) = best[start] else { continue };
            let w: String = chars[start..end].iter().collect();
            let cand = prev + score(&w);
            if best[end].is_none_or(|(b, _)| cand > b) {
                best[end] = Some((cand, start));
            }
        }
    }
    let mut words = Vec::new();
    let mut end = n;
    while end > 0 {
        let start = best[end].unwrap().1;
        words.push(chars[start..end].iter().collect());
        end = start;
    }
    words.reverse();
    words
}

// ---------------------------------------------------------------------------
// PCA

/// Cyclic Jacobi rotations on a symmetric matrix. Returns eigenvalues and
/// eigenvectors (columns), sorted by descending eigenvalue.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a = a.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|r| v[r][i]).collect()).collect();
    (values, vectors)
}

/// PCA scores for the first two components, z-normalized, signs not
/// aligned.
pub fn pca_oracle(rows: &[[f64; 6]]) -> Vec<Vec<f64>> {
    let n = rows.len();
    let means: Vec<f64> = (0..6).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = rows.iter().map(|r| (0..6).map(|j| r[j] - means[j]).collect()).collect();
    let cov: Vec<Vec<f64>> = (0..6)
        .map(|i| (0..6).map(|j| centered.iter().map(|r| r[i] * r[j]).sum::<f64>() / (n as f64 - 1.0)).collect())
        .collect();
    let (_, vecs) = jacobi_eigen(&cov);
    vecs.iter()
        .take(2)
        .map(|v| {
            let s: Vec<f64> = centered.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect();
            let m = s.iter().sum::<f64>() / n as f64;
            let sd = (s.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
            s.iter().map(|x| (x - m) / sd).collect()
        })
        .collect()
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / ((a.len() as f64 - 1.0) * sa * sb)
}

/// Same vector up to a global sign flip.
pub fn max_diff_up_to_sign(a: &[f64], b: &[f64]) -> f64 {
    let plus = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let minus = a.iter().zip(b).map(|(x, y)| (x + y).abs()).fold(0.0, f64::max);
    plus.min(minus)
}
