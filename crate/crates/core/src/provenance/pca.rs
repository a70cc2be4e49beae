use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CRITERIA: [&str; 6] = [
    "main_idea",
    "details",
    "cohesion",
    "objective_language",
    "paraphrasing",
    "language_beyond_source",
];

/// Leading criteria that make up the content group.
pub const CONTENT_CRITERIA: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub content: Vec<f64>,
    pub wording: Vec<f64>,
    pub content_loadings: [f64; 6],
    pub wording_loadings: [f64; 6],
    /// Covariance eigenvalues of the content and wording components.
    pub content_variance: f64,
    pub wording_variance: f64,
}

/// Derives z-normalized content and wording scores from an N×6 rubric.
///
/// The two leading principal components of the centered matrix are kept,
/// each flipped to correlate positively with the row mean, and labelled by
/// their loading mass on the content criteria.
pub fn derive_component_scores(rubric: &[[f64; 6]]) -> Result<ComponentScores> {
    let n = rubric.len();
    if n < 3 {
        return Err(Error::TooFewRows(n));
    }
    for (row, values) in rubric.iter().enumerate() {
        for (column, &value) in values.iter().enumerate() {
            if !(1.0..=4.0).contains(&value) {
                return Err(Error::RubricRange { row, column, value });
            }
        }
    }
    for c in 0..6 {
        if rubric.iter().all(|r| r[c] == rubric[0][c]) {
            return Err(Error::DegenerateRubric(c));
        }
    }

    let x = DMatrix::from_fn(n, 6, |i, j| rubric[i][j]);
    let means = x.row_mean();
    let centered = DMatrix::from_fn(n, 6, |i, j| x[(i, j)] - means[j]);
    let cov = centered.transpose() * &centered / (n as f64 - 1.0);
    let eigen = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));

    let row_mean: Vec<f64> = rubric.iter().map(|r| r.iter().sum::<f64>() / 6.0).collect();
    let mut components = Vec::with_capacity(2);
    for (rank, &k) in order.iter().take(2).enumerate() {
        let mut loadings: [f64; 6] = std::array::from_fn(|j| eigen.eigenvectors[(j, k)]);
        let mut scores: Vec<f64> = (0..n)
            .map(|i| (0..6).map(|j| centered[(i, j)] * loadings[j]).sum())
            .collect();
        if covariance(&scores, &row_mean) < 0.0 {
            loadings.iter_mut().for_each(|v| *v = -*v);
            scores.iter_mut().for_each(|v| *v = -*v);
        }
        let z = z_normalize(&scores).ok_or(Error::DegenerateComponent(rank))?;
        components.push((loadings, z, eigen.eigenvalues[k]));
    }

    let mass = |l: &[f64; 6]| l[..CONTENT_CRITERIA].iter().map(|v| v.abs()).sum::<f64>();
    let (second, first) = (components.pop().unwrap(), components.pop().unwrap());
    let (content, wording) = if mass(&first.0) >= mass(&second.0) {
        (first, second)
    } else {
        (second, first)
    };
    Ok(ComponentScores {
        content: content.1,
        wording: wording.1,
        content_loadings: content.0,
        wording_loadings: wording.0,
        content_variance: content.2,
        wording_variance: wording.2,
    })
}

fn covariance(a: &[f64], b: &[f64]) -> f64 {
    let ma = a.iter().sum::<f64>() / a.len() as f64;
    let mb = b.iter().sum::<f64>() / b.len() as f64;
    a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>()
}

fn z_normalize(values: &[f64]) -> Option<Vec<f64>> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd.is_nan() || sd <= 1e-12 {
        return None;
    }
    Some(values.iter().map(|v| (v - mean) / sd).collect())
}
