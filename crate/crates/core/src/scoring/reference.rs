use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ModelConfig, ModelKind};
use super::input::ModelInput;
use super::mask::{build_attention_mask, MaskSpec};
use crate::attention::{ingest_attention, AttentionTensor, RawAttention};
use crate::error::{Error, Result};
use crate::text::HashingTokenizer;

const LAYER_NORM_EPS: f64 = 1e-5;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Self {
        // Glorot-uniform bound.
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        Matrix {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect(),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// `x · M + bias` for a row vector `x` of length `rows`.
    pub fn affine(&self, x: &[f64], bias: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = bias.to_vec();
        for (r, &xr) in x.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, &m) in out.iter_mut().zip(row) {
                *o += xr * m;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct LayerWeights {
    pub query: Matrix,
    pub query_bias: Vec<f64>,
    pub key: Matrix,
    pub key_bias: Vec<f64>,
    pub value: Matrix,
    pub value_bias: Vec<f64>,
    pub output: Matrix,
    pub output_bias: Vec<f64>,
    pub attn_norm_gain: Vec<f64>,
    pub attn_norm_bias: Vec<f64>,
    pub ff_in: Matrix,
    pub ff_in_bias: Vec<f64>,
    pub ff_out: Matrix,
    pub ff_out_bias: Vec<f64>,
    pub ff_norm_gain: Vec<f64>,
    pub ff_norm_bias: Vec<f64>,
}

impl LayerWeights {
    fn random(rng: &mut ChaCha8Rng, d: usize) -> Self {
        let hidden = 2 * d;
        let mut small = |len: usize, centre: f64| -> Vec<f64> {
            (0..len).map(|_| centre + rng.random_range(-0.1..0.1)).collect()
        };
        let (qb, kb, vb, ob) = (small(d, 0.0), small(d, 0.0), small(d, 0.0), small(d, 0.0));
        let (ag, ab) = (small(d, 1.0), small(d, 0.0));
        let (fib, fob) = (small(hidden, 0.0), small(d, 0.0));
        let (fg, fb) = (small(d, 1.0), small(d, 0.0));
        LayerWeights {
            query: Matrix::random(rng, d, d),
            query_bias: qb,
            key: Matrix::random(rng, d, d),
            key_bias: kb,
            value: Matrix::random(rng, d, d),
            value_bias: vb,
            output: Matrix::random(rng, d, d),
            output_bias: ob,
            attn_norm_gain: ag,
            attn_norm_bias: ab,
            ff_in: Matrix::random(rng, d, hidden),
            ff_in_bias: fib,
            ff_out: Matrix::random(rng, hidden, d),
            ff_out_bias: fob,
            ff_norm_gain: fg,
            ff_norm_bias: fb,
        }
    }
}

/// A small seeded transformer encoder with Longformer-style masking and a
/// regression head on the BEGIN token.
///
/// Post-norm blocks: `x = LN(x + Attn(x))`, `x = LN(x + FF(x))` with a ReLU
/// feed-forward of width `2d`. Token embeddings are hashed from
/// `(seed, token id, dim)` rather than stored, so full-size vocabularies
/// cost nothing.
#[derive(Debug, Clone)]
pub struct ReferenceModel {
    config: ModelConfig,
    tokenizer: HashingTokenizer,
    embed_seed: u64,
    layers: Vec<LayerWeights>,
    head_weight: Vec<f64>,
    head_bias: f64,
}

#[derive(Debug, Clone)]
pub struct ReferenceOutput {
    pub score: f64,
    pub raw_attention: RawAttention,
    pub mask: MaskSpec,
}

impl ReferenceModel {
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        if config.kind != ModelKind::Reference {
            return Err(Error::InvalidConfig {
                model_id: config.model_id.clone(),
                reason: "not a reference model".into(),
            });
        }
        let d = config.embed_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let embed_seed = rng.random();
        let layers = (0..config.layers)
            .map(|_| LayerWeights::random(&mut rng, d))
            .collect();
        let bound = 1.0 / (d as f64).sqrt();
        let head_weight = (0..d).map(|_| rng.random_range(-bound..bound)).collect();
        let head_bias = rng.random_range(-0.1..0.1);
        Ok(ReferenceModel {
            config,
            tokenizer: HashingTokenizer::default(),
            embed_seed,
            layers,
            head_weight,
            head_bias,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn tokenizer(&self) -> &HashingTokenizer {
        &self.tokenizer
    }

    pub fn layers(&self) -> &[LayerWeights] {
        &self.layers
    }

    pub fn head(&self) -> (&[f64], f64) {
        (&self.head_weight, self.head_bias)
    }

    /// Hashed embedding vector for a token id, entries uniform in [-1, 1).
    pub fn embedding(&self, id: u32) -> Vec<f64> {
        (0..self.config.embed_dim)
            .map(|j| {
                let key = self.embed_seed ^ (u64::from(id) << 32) ^ j as u64;
                let bits = splitmix64(key) >> 11;
                bits as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect()
    }

    pub fn position_encoding(pos: usize, d: usize) -> Vec<f64> {
        (0..d)
            .map(|j| {
                let pair = (j / 2) as f64;
                let angle = pos as f64 / 10000f64.powf(2.0 * pair / d as f64);
                if j % 2 == 0 {
                    angle.sin()
                } else {
                    angle.cos()
                }
            })
            .collect()
    }

    /// Runs the encoder over `input` and returns the score plus every
    /// layer/head attention row (sparse, restricted to the mask).
    pub fn forward(&self, input: &ModelInput) -> Result<ReferenceOutput> {
        let n = input.len();
        if n > self.config.max_len {
            return Err(Error::SummaryTooLong {
                tokens: n,
                limit: self.config.max_len,
            });
        }
        let d = self.config.embed_dim;
        let heads = self.config.heads;
        let head_dim = d / heads;
        let scale = 1.0 / (head_dim as f64).sqrt();
        let mask = build_attention_mask(input, &self.config);
        let key_lists: Vec<Vec<usize>> = (0..n).map(|q| mask.keys(q)).collect();
        let mut raw = RawAttention::new(n, self.config.layers, heads);

        let mut x: Vec<Vec<f64>> = input
            .tokens
            .iter()
            .enumerate()
            .map(|(pos, &id)| {
                let mut e = self.embedding(id);
                for (v, p) in e.iter_mut().zip(Self::position_encoding(pos, d)) {
                    *v += p;
                }
                e
            })
            .collect();

        for (l, w) in self.layers.iter().enumerate() {
            let q: Vec<Vec<f64>> = x.iter().map(|r| w.query.affine(r, &w.query_bias)).collect();
            let k: Vec<Vec<f64>> = x.iter().map(|r| w.key.affine(r, &w.key_bias)).collect();
            let v: Vec<Vec<f64>> = x.iter().map(|r| w.value.affine(r, &w.value_bias)).collect();

            let mut context = vec![vec![0.0; d]; n];
            let mut logits = Vec::new();
            for (qi, keys) in key_lists.iter().enumerate() {
                for h in 0..heads {
                    let cols = h * head_dim..(h + 1) * head_dim;
                    let qh = &q[qi][cols.clone()];
                    logits.clear();
                    logits.extend(keys.iter().map(|&kj| {
                        qh.iter().zip(&k[kj][cols.clone()]).map(|(a, b)| a * b).sum::<f64>() * scale
                    }));
                    softmax_in_place(&mut logits);
                    let row = raw.row_mut(l, h, qi);
                    for (&kj, &a) in keys.iter().zip(&logits) {
                        row.push((kj, a as f32));
                        for (c, vv) in context[qi][cols.clone()].iter_mut().zip(&v[kj][cols.clone()]) {
                            *c += a * vv;
                        }
                    }
                }
            }

            for (xi, ci) in x.iter_mut().zip(&context) {
                let attn = w.output.affine(ci, &w.output_bias);
                let summed: Vec<f64> = xi.iter().zip(&attn).map(|(a, b)| a + b).collect();
                let normed = layer_norm(&summed, &w.attn_norm_gain, &w.attn_norm_bias);
                let mut hidden = w.ff_in.affine(&normed, &w.ff_in_bias);
                hidden.iter_mut().for_each(|h| *h = h.max(0.0));
                let ff = w.ff_out.affine(&hidden, &w.ff_out_bias);
                let summed: Vec<f64> = normed.iter().zip(&ff).map(|(a, b)| a + b).collect();
                *xi = layer_norm(&summed, &w.ff_norm_gain, &w.ff_norm_bias);
            }
        }

        let score = x[0]
            .iter()
            .zip(&self.head_weight)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            + self.head_bias;
        Ok(ReferenceOutput {
            score,
            raw_attention: raw,
            mask,
        })
    }

    /// Score plus the packed attention tensor.
    pub fn reference_forward(&self, input: &ModelInput) -> Result<(f64, AttentionTensor)> {
        let out = self.forward(input)?;
        let tensor = ingest_attention(&out.raw_attention, &out.mask)?;
        Ok((out.score, tensor))
    }
}

fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        total += *x;
    }
    for x in xs.iter_mut() {
        *x /= total;
    }
}

fn layer_norm(x: &[f64], gain: &[f64], bias: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
    x.iter()
        .zip(gain.iter().zip(bias))
        .map(|(v, (g, b))| (v - mean) * inv * g + b)
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
