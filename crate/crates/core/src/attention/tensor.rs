use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::MaskSpec;

/// Sparse attention rows as produced by a scorer: for each (layer, head,
/// query) the list of `(key, weight)` pairs it attended to.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAttention {
    n: usize,
    layers: usize,
    heads: usize,
    rows: Vec<Vec<(usize, f32)>>,
}

impl RawAttention {
    pub fn new(n: usize, layers: usize, heads: usize) -> Self {
        RawAttention {
            n,
            layers,
            heads,
            rows: vec![Vec::new(); n * layers * heads],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    fn index(&self, layer: usize, head: usize, query: usize) -> usize {
        (layer * self.heads + head) * self.n + query
    }

    pub fn row(&self, layer: usize, head: usize, query: usize) -> &[(usize, f32)] {
        &self.rows[self.index(layer, head, query)]
    }

    pub fn row_mut(&mut self, layer: usize, head: usize, query: usize) -> &mut Vec<(usize, f32)> {
        let i = self.index(layer, head, query);
        &mut self.rows[i]
    }

    /// Looks up a single weight; `None` when the row has no entry for `key`.
    pub fn weight(&self, layer: usize, head: usize, query: usize, key: usize) -> Option<f32> {
        self.row(layer, head, query)
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, w)| *w)
    }
}

/// Display state of one (query, key) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "s")]
pub enum CellState {
    #[serde(rename = "w")]
    Weight { v: f32 },
    /// A stored weight of exactly 0.0.
    #[serde(rename = "z")]
    Zero,
    /// The mask forbids the pair; nothing was computed.
    #[serde(rename = "m")]
    Missing,
}

impl CellState {
    fn from_stored(x: f32) -> Self {
        if x.is_nan() {
            CellState::Missing
        } else if x == 0.0 {
            CellState::Zero
        } else {
            CellState::Weight { v: x }
        }
    }

    pub fn value(&self) -> Option<f32> {
        match self {
            CellState::Weight { v } => Some(*v),
            CellState::Zero => Some(0.0),
            CellState::Missing => None,
        }
    }

    pub fn is_missing(&self) -> bool {
        matches!(self, CellState::Missing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SliceMode {
    /// Keys × layers at a fixed head.
    ByLayer { head: usize },
    /// Keys × heads at a fixed layer.
    ByHead { layer: usize },
    /// One strip of keys at a fixed layer and head.
    Rug { layer: usize, head: usize },
}

/// `cells[key][column]`; columns are layers, heads, or a single rug column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slice {
    pub query: usize,
    pub columns: Vec<usize>,
    pub cells: Vec<Vec<CellState>>,
}

/// Attention weights in a windowed layout.
///
/// Non-global queries keep a band of `window + 1` cells (key offsets
/// `-window/2..=window/2`) plus one column per global key; global queries
/// keep a full row. A key that is both in-window and global is stored only
/// in the global block, so the band cell for it stays missing. Missing
/// cells are NaN internally and never surface as 0.0.
#[derive(Debug, Clone)]
pub struct AttentionTensor {
    n: usize,
    layers: usize,
    heads: usize,
    window: usize,
    global_indices: Vec<usize>,
    global_slot: Vec<Option<usize>>,
    band: Vec<f32>,
    global_rows: Vec<f32>,
    global_cols: Vec<f32>,
}

/// Packs raw scorer rows into an [`AttentionTensor`].
///
/// Every entry must be permitted by `mask`, and every permitted pair must
/// be present exactly once.
pub fn ingest_attention(raw: &RawAttention, mask: &MaskSpec) -> Result<AttentionTensor> {
    let n = raw.n;
    if mask.len() != n {
        return Err(Error::schema(
            "attention",
            format!("mask covers {} tokens, attention {}", mask.len(), n),
        ));
    }
    let global_indices = mask.global_indices().to_vec();
    let g = global_indices.len();
    let mut global_slot = vec![None; n];
    for (slot, &pos) in global_indices.iter().enumerate() {
        global_slot[pos] = Some(slot);
    }
    let window = mask.window();
    let hw = mask.half_window();
    let width = window + 1;
    let planes = raw.layers * raw.heads;
    let mut t = AttentionTensor {
        n,
        layers: raw.layers,
        heads: raw.heads,
        window,
        global_indices,
        global_slot,
        band: vec![f32::NAN; planes * n * width],
        global_rows: vec![f32::NAN; planes * g * n],
        global_cols: vec![f32::NAN; planes * n * g],
    };

    for layer in 0..raw.layers {
        for head in 0..raw.heads {
            for query in 0..n {
                let row = raw.row(layer, head, query);
                for &(key, weight) in row {
                    if key >= n || !mask.permits(query, key) {
                        return Err(Error::MaskViolation {
                            layer,
                            head,
                            query,
                            key,
                        });
                    }
                    if !(0.0..=1.0).contains(&weight) {
                        return Err(Error::schema(
                            "attention",
                            format!("weight {weight} at ({layer},{head},{query},{key}) outside [0, 1]"),
                        ));
                    }
                    let cell = t.cell_mut(layer, head, query, key);
                    if !cell.is_nan() {
                        return Err(Error::schema(
                            "attention",
                            format!("duplicate key at ({layer},{head},{query},{key})"),
                        ));
                    }
                    *cell = weight;
                }
                let expected = if t.global_slot[query].is_some() {
                    n
                } else {
                    let lo = query.saturating_sub(hw);
                    let hi = (query + hw + 1).min(n);
                    (hi - lo) + t.global_indices.iter().filter(|&&k| k < lo || k >= hi).count()
                };
                if row.len() != expected {
                    return Err(Error::schema(
                        "attention",
                        format!(
                            "row ({layer},{head},{query}) has {} of {expected} permitted keys",
                            row.len()
                        ),
                    ));
                }
            }
        }
    }
    Ok(t)
}

impl AttentionTensor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn heads(&self) -> usize {
        self.heads
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn global_indices(&self) -> &[usize] {
        &self.global_indices
    }

    pub fn is_global(&self, pos: usize) -> bool {
        self.global_slot[pos].is_some()
    }

    /// Cells actually allocated, missing or not.
    pub fn stored_cells(&self) -> usize {
        self.band.len() + self.global_rows.len() + self.global_cols.len()
    }

    fn plane(&self, layer: usize, head: usize) -> usize {
        layer * self.heads + head
    }

    /// Where (q, k) lives, or `None` when the pair is outside the mask.
    fn locate(&self, layer: usize, head: usize, q: usize, k: usize) -> Option<(Block, usize)> {
        let p = self.plane(layer, head);
        let g = self.global_indices.len();
        if let Some(slot) = self.global_slot[q] {
            return Some((Block::Rows, (p * g + slot) * self.n + k));
        }
        if let Some(slot) = self.global_slot[k] {
            return Some((Block::Cols, (p * self.n + q) * g + slot));
        }
        let hw = self.window / 2;
        if q.abs_diff(k) > hw {
            return None;
        }
        let offset = k + hw - q;
        Some((Block::Band, (p * self.n + q) * (self.window + 1) + offset))
    }

    fn cell_mut(&mut self, layer: usize, head: usize, q: usize, k: usize) -> &mut f32 {
        let (block, i) = self
            .locate(layer, head, q, k)
            .expect("caller checked the mask");
        match block {
            Block::Band => &mut self.band[i],
            Block::Rows => &mut self.global_rows[i],
            Block::Cols => &mut self.global_cols[i],
        }
    }

    fn stored(&self, layer: usize, head: usize, q: usize, k: usize) -> f32 {
        match self.locate(layer, head, q, k) {
            None => f32::NAN,
            Some((Block::Band, i)) => self.band[i],
            Some((Block::Rows, i)) => self.global_rows[i],
            Some((Block::Cols, i)) => self.global_cols[i],
        }
    }

    fn check(&self, layer: usize, head: usize, q: usize, k: usize) -> Result<()> {
        let checks = [
            ("layer", layer, self.layers),
            ("head", head, self.heads),
            ("query", q, self.n),
            ("key", k, self.n),
        ];
        for (what, index, bound) in checks {
            if index >= bound {
                return Err(Error::OutOfRange { what, index, bound });
            }
        }
        Ok(())
    }

    pub fn classify_cell(&self, layer: usize, head: usize, q: usize, k: usize) -> Result<CellState> {
        self.check(layer, head, q, k)?;
        Ok(CellState::from_stored(self.stored(layer, head, q, k)))
    }

    /// Non-missing `(key, weight)` pairs of one softmax row, ascending by key.
    pub fn row(&self, layer: usize, head: usize, q: usize) -> Vec<(usize, f32)> {
        (0..self.n)
            .filter_map(|k| {
                let w = self.stored(layer, head, q, k);
                (!w.is_nan()).then_some((k, w))
            })
            .collect()
    }

    /// Verifies every softmax row sums to one within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        for layer in 0..self.layers {
            for head in 0..self.heads {
                for q in 0..self.n {
                    let sum: f64 = self.row(layer, head, q).iter().map(|(_, w)| f64::from(*w)).sum();
                    if (sum - 1.0).abs() > tol {
                        return Err(Error::schema(
                            "attention",
                            format!("row ({layer},{head},{q}) sums to {sum}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn slice(&self, query: usize, mode: SliceMode) -> Result<Slice> {
        let (layer, head) = match mode {
            SliceMode::ByLayer { head } => (0, head),
            SliceMode::ByHead { layer } => (layer, 0),
            SliceMode::Rug { layer, head } => (layer, head),
        };
        self.check(layer, head, query, 0)?;
        let columns: Vec<usize> = match mode {
            SliceMode::ByLayer { .. } => (0..self.layers).collect(),
            SliceMode::ByHead { .. } => (0..self.heads).collect(),
            SliceMode::Rug { .. } => vec![0],
        };
        let cells = (0..self.n)
            .map(|k| {
                columns
                    .iter()
                    .map(|&c| {
                        let (l, h) = match mode {
                            SliceMode::ByLayer { head } => (c, head),
                            SliceMode::ByHead { layer } => (layer, c),
                            SliceMode::Rug { layer, head } => (layer, head),
                        };
                        CellState::from_stored(self.stored(l, h, query, k))
                    })
                    .collect()
            })
            .collect();
        Ok(Slice {
            query,
            columns,
            cells,
        })
    }

    /// Band cells of one non-global query row, offsets `-w/2..=w/2`.
    pub fn band_row(&self, layer: usize, head: usize, q: usize) -> &[f32] {
        let w = self.window + 1;
        let start = (self.plane(layer, head) * self.n + q) * w;
        &self.band[start..start + w]
    }

    /// Full row of the `slot`-th global query.
    pub fn global_row(&self, layer: usize, head: usize, slot: usize) -> &[f32] {
        let g = self.global_indices.len();
        let start = (self.plane(layer, head) * g + slot) * self.n;
        &self.global_rows[start..start + self.n]
    }

    /// Weights from query `q` to each global key.
    pub fn global_col_row(&self, layer: usize, head: usize, q: usize) -> &[f32] {
        let g = self.global_indices.len();
        let start = (self.plane(layer, head) * self.n + q) * g;
        &self.global_cols[start..start + g]
    }
}

// Bitwise, so missing (NaN) cells compare equal to each other.
impl PartialEq for AttentionTensor {
    fn eq(&self, other: &Self) -> bool {
        let same = |a: &[f32], b: &[f32]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        };
        self.n == other.n
            && self.layers == other.layers
            && self.heads == other.heads
            && self.window == other.window
            && self.global_indices == other.global_indices
            && same(&self.band, &other.band)
            && same(&self.global_rows, &other.global_rows)
            && same(&self.global_cols, &other.global_cols)
    }
}

#[derive(Debug, Clone, Copy)]
enum Block {
    Band,
    Rows,
    Cols,
}
