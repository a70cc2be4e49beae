use super::config::ModelConfig;
use super::input::ModelInput;

/// Longformer-style attention pattern: a symmetric band of `half_window`
/// neighbours per side plus global tokens that attend to, and are attended
/// by, every position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskSpec {
    n: usize,
    half_window: usize,
    global: Vec<bool>,
    global_indices: Vec<usize>,
}

impl MaskSpec {
    pub fn new(half_window: usize, global: Vec<bool>) -> Self {
        let global_indices = global
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.then_some(i))
            .collect();
        MaskSpec {
            n: global.len(),
            half_window,
            global,
            global_indices,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn half_window(&self) -> usize {
        self.half_window
    }

    pub fn window(&self) -> usize {
        self.half_window * 2
    }

    pub fn is_global(&self, pos: usize) -> bool {
        self.global[pos]
    }

    pub fn global_indices(&self) -> &[usize] {
        &self.global_indices
    }

    pub fn in_window(&self, q: usize, k: usize) -> bool {
        q.abs_diff(k) <= self.half_window
    }

    pub fn permits(&self, q: usize, k: usize) -> bool {
        q < self.n && k < self.n && (self.in_window(q, k) || self.global[q] || self.global[k])
    }

    /// Keys visible to `q`, ascending.
    pub fn keys(&self, q: usize) -> Vec<usize> {
        if self.global[q] {
            return (0..self.n).collect();
        }
        let lo = q.saturating_sub(self.half_window);
        let hi = (q + self.half_window + 1).min(self.n);
        let mut keys: Vec<usize> = self
            .global_indices
            .iter()
            .copied()
            .filter(|&g| g < lo || g >= hi)
            .chain(lo..hi)
            .collect();
        keys.sort_unstable();
        keys
    }
}

pub fn build_attention_mask(input: &ModelInput, config: &ModelConfig) -> MaskSpec {
    MaskSpec::new(config.half_window(), input.global_flags.clone())
}
