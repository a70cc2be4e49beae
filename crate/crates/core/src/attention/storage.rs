use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StorageMode {
    /// One cell per (token, window slot, layer, head).
    Windowed,
    /// Every token attending to every token.
    FullGlobal,
}

/// Number of attention cells held for `n` tokens, window `w`, `layers`
/// layers and `heads` heads. `w` is ignored for [`StorageMode::FullGlobal`].
pub fn storage_cells(n: u64, w: u64, layers: u64, heads: u64, mode: StorageMode) -> u64 {
    match mode {
        StorageMode::Windowed => n * w * layers * heads,
        StorageMode::FullGlobal => n * n * layers * heads,
    }
}
