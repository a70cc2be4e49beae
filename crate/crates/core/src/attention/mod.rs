//! Windowed sparse storage and slicing of attention tensors.

mod storage;
mod tensor;

pub use storage::{storage_cells, StorageMode};
pub use tensor::{ingest_attention, AttentionTensor, CellState, RawAttention, Slice, SliceMode};
