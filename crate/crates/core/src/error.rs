use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("illegal configuration: {0}")]
    IllegalConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("no weight belongs to any of the allowed classes")]
    EmptyRestriction,

    #[error("standard deviation needs at least 2 components, got {0}")]
    DegenerateVector(usize),

    #[error("invalid training parameters: {0}")]
    InvalidParams(String),

    #[error("slot (bootstrap {bootstrap}, layer {layer}) rejected {attempts} classifiers in a row")]
    SlotExhausted {
        bootstrap: usize,
        layer: usize,
        attempts: usize,
    },

    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(u8),

    #[error("cannot downsample {src_w}x{src_h} to larger target {dst_w}x{dst_h}")]
    UpsampleRequested {
        src_w: usize,
        src_h: usize,
        dst_w: usize,
        dst_h: usize,
    },

    #[error("malformed image {}: {reason}", path.display())]
    MalformedImage { path: PathBuf, reason: String },

    #[error("class directory {} contains no data files", .0.display())]
    EmptyClass(PathBuf),

    #[error("inconsistent exemplar count: class {class} has {found}, expected {expected}")]
    InconsistentExemplarCount {
        class: usize,
        expected: usize,
        found: usize,
    },

    #[error("cannot split {0} exemplars per class into equal halves")]
    OddExemplarCount(usize),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("malformed model file: {0}")]
    MalformedModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
