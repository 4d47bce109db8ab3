use std::io;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },
    #[error("invalid shape {shape:?}: every dim must be >= 1")]
    InvalidShape { shape: Vec<usize> },
    #[error("data length {len} does not fill shape {shape:?}")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("loss must be a scalar, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("index {index} out of range for {len} rows in {op}")]
    IndexOutOfRange { op: &'static str, index: usize, len: usize },
    #[error("invalid axis {axis} for {op}")]
    InvalidAxis { op: &'static str, axis: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("character {0:?} is not in the vocabulary and UNK mapping is disabled")]
    UnknownSymbol(char),
    #[error("text contains no non-whitespace character")]
    EmptyGraph,
    #[error("malformed graph document at line {line}, field `{field}`: {message}")]
    MalformedDocument {
        line: usize,
        field: String,
        message: String,
    },
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("symbol id {id} out of vocabulary of size {vocab}")]
    IndexOutOfVocabulary { id: usize, vocab: usize },
    #[error("empty input sequence")]
    EmptyInput,
    #[error("graph has {graph} nodes but the sequence has {sequence} characters")]
    LengthMismatch { graph: usize, sequence: usize },
    #[error("teacher forcing requires target frames")]
    MissingTargets,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("bad magic bytes, not a tensor container")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt container: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("manifest: {0}")]
    Manifest(#[from] serde_json::Error),
    #[error("checkpoint config does not match runtime config: {0}")]
    ConfigMismatch(String),
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("loss became non-finite at step {step}")]
    DivergenceDetected { step: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] io::Error),
}
