//! Graph-to-sequence text-to-speech at desk scale.
//!
//! Text is turned into a character graph ([`text2graph`]), encoded by a
//! gated or convolutional graph network ([`gnn`]) and decoded into mel
//! frames by an additive-attention decoder ([`model`]). Everything is
//! differentiated by a small reverse-mode tape ([`autodiff`]) whose
//! gradients are checked against finite differences ([`gradcheck`]).

pub mod autodiff;
pub mod checkpoint;
pub mod error;
pub mod gnn;
pub mod gradcheck;
pub mod harness;
pub mod model;
pub mod parallel;
pub mod params;
pub mod tensor;
pub mod text2graph;

pub use autodiff::{Tape, Var};
pub use error::{CheckpointError, GraphError, ModelError, SynthError, TensorError, TrainError};
pub use params::{Gradients, ParamStore};
pub use tensor::Tensor;
