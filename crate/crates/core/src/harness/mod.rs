//! Corpus generation, training, checkpoints and the experiment drivers
//! behind the command-line tool.

pub mod bench;
pub mod checkpoint;
pub mod corpus;
pub mod gradcheck;
pub mod synth;
pub mod train;
