//! End-to-end text-to-spectrogram models.
//!
//! In `GraphTts` mode the graph encoder output is the attention memory.
//! In `Gae` mode a sequence encoder produces `d_model` columns per
//! character and a narrower graph encoder adds `d_gae` more; the two are
//! concatenated per character position and the decoder attends over the
//! result. Both modes share the same decoder.

mod config;
mod decoder;
mod mel;
mod rnn;
mod seq_encoder;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use config::{Mode, ModelConfig};
pub use decoder::{DecodeMode, DecodeOutput, Decoder};
pub use mel::MelSpectrogram;
pub use rnn::GruCell;
pub use seq_encoder::SeqEncoder;

use crate::autodiff::{Tape, Var};
use crate::error::{ModelError, TensorError};
use crate::gnn::GraphEncoder;
use crate::params::ParamStore;
use crate::tensor::Tensor;
use crate::text2graph::CharGraph;

/// Decoder alignment, one row per decoder step.
#[derive(Clone, Debug, PartialEq)]
pub struct AttentionState {
    pub weights: Tensor,
}

impl AttentionState {
    /// Largest deviation of any row sum from one.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.weights.rows())
            .map(|i| (self.weights.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Loss terms of one teacher-forced pass, all scalars on the tape.
#[derive(Clone, Copy, Debug)]
pub struct LossParts {
    pub total: Var,
    pub mel_l1: Var,
    pub stop_bce: Var,
}

#[derive(Clone, Debug)]
pub struct ForwardOutput {
    pub memory: Var,
    pub decoded: DecodeOutput,
    pub loss: LossParts,
}

#[derive(Clone, Debug)]
pub struct Synthesis {
    pub mel: MelSpectrogram,
    pub attention: AttentionState,
    /// Decoder step at which the stop flag fired.
    pub stop_step: Option<usize>,
    pub max_steps_reached: bool,
}

/// Attention memory for `mode`. `GraphTts` passes the graph states
/// through; `Gae` concatenates `[seq | graph]` per position.
pub fn build_memory(
    tape: &mut Tape,
    mode: Mode,
    seq_states: Option<Var>,
    graph_states: Var,
) -> Result<Var, ModelError> {
    match (mode, seq_states) {
        (Mode::GraphTts, _) => Ok(graph_states),
        (Mode::Gae, Some(seq)) => {
            let (n_seq, n_graph) = (tape.value(seq).rows(), tape.value(graph_states).rows());
            if n_seq != n_graph {
                return Err(ModelError::LengthMismatch {
                    graph: n_graph,
                    sequence: n_seq,
                });
            }
            Ok(tape.concat(&[seq, graph_states], 1)?)
        }
        (Mode::Gae, None) => Err(ModelError::InvalidConfig(
            "GAE mode needs sequence encoder states".into(),
        )),
    }
}

/// Mean L1 over mel entries plus mean BCE over per-frame stop logits,
/// against `target` zero-padded to a multiple of `r` frames.
pub fn spectrogram_loss(
    tape: &mut Tape,
    mel: Var,
    stop_logits: Var,
    target: &MelSpectrogram,
    r: usize,
) -> Result<LossParts, TensorError> {
    let (frames, stops) = target.padded(r);
    let steps = frames.rows() / r;
    let frames = frames.reshape(vec![steps, r * target.n_mels()])?;
    let stops = stops.reshape(vec![steps, r])?;
    let mel_l1 = tape.l1_loss(mel, frames)?;
    let stop_bce = tape.bce_loss(stop_logits, stops)?;
    let total = tape.add(mel_l1, stop_bce)?;
    Ok(LossParts {
        total,
        mel_l1,
        stop_bce,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TtsModel {
    pub config: ModelConfig,
    pub vocab_size: usize,
    pub graph_encoder: GraphEncoder,
    pub seq_encoder: Option<SeqEncoder>,
    pub decoder: Decoder,
}

impl TtsModel {
    pub fn new(config: &ModelConfig, vocab_size: usize) -> Result<Self, ModelError> {
        config.validate()?;
        if vocab_size == 0 {
            return Err(ModelError::InvalidConfig("empty vocabulary".into()));
        }
        let c = config;
        let (graph_encoder, seq_encoder) = match c.mode {
            Mode::GraphTts => (
                GraphEncoder::new("enc", c.encoder_kind, vocab_size, c.d_model, c.d_model, c.iter),
                None,
            ),
            Mode::Gae => (
                GraphEncoder::new("gae", c.encoder_kind, vocab_size, c.d_gae, c.d_gae, c.iter),
                Some(SeqEncoder::new(vocab_size, c.d_model, c.prenet_dim)),
            ),
        };
        let decoder = Decoder::new(
            c.n_mels,
            c.reduction,
            c.prenet_dim,
            c.decoder_dim,
            c.memory_dim(),
            c.attention_dim,
        );
        Ok(Self {
            config: c.clone(),
            vocab_size,
            graph_encoder,
            seq_encoder,
            decoder,
        })
    }

    /// Fresh parameters drawn from `config.seed`.
    pub fn init_params(&self) -> ParamStore {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut store = ParamStore::new();
        self.graph_encoder.init(&mut store, &mut rng);
        if let Some(seq) = &self.seq_encoder {
            seq.init(&mut store, &mut rng);
        }
        self.decoder.init(&mut store, &mut rng);
        store
    }

    /// Attention memory `[N × memory_dim]` for one utterance graph.
    pub fn memory(&self, tape: &mut Tape, store: &ParamStore, graph: &CharGraph) -> Result<Var, ModelError> {
        let graph_states = self.graph_encoder.encode(tape, store, graph)?;
        let seq_states = match &self.seq_encoder {
            Some(seq) => Some(seq.encode(tape, store, &graph.symbol_ids())?),
            None => None,
        };
        let memory = build_memory(tape, self.config.mode, seq_states, graph_states)?;
        debug_assert_eq!(tape.value(memory).cols(), self.config.memory_dim());
        Ok(memory)
    }

    /// Teacher-forced pass and loss against `target`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        graph: &CharGraph,
        target: &MelSpectrogram,
    ) -> Result<ForwardOutput, ModelError> {
        let memory = self.memory(tape, store, graph)?;
        let decoded = self
            .decoder
            .decode(tape, store, memory, DecodeMode::TeacherForcing(target))?;
        let loss = spectrogram_loss(tape, decoded.mel, decoded.stop_logits, target, self.config.reduction)?;
        Ok(ForwardOutput { memory, decoded, loss })
    }

    pub fn max_steps(&self, graph: &CharGraph) -> usize {
        self.config.max_steps_factor * graph.num_nodes()
    }

    /// Free-running synthesis. Frames after the first stop frame are
    /// dropped and values are clamped to `[0, 1]`.
    pub fn synthesize(&self, store: &ParamStore, graph: &CharGraph) -> Result<Synthesis, ModelError> {
        let mut tape = Tape::new();
        let memory = self.memory(&mut tape, store, graph)?;
        let out = self.decoder.decode(
            &mut tape,
            store,
            memory,
            DecodeMode::Free {
                max_steps: self.max_steps(graph),
            },
        )?;
        let n = self.config.n_mels;
        let raw = tape.value(out.mel).data();
        let frames = out.stop_frame.map_or(out.steps * self.config.reduction, |f| f + 1);
        let data = raw[..frames * n].iter().map(|x| x.clamp(0.0, 1.0)).collect();
        let mut stop = vec![false; frames];
        if out.stop_frame.is_some() {
            stop[frames - 1] = true;
        }
        let mel = MelSpectrogram {
            frames: Tensor::matrix(frames, n, data)?,
            stop,
        };
        Ok(Synthesis {
            mel,
            attention: attention_state(&tape, &out.attention)?,
            stop_step: out.stop_frame.map(|f| f / self.config.reduction),
            max_steps_reached: out.max_steps_reached,
        })
    }
}

/// Stacks per-step weight rows into `[T_dec × N]`.
pub fn attention_state(tape: &Tape, rows: &[Var]) -> Result<AttentionState, TensorError> {
    let rows: Vec<Vec<f64>> = rows.iter().map(|&v| tape.value(v).data().to_vec()).collect();
    Ok(AttentionState {
        weights: Tensor::from_rows(&rows)?,
    })
}
