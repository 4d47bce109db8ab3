//! Additive-attention decoder emitting `r` mel frames per step.
//!
//! Each step runs the previous frame through a two-layer ReLU prenet,
//! attends over the memory with the previous decoder state as query,
//! advances a GRU on `[prenet ; context]` and projects `[state ; context]`
//! to `r` frames plus `r` stop logits.

use rand_chacha::ChaCha8Rng;

use super::mel::MelSpectrogram;
use super::rnn::GruCell;
use crate::autodiff::{Tape, Var};
use crate::error::{ModelError, TensorError};
use crate::params::ParamStore;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct Decoder {
    pub n_mels: usize,
    pub reduction: usize,
    pub prenet_dim: usize,
    pub dim: usize,
    pub memory_dim: usize,
    pub attention_dim: usize,
    gru: GruCell,
}

/// How the decoder picks its previous-frame input and step count.
#[derive(Clone, Copy, Debug)]
pub enum DecodeMode<'a> {
    /// Feed ground-truth frames; run `ceil(T / r)` steps.
    TeacherForcing(&'a MelSpectrogram),
    /// Feed back own predictions; stop on a stop probability above 0.5.
    Free { max_steps: usize },
}

#[derive(Clone, Debug)]
pub struct DecodeOutput {
    /// `[steps × r·n_mels]`; row-major identical to `[steps·r × n_mels]`.
    pub mel: Var,
    /// `[steps × r]`, one logit per frame.
    pub stop_logits: Var,
    /// One `[1 × N]` weight row per step.
    pub attention: Vec<Var>,
    pub steps: usize,
    /// Frame index whose stop probability first exceeded 0.5 (free mode).
    pub stop_frame: Option<usize>,
    pub max_steps_reached: bool,
}

impl Decoder {
    pub fn new(
        n_mels: usize,
        reduction: usize,
        prenet_dim: usize,
        dim: usize,
        memory_dim: usize,
        attention_dim: usize,
    ) -> Self {
        Self {
            n_mels,
            reduction,
            prenet_dim,
            dim,
            memory_dim,
            attention_dim,
            gru: GruCell::new("dec.gru", prenet_dim + memory_dim, dim),
        }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        store.init_uniform("dec.prenet.0.w", &[self.prenet_dim, self.n_mels], rng);
        store.init_bias("dec.prenet.0.b", self.prenet_dim, self.n_mels, rng);
        store.init_uniform("dec.prenet.1.w", &[self.prenet_dim, self.prenet_dim], rng);
        store.init_bias("dec.prenet.1.b", self.prenet_dim, self.prenet_dim, rng);
        store.init_uniform("attn.w_q", &[self.attention_dim, self.dim], rng);
        store.init_uniform("attn.w_m", &[self.attention_dim, self.memory_dim], rng);
        store.init_uniform("attn.v", &[1, self.attention_dim], rng);
        self.gru.init(store, rng);
        let out = self.reduction * (self.n_mels + 1);
        store.init_uniform("dec.proj.w", &[out, self.dim + self.memory_dim], rng);
        store.init_zeros("dec.proj.b", &[out]);
    }

    /// `W_m · memory_j` for every memory row.
    pub fn memory_keys(&self, tape: &mut Tape, store: &ParamStore, memory: Var) -> Result<Var, TensorError> {
        let wm = tape.param(store, "attn.w_m")?;
        tape.linear(memory, wm, None)
    }

    /// `e_j = vᵀ tanh(W_q q + W_m m_j)`, weights `softmax(e)`, context
    /// `Σ_j w_j m_j`. Returns `(context [1 × d_mem], weights [1 × N])`.
    pub fn attend(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        query: Var,
        memory: Var,
        keys: Var,
    ) -> Result<(Var, Var), TensorError> {
        let wq = tape.param(store, "attn.w_q")?;
        let v = tape.param(store, "attn.v")?;
        let q = tape.linear(query, wq, None)?;
        let e = tape.add_row(keys, q)?;
        let e = tape.tanh(e);
        let scores = tape.linear(e, v, None)?;
        let scores = tape.transpose(scores);
        let weights = tape.softmax(scores, 1)?;
        let context = tape.matmul(weights, memory)?;
        Ok((context, weights))
    }

    fn prenet(&self, tape: &mut Tape, store: &ParamStore, frame: Var) -> Result<Var, TensorError> {
        let mut x = frame;
        for layer in 0..2 {
            let w = tape.param(store, &format!("dec.prenet.{layer}.w"))?;
            let b = tape.param(store, &format!("dec.prenet.{layer}.b"))?;
            let y = tape.linear(x, w, Some(b))?;
            x = tape.relu(y);
        }
        Ok(x)
    }

    pub fn decode(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        memory: Var,
        mode: DecodeMode<'_>,
    ) -> Result<DecodeOutput, ModelError> {
        let mem = tape.value(memory);
        if mem.cols() != self.memory_dim || mem.shape().len() != 2 {
            return Err(TensorError::ShapeMismatch {
                op: "decode memory",
                left: mem.shape().to_vec(),
                right: vec![mem.rows(), self.memory_dim],
            }
            .into());
        }
        let r = self.reduction;
        let n = self.n_mels;
        let (teacher, max_steps) = match mode {
            DecodeMode::TeacherForcing(target) => {
                if target.n_mels() != n {
                    return Err(TensorError::ShapeMismatch {
                        op: "decode targets",
                        left: target.frames.shape().to_vec(),
                        right: vec![target.num_frames(), n],
                    }
                    .into());
                }
                let (frames, _) = target.padded(r);
                let steps = frames.rows() / r;
                (Some(frames), steps)
            }
            DecodeMode::Free { max_steps } => (None, max_steps),
        };

        let keys = self.memory_keys(tape, store, memory)?;
        let proj_w = tape.param(store, "dec.proj.w")?;
        let proj_b = tape.param(store, "dec.proj.b")?;
        let mut state = tape.constant(Tensor::zeros(&[1, self.dim]));
        let mut prev = vec![0.0; n];
        let mut outputs = Vec::new();
        let mut attention = Vec::new();
        let mut stop_frame = None;

        for step in 0..max_steps {
            let frame = tape.constant(Tensor::matrix(1, n, prev.clone())?);
            let pre = self.prenet(tape, store, frame)?;
            let (context, weights) = self.attend(tape, store, state, memory, keys)?;
            let x = tape.concat(&[pre, context], 1)?;
            let xp = self.gru.project_inputs(tape, store, x)?;
            state = self.gru.step(tape, store, xp, state)?;
            let hc = tape.concat(&[state, context], 1)?;
            let out = tape.linear(hc, proj_w, Some(proj_b))?;
            outputs.push(out);
            attention.push(weights);

            let values = tape.value(out).data();
            match &teacher {
                Some(frames) => {
                    let last = (step + 1) * r - 1;
                    prev.copy_from_slice(frames.row(last));
                }
                None => {
                    prev.copy_from_slice(&values[(r - 1) * n..r * n]);
                    let stops = &values[r * n..];
                    if let Some(k) = stops.iter().position(|&x| x > 0.0) {
                        stop_frame = Some(step * r + k);
                        break;
                    }
                }
            }
        }
        if outputs.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        let steps = outputs.len();
        let all = tape.concat(&outputs, 0)?;
        let mel = tape.slice_cols(all, 0, r * n)?;
        let stop_logits = tape.slice_cols(all, r * n, r)?;
        Ok(DecodeOutput {
            mel,
            stop_logits,
            attention,
            steps,
            stop_frame,
            max_steps_reached: teacher.is_none() && stop_frame.is_none(),
        })
    }
}
