//! Character sequence encoder: embedding, two-layer ReLU prenet, one
//! bidirectional GRU whose halves are concatenated to `d_model` columns.

use rand_chacha::ChaCha8Rng;

use super::rnn::GruCell;
use crate::autodiff::{Tape, Var};
use crate::error::ModelError;
use crate::params::ParamStore;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
pub struct SeqEncoder {
    pub vocab_size: usize,
    pub d_model: usize,
    pub prenet_dim: usize,
    forward: GruCell,
    backward: GruCell,
}

impl SeqEncoder {
    pub fn new(vocab_size: usize, d_model: usize, prenet_dim: usize) -> Self {
        let half = d_model / 2;
        Self {
            vocab_size,
            d_model,
            prenet_dim,
            forward: GruCell::new("seq.fwd", prenet_dim, half),
            backward: GruCell::new("seq.bwd", prenet_dim, d_model - half),
        }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        store.init_uniform("seq.embed", &[self.vocab_size, self.d_model], rng);
        store.init_uniform("seq.prenet.0.w", &[self.prenet_dim, self.d_model], rng);
        store.init_bias("seq.prenet.0.b", self.prenet_dim, self.d_model, rng);
        store.init_uniform("seq.prenet.1.w", &[self.prenet_dim, self.prenet_dim], rng);
        store.init_bias("seq.prenet.1.b", self.prenet_dim, self.prenet_dim, rng);
        self.forward.init(store, rng);
        self.backward.init(store, rng);
    }

    fn run(
        &self,
        cell: &GruCell,
        tape: &mut Tape,
        store: &ParamStore,
        x: Var,
        order: impl Iterator<Item = usize>,
    ) -> Result<Vec<(usize, Var)>, ModelError> {
        let proj = cell.project_inputs(tape, store, x)?;
        let mut h = tape.constant(Tensor::zeros(&[1, cell.hidden]));
        let mut out = Vec::new();
        for t in order {
            let xp = [
                tape.slice_rows(proj[0], t, 1)?,
                tape.slice_rows(proj[1], t, 1)?,
                tape.slice_rows(proj[2], t, 1)?,
            ];
            h = cell.step(tape, store, xp, h)?;
            out.push((t, h));
        }
        Ok(out)
    }

    /// `[N × d_model]` hidden states for symbol ids `symbols`.
    pub fn encode(&self, tape: &mut Tape, store: &ParamStore, symbols: &[usize]) -> Result<Var, ModelError> {
        if symbols.is_empty() {
            return Err(ModelError::EmptyInput);
        }
        if let Some(&id) = symbols.iter().find(|&&id| id >= self.vocab_size) {
            return Err(ModelError::IndexOutOfVocabulary {
                id,
                vocab: self.vocab_size,
            });
        }
        let n = symbols.len();
        let table = tape.param(store, "seq.embed")?;
        let mut x = tape.gather_rows(table, symbols)?;
        for layer in 0..2 {
            let w = tape.param(store, &format!("seq.prenet.{layer}.w"))?;
            let b = tape.param(store, &format!("seq.prenet.{layer}.b"))?;
            let y = tape.linear(x, w, Some(b))?;
            x = tape.relu(y);
        }
        let fwd = self.run(&self.forward, tape, store, x, 0..n)?;
        let mut bwd = self.run(&self.backward, tape, store, x, (0..n).rev())?;
        bwd.reverse();
        let mut rows = Vec::with_capacity(n);
        for ((_, f), (_, b)) in fwd.into_iter().zip(bwd) {
            rows.push(tape.concat(&[f, b], 1)?);
        }
        Ok(tape.concat(&rows, 0)?)
    }
}
