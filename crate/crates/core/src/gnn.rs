//! Graph encoders over [`CharGraph`]s.
//!
//! One propagation round sends `W_t h_u + b_t` along every edge `u → v`
//! of type `t` and sums what arrives at each target. Gated encoders feed
//! that sum into a GRU or LSTM cell whose weights are shared by every
//! round; the convolutional encoder instead stacks one mean-normalized
//! layer per round. Messages only follow stored edge directions, so
//! backward flow comes from the explicit `Reverse` edges. After `iter`
//! rounds a node has only seen nodes within `iter` hops.
//!
//! The output model maps each node state through `tanh(W_o h + b_o)`.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::error::{ModelError, TensorError};
use crate::params::ParamStore;
use crate::tensor::Tensor;
use crate::text2graph::{CharGraph, EdgeType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncoderKind {
    #[serde(rename = "GGNN_GRU")]
    GgnnGru,
    #[serde(rename = "GGNN_LSTM")]
    GgnnLstm,
    #[serde(rename = "GCN")]
    Gcn,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 3] = [EncoderKind::GgnnGru, EncoderKind::GgnnLstm, EncoderKind::Gcn];

    pub fn name(self) -> &'static str {
        match self {
            EncoderKind::GgnnGru => "GGNN_GRU",
            EncoderKind::GgnnLstm => "GGNN_LSTM",
            EncoderKind::Gcn => "GCN",
        }
    }

    pub fn is_gated(self) -> bool {
        self != EncoderKind::Gcn
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EncoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_uppercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| format!("unknown encoder kind {s:?} (expected GGNN_GRU, GGNN_LSTM or GCN)"))
    }
}

const GRU_GATES: [&str; 3] = ["z", "r", "h"];
const LSTM_GATES: [&str; 4] = ["i", "f", "o", "g"];

/// Shape description of one graph encoder; its weights live in a
/// [`ParamStore`] under `prefix`.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphEncoder {
    pub prefix: String,
    pub kind: EncoderKind,
    pub vocab_size: usize,
    /// Node state width.
    pub dim: usize,
    pub out_dim: usize,
    /// Propagation rounds; also the number of stacked GCN layers.
    pub iter: usize,
}

/// Per-node LSTM memory carried between propagation rounds.
pub type CellState = Option<Var>;

impl GraphEncoder {
    pub fn new(prefix: &str, kind: EncoderKind, vocab_size: usize, dim: usize, out_dim: usize, iter: usize) -> Self {
        Self {
            prefix: prefix.to_string(),
            kind,
            vocab_size,
            dim,
            out_dim,
            iter,
        }
    }

    fn name(&self, suffix: &str) -> String {
        format!("{}.{suffix}", self.prefix)
    }

    fn p(&self, tape: &mut Tape, store: &ParamStore, suffix: &str) -> Result<Var, TensorError> {
        tape.param(store, &self.name(suffix))
    }

    /// Registers every weight of this encoder: uniform(±1/√fan_in), zero biases.
    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        let d = self.dim;
        store.init_uniform(&self.name("embed"), &[self.vocab_size, d], rng);
        match self.kind {
            EncoderKind::GgnnGru | EncoderKind::GgnnLstm => {
                for t in EdgeType::ALL {
                    store.init_uniform(&self.name(&format!("msg.{}.w", t.lowercase())), &[d, d], rng);
                    store.init_zeros(&self.name(&format!("msg.{}.b", t.lowercase())), &[d]);
                }
                let (cell, gates): (&str, &[&str]) = if self.kind == EncoderKind::GgnnGru {
                    ("gru", &GRU_GATES)
                } else {
                    ("lstm", &LSTM_GATES)
                };
                for g in gates {
                    store.init_uniform(&self.name(&format!("{cell}.w_{g}")), &[d, d], rng);
                    store.init_uniform(&self.name(&format!("{cell}.u_{g}")), &[d, d], rng);
                    store.init_zeros(&self.name(&format!("{cell}.b_{g}")), &[d]);
                }
            }
            EncoderKind::Gcn => {
                for l in 0..self.iter {
                    store.init_uniform(&self.name(&format!("gcn.{l}.w_self")), &[d, d], rng);
                    for t in EdgeType::ALL {
                        store.init_uniform(&self.name(&format!("gcn.{l}.w_{}", t.lowercase())), &[d, d], rng);
                    }
                    store.init_zeros(&self.name(&format!("gcn.{l}.b")), &[d]);
                }
            }
        }
        store.init_uniform(&self.name("out.w"), &[self.out_dim, d], rng);
        store.init_zeros(&self.name("out.b"), &[self.out_dim]);
    }

    /// Row `v` is the embedding of node `v`'s symbol.
    pub fn embed_nodes(&self, tape: &mut Tape, store: &ParamStore, graph: &CharGraph) -> Result<Var, ModelError> {
        let ids = graph.symbol_ids();
        if let Some(&id) = ids.iter().find(|&&id| id >= self.vocab_size) {
            return Err(ModelError::IndexOutOfVocabulary {
                id,
                vocab: self.vocab_size,
            });
        }
        let table = self.p(tape, store, "embed")?;
        Ok(tape.gather_rows(table, &ids)?)
    }

    /// Sum over incoming edges `u → v` of `W_t h_u + b_t`; rows without
    /// incoming edges are zero.
    pub fn aggregate_messages(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        states: Var,
        graph: &CharGraph,
    ) -> Result<Var, TensorError> {
        let n = graph.num_nodes();
        self.check_states(tape, states, n)?;
        let mut total: Option<Var> = None;
        for t in EdgeType::ALL {
            let pairs = graph.edges.pairs(t);
            if pairs.is_empty() {
                continue;
            }
            let w = self.p(tape, store, &format!("msg.{}.w", t.lowercase()))?;
            let b = self.p(tape, store, &format!("msg.{}.b", t.lowercase()))?;
            let msg = tape.linear(states, w, Some(b))?;
            let agg = tape.index_add(msg, &pairs, n)?;
            total = Some(match total {
                Some(acc) => tape.add(acc, agg)?,
                None => agg,
            });
        }
        Ok(match total {
            Some(v) => v,
            None => tape.constant(Tensor::zeros(&[n, self.dim])),
        })
    }

    fn check_states(&self, tape: &Tape, states: Var, n: usize) -> Result<(), TensorError> {
        let s = tape.value(states);
        if s.shape() != [n, self.dim] {
            return Err(TensorError::ShapeMismatch {
                op: "graph states",
                left: s.shape().to_vec(),
                right: vec![n, self.dim],
            });
        }
        Ok(())
    }

    fn gate(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        cell: &str,
        g: &str,
        input: Var,
        hidden: Var,
    ) -> Result<Var, TensorError> {
        let w = self.p(tape, store, &format!("{cell}.w_{g}"))?;
        let u = self.p(tape, store, &format!("{cell}.u_{g}"))?;
        let b = self.p(tape, store, &format!("{cell}.b_{g}"))?;
        let wa = tape.linear(input, w, Some(b))?;
        let uh = tape.linear(hidden, u, None)?;
        tape.add(wa, uh)
    }

    /// One gated update of every node from its aggregated messages.
    /// Returns the new states and, for the LSTM cell, the new memory.
    pub fn ggnn_step(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        states: Var,
        messages: Var,
        cell: CellState,
    ) -> Result<(Var, CellState), TensorError> {
        let (hs, ms) = (tape.value(states).shape(), tape.value(messages).shape());
        if hs != ms {
            return Err(TensorError::ShapeMismatch {
                op: "ggnn_step",
                left: hs.to_vec(),
                right: ms.to_vec(),
            });
        }
        match self.kind {
            EncoderKind::GgnnGru => {
                let z = self.gate(tape, store, "gru", "z", messages, states)?;
                let z = tape.sigmoid(z);
                let r = self.gate(tape, store, "gru", "r", messages, states)?;
                let r = tape.sigmoid(r);
                let rh = tape.mul(r, states)?;
                let cand = self.gate(tape, store, "gru", "h", messages, rh)?;
                let cand = tape.tanh(cand);
                // h' = (1 - z) h + z ĥ = h + z (ĥ - h)
                let delta = tape.sub(cand, states)?;
                let step = tape.mul(z, delta)?;
                Ok((tape.add(states, step)?, None))
            }
            EncoderKind::GgnnLstm => {
                let n = tape.value(states).rows();
                let c = match cell {
                    Some(c) => c,
                    None => tape.constant(Tensor::zeros(&[n, self.dim])),
                };
                let i = self.gate(tape, store, "lstm", "i", messages, states)?;
                let i = tape.sigmoid(i);
                let f = self.gate(tape, store, "lstm", "f", messages, states)?;
                let f = tape.sigmoid(f);
                let o = self.gate(tape, store, "lstm", "o", messages, states)?;
                let o = tape.sigmoid(o);
                let g = self.gate(tape, store, "lstm", "g", messages, states)?;
                let g = tape.tanh(g);
                let fc = tape.mul(f, c)?;
                let ig = tape.mul(i, g)?;
                let c_new = tape.add(fc, ig)?;
                let tc = tape.tanh(c_new);
                Ok((tape.mul(o, tc)?, Some(c_new)))
            }
            EncoderKind::Gcn => Err(TensorError::ShapeMismatch {
                op: "ggnn_step on a GCN encoder",
                left: hs.to_vec(),
                right: vec![],
            }),
        }
    }

    /// `relu(W_self h_v + (1/max(1, indeg v)) Σ W_t h_u + b)` for layer `layer`.
    pub fn gcn_layer(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        states: Var,
        graph: &CharGraph,
        layer: usize,
    ) -> Result<Var, TensorError> {
        let n = graph.num_nodes();
        self.check_states(tape, states, n)?;
        let w_self = self.p(tape, store, &format!("gcn.{layer}.w_self"))?;
        let b = self.p(tape, store, &format!("gcn.{layer}.b"))?;
        let mut pre = tape.linear(states, w_self, Some(b))?;

        let mut indeg = vec![0usize; n];
        for e in graph.edges.rows() {
            indeg[e.target] += 1;
        }
        let mut sum: Option<Var> = None;
        for t in EdgeType::ALL {
            let pairs = graph.edges.pairs(t);
            if pairs.is_empty() {
                continue;
            }
            let w = self.p(tape, store, &format!("gcn.{layer}.w_{}", t.lowercase()))?;
            let msg = tape.linear(states, w, None)?;
            let agg = tape.index_add(msg, &pairs, n)?;
            sum = Some(match sum {
                Some(acc) => tape.add(acc, agg)?,
                None => agg,
            });
        }
        if let Some(sum) = sum {
            let mut norm = Tensor::zeros(&[n, self.dim]);
            for (v, &k) in indeg.iter().enumerate() {
                let s = 1.0 / k.max(1) as f64;
                for j in 0..self.dim {
                    norm.set(v, j, s);
                }
            }
            let mean = tape.mul_const(sum, norm)?;
            pre = tape.add(pre, mean)?;
        }
        Ok(tape.relu(pre))
    }

    /// Applies `iter` rounds of message passing and update. Zero rounds
    /// return `initial` untouched.
    pub fn propagate(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        graph: &CharGraph,
        initial: Var,
        iter: usize,
    ) -> Result<Var, TensorError> {
        let mut h = initial;
        let mut cell = None;
        for round in 0..iter {
            h = match self.kind {
                EncoderKind::Gcn => self.gcn_layer(tape, store, h, graph, round)?,
                _ => {
                    let m = self.aggregate_messages(tape, store, h, graph)?;
                    let (h2, c2) = self.ggnn_step(tape, store, h, m, cell)?;
                    cell = c2;
                    h2
                }
            };
        }
        Ok(h)
    }

    /// Row-wise `tanh(W_o h_v + b_o)`.
    pub fn output_model(&self, tape: &mut Tape, store: &ParamStore, states: Var) -> Result<Var, TensorError> {
        let w = self.p(tape, store, "out.w")?;
        let b = self.p(tape, store, "out.b")?;
        let y = tape.linear(states, w, Some(b))?;
        Ok(tape.tanh(y))
    }

    /// Embedding, `self.iter` propagation rounds, output model.
    pub fn encode(&self, tape: &mut Tape, store: &ParamStore, graph: &CharGraph) -> Result<Var, ModelError> {
        let h0 = self.embed_nodes(tape, store, graph)?;
        let h = self.propagate(tape, store, graph, h0, self.iter)?;
        Ok(self.output_model(tape, store, h)?)
    }
}
