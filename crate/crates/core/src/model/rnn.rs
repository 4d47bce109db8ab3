//! Row-wise GRU cell shared by the sequence encoder and the decoder.

use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Tape, Var};
use crate::error::TensorError;
use crate::params::ParamStore;

const GATES: [&str; 3] = ["z", "r", "h"];

#[derive(Clone, Debug, PartialEq)]
pub struct GruCell {
    pub prefix: String,
    pub input: usize,
    pub hidden: usize,
}

impl GruCell {
    pub fn new(prefix: &str, input: usize, hidden: usize) -> Self {
        Self {
            prefix: prefix.to_string(),
            input,
            hidden,
        }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut ChaCha8Rng) {
        for g in GATES {
            store.init_uniform(&format!("{}.w_{g}", self.prefix), &[self.hidden, self.input], rng);
            store.init_uniform(&format!("{}.u_{g}", self.prefix), &[self.hidden, self.hidden], rng);
            store.init_zeros(&format!("{}.b_{g}", self.prefix), &[self.hidden]);
        }
    }

    /// `x W_gᵀ + b_g` for every gate and every row of `x`.
    pub fn project_inputs(&self, tape: &mut Tape, store: &ParamStore, x: Var) -> Result<[Var; 3], TensorError> {
        let mut out = [x; 3];
        for (slot, g) in out.iter_mut().zip(GATES) {
            let w = tape.param(store, &format!("{}.w_{g}", self.prefix))?;
            let b = tape.param(store, &format!("{}.b_{g}", self.prefix))?;
            *slot = tape.linear(x, w, Some(b))?;
        }
        Ok(out)
    }

    /// One step from already projected inputs `[z, r, h]`.
    pub fn step(&self, tape: &mut Tape, store: &ParamStore, xp: [Var; 3], h: Var) -> Result<Var, TensorError> {
        let u = |tape: &mut Tape, g: &str| tape.param(store, &format!("{}.u_{g}", self.prefix));
        let uz = u(tape, "z")?;
        let ur = u(tape, "r")?;
        let uh = u(tape, "h")?;
        let hz = tape.linear(h, uz, None)?;
        let z = tape.add(xp[0], hz)?;
        let z = tape.sigmoid(z);
        let hr = tape.linear(h, ur, None)?;
        let r = tape.add(xp[1], hr)?;
        let r = tape.sigmoid(r);
        let rh = tape.mul(r, h)?;
        let hh = tape.linear(rh, uh, None)?;
        let cand = tape.add(xp[2], hh)?;
        let cand = tape.tanh(cand);
        let delta = tape.sub(cand, h)?;
        let step = tape.mul(z, delta)?;
        tape.add(h, step)
    }
}
