//! Named learnable parameters and their gradients.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::TensorError;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq)]
struct Entry {
    value: Tensor,
    grad: Tensor,
}

/// Parameter table keyed by name. Iteration is in name order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    entries: BTreeMap<String, Entry>,
}

/// Gradients of one backward pass, keyed by parameter name.
pub type Gradients = BTreeMap<String, Tensor>;

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a parameter; its gradient is reset to zero.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) {
        let grad = Tensor::zeros(value.shape());
        self.entries.insert(name.into(), Entry { value, grad });
    }

    /// Uniform(-s, s) weight with s = 1/sqrt(fan_in), the last dim of `shape`.
    pub fn init_uniform(&mut self, name: &str, shape: &[usize], rng: &mut ChaCha8Rng) {
        let fan_in = *shape.last().unwrap() as f64;
        let s = 1.0 / fan_in.sqrt();
        let mut t = Tensor::zeros(shape);
        for x in t.data_mut() {
            *x = rng.gen_range(-s..s);
        }
        self.insert(name, t);
    }

    /// Uniform(-s, s) bias of length `len` with s = 1/sqrt(fan_in).
    pub fn init_bias(&mut self, name: &str, len: usize, fan_in: usize, rng: &mut ChaCha8Rng) {
        let s = 1.0 / (fan_in as f64).sqrt();
        let data = (0..len).map(|_| rng.gen_range(-s..s)).collect();
        self.insert(name, Tensor::vector(data));
    }

    pub fn init_zeros(&mut self, name: &str, shape: &[usize]) {
        self.insert(name, Tensor::zeros(shape));
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, TensorError> {
        self.entries
            .get(name)
            .map(|e| &e.value)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor, TensorError> {
        self.entries
            .get_mut(name)
            .map(|e| &mut e.value)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn grad(&self, name: &str) -> Result<&Tensor, TensorError> {
        self.entries
            .get(name)
            .map(|e| &e.grad)
            .ok_or_else(|| TensorError::UnknownParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(k, e)| (k.as_str(), &e.value))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar entries across all parameters.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|e| e.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for e in self.entries.values_mut() {
            e.grad.data_mut().fill(0.0);
        }
    }

    /// Adds `scale · g` into the stored gradients.
    pub fn accumulate(&mut self, grads: &Gradients, scale: f64) -> Result<(), TensorError> {
        for (name, g) in grads {
            let e = self
                .entries
                .get_mut(name)
                .ok_or_else(|| TensorError::UnknownParam(name.clone()))?;
            if e.grad.shape() != g.shape() {
                return Err(TensorError::ShapeMismatch {
                    op: "accumulate",
                    left: e.grad.shape().to_vec(),
                    right: g.shape().to_vec(),
                });
            }
            for (a, b) in e.grad.data_mut().iter_mut().zip(g.data()) {
                *a += scale * b;
            }
        }
        Ok(())
    }

    /// Snapshot of all gradients.
    pub fn gradients(&self) -> Gradients {
        self.entries.iter().map(|(k, e)| (k.clone(), e.grad.clone())).collect()
    }

    /// Mutable access to value and gradient together, for optimizers.
    pub fn for_each_mut(&mut self, mut f: impl FnMut(&str, &mut Tensor, &Tensor)) {
        for (k, e) in self.entries.iter_mut() {
            f(k, &mut e.value, &e.grad);
        }
    }
}
