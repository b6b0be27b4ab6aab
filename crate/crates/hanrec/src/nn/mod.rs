//! Trainable-parameter registry, the default 3-layer PReLU MLP, and Adam.

mod adam;
mod mlp;

pub use adam::{AdamHyper, AdamState};
pub use mlp::{Affine, Mlp};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tape::{NodeId, ParamId, Tape};
use crate::tensor::Tensor;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Initialization noise scale for all trainable tensors.
pub const INIT_STD: f64 = 0.1;

/// Initial PReLU slope for hidden layers.
pub const PRELU_INIT: f64 = 0.25;

/// Ordered registry of named parameter tensors. [`ParamId`]s index into it
/// and key the gradient accumulators on the tape.
pub struct ParamSet<S> {
    tensors: Vec<Tensor<S>>,
    names: Vec<String>,
}

impl<S: Scalar> Default for ParamSet<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> ParamSet<S> {
    pub fn new() -> Self {
        ParamSet {
            tensors: Vec::new(),
            names: Vec::new(),
        }
    }

    pub fn register(&mut self, name: impl Into<String>, tensor: Tensor<S>) -> ParamId {
        self.tensors.push(tensor);
        self.names.push(name.into());
        ParamId(self.tensors.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, pid: ParamId) -> &Tensor<S> {
        &self.tensors[pid.0]
    }

    pub fn get_mut(&mut self, pid: ParamId) -> &mut Tensor<S> {
        &mut self.tensors[pid.0]
    }

    pub fn name(&self, pid: ParamId) -> &str {
        &self.names[pid.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor<S>)> {
        self.tensors
            .iter()
            .enumerate()
            .map(|(i, t)| (ParamId(i), self.names[i].as_str(), t))
    }

    /// Put the parameter's current value on the tape as a gradient-tracked leaf.
    pub fn bind(&self, tape: &mut Tape<S>, pid: ParamId) -> NodeId {
        tape.param_leaf(pid, self.tensors[pid.0].clone())
    }

    pub fn ensure_finite(&self) -> Result<()> {
        for (pid, name, t) in self.iter() {
            if !t.all_finite() {
                let _ = pid;
                return Err(Error::NonFinite(format!("parameter {}", name)));
            }
        }
        Ok(())
    }
}

/// Gaussian(0, std) tensor, sampled in f64 so f32 and f64 models start from
/// the same stream.
pub fn gaussian<S: Scalar>(rng: &mut impl Rng, shape: Vec<usize>, std: f64) -> Tensor<S> {
    let normal = Normal::new(0.0, std).expect("std > 0");
    let numel: usize = shape.iter().product();
    let data = (0..numel)
        .map(|_| S::from_f64_val(normal.sample(rng)))
        .collect();
    Tensor::new(shape, data).expect("shape/data consistent")
}
