//! Affine layers and the default three-layer PReLU perceptron.

use super::{gaussian, ParamSet, INIT_STD, PRELU_INIT};
use crate::error::Result;
use crate::scalar::Scalar;
use crate::tape::{NodeId, ParamId, Tape};
use crate::tensor::Tensor;
use rand::Rng;

/// One affine layer: `x · W + b` with `W: (in × out)`, `b: (out)`.
#[derive(Debug, Clone, Copy)]
pub struct Affine {
    pub w: ParamId,
    pub b: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Affine {
    pub fn new<S: Scalar>(
        ps: &mut ParamSet<S>,
        rng: &mut impl Rng,
        in_dim: usize,
        out_dim: usize,
        name: &str,
    ) -> Affine {
        let w = ps.register(format!("{name}.w"), gaussian(rng, vec![in_dim, out_dim], INIT_STD));
        let b = ps.register(format!("{name}.b"), gaussian(rng, vec![out_dim], INIT_STD));
        Affine {
            w,
            b,
            in_dim,
            out_dim,
        }
    }

    /// Apply to a rank-2 batch of rows.
    pub fn apply<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        ps: &ParamSet<S>,
        x: NodeId,
    ) -> Result<NodeId> {
        let w = ps.bind(tape, self.w);
        let b = ps.bind(tape, self.b);
        let xw = tape.matmul(x, w)?;
        tape.add_row(xw, b)
    }
}

/// Three affine layers with learnable PReLU slopes after the first two.
#[derive(Debug, Clone, Copy)]
pub struct Mlp {
    pub layers: [Affine; 3],
    pub slopes: [ParamId; 2],
}

impl Mlp {
    /// Hidden extents both equal `hidden`; slopes start at 0.25.
    pub fn new<S: Scalar>(
        ps: &mut ParamSet<S>,
        rng: &mut impl Rng,
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        name: &str,
    ) -> Mlp {
        let l0 = Affine::new(ps, rng, in_dim, hidden, &format!("{name}.l0"));
        let l1 = Affine::new(ps, rng, hidden, hidden, &format!("{name}.l1"));
        let l2 = Affine::new(ps, rng, hidden, out_dim, &format!("{name}.l2"));
        let s0 = ps.register(
            format!("{name}.slope0"),
            Tensor::scalar(S::from_f64_val(PRELU_INIT)),
        );
        let s1 = ps.register(
            format!("{name}.slope1"),
            Tensor::scalar(S::from_f64_val(PRELU_INIT)),
        );
        Mlp {
            layers: [l0, l1, l2],
            slopes: [s0, s1],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.layers[2].out_dim
    }

    /// affine -> PReLU -> affine -> PReLU -> affine. Accepts a rank-1 vector
    /// (returned as rank-1) or a rank-2 batch of rows.
    pub fn forward<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        ps: &ParamSet<S>,
        x: NodeId,
    ) -> Result<NodeId> {
        let rank1 = tape.value(x).rank() == 1;
        let mut h = if rank1 {
            let n = tape.value(x).numel();
            tape.reshape(x, vec![1, n])?
        } else {
            x
        };
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.apply(tape, ps, h)?;
            if i < 2 {
                let slope = ps.bind(tape, self.slopes[i]);
                h = tape.prelu(h, slope)?;
            }
        }
        if rank1 {
            let n = tape.value(h).numel();
            h = tape.reshape(h, vec![n])?;
        }
        Ok(h)
    }
}
