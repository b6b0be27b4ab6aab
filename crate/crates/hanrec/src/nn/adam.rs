//! Adam with bias correction.

use super::ParamSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tape::Gradients;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper {
            lr,
            ..Default::default()
        }
    }
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter first/second moments plus the shared step counter.
pub struct AdamState<S> {
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
    step: u64,
    pub hyper: AdamHyper,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(ps: &ParamSet<S>, hyper: AdamHyper) -> Self {
        let m = ps
            .iter()
            .map(|(_, _, t)| Tensor::zeros(t.shape().to_vec()))
            .collect();
        let v = ps
            .iter()
            .map(|(_, _, t)| Tensor::zeros(t.shape().to_vec()))
            .collect();
        AdamState {
            m,
            v,
            step: 0,
            hyper,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over every registered parameter. Parameters the loss never
    /// reached see a zero gradient (their moments still decay), which is the
    /// dense-optimizer semantics.
    pub fn step(&mut self, ps: &mut ParamSet<S>, grads: &Gradients<S>) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let lr = S::from_f64_val(self.hyper.lr);
        let b1 = S::from_f64_val(self.hyper.beta1);
        let b2 = S::from_f64_val(self.hyper.beta2);
        let eps = S::from_f64_val(self.hyper.eps);
        let corr1 = S::from_f64_val(1.0 - self.hyper.beta1.powi(t));
        let corr2 = S::from_f64_val(1.0 - self.hyper.beta2.powi(t));
        let one = S::one();

        for i in 0..ps.len() {
            let pid = crate::tape::ParamId(i);
            let param = ps.get_mut(pid);
            if let Some(g) = grads.get(pid) {
                if g.shape() != param.shape() {
                    return Err(Error::shape(
                        "adam_step",
                        format!(
                            "gradient {:?} vs parameter {:?}",
                            g.shape(),
                            param.shape()
                        ),
                    ));
                }
                let m = self.m[i].data_mut();
                let v = self.v[i].data_mut();
                let p = param.data_mut();
                for j in 0..p.len() {
                    let gj = g.data()[j];
                    m[j] = b1 * m[j] + (one - b1) * gj;
                    v[j] = b2 * v[j] + (one - b2) * gj * gj;
                    let m_hat = m[j] / corr1;
                    let v_hat = v[j] / corr2;
                    p[j] = p[j] - lr * m_hat / (v_hat.sqrt() + eps);
                }
            } else {
                // zero gradient: moments decay, bias-corrected update still applies
                let m = self.m[i].data_mut();
                let v = self.v[i].data_mut();
                let p = param.data_mut();
                for j in 0..p.len() {
                    m[j] = b1 * m[j];
                    v[j] = b2 * v[j];
                    let m_hat = m[j] / corr1;
                    let v_hat = v[j] / corr2;
                    p[j] = p[j] - lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}
