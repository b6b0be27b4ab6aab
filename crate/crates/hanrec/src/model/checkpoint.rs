//! Versioned model checkpoints: every parameter tensor plus the config that
//! produced it, as one JSON document. Loading rebuilds the parameter layout
//! from the stored config and rejects any dimension mismatch.

use super::{HanrecModel, TrainConfig};
use crate::error::{Error, Result};
use crate::graph::HetGraph;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use serde::{Deserialize, Serialize};
use std::path::Path;

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ParamDoc {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    format_version: u32,
    config: TrainConfig,
    dims: super::ModelDims,
    train_mean: f64,
    params: Vec<ParamDoc>,
}

pub fn save_checkpoint<S: Scalar>(
    path: impl AsRef<Path>,
    model: &HanrecModel<S>,
    config: &TrainConfig,
    train_mean: f64,
) -> Result<()> {
    let doc = CheckpointDoc {
        format_version: CHECKPOINT_VERSION,
        config: config.clone(),
        dims: model.dims,
        train_mean,
        params: model
            .params
            .iter()
            .map(|(_, name, t)| ParamDoc {
                name: name.to_string(),
                shape: t.shape().to_vec(),
                data: t.data().iter().map(|v| v.to_f64_val()).collect(),
            })
            .collect(),
    };
    std::fs::write(path, serde_json::to_string(&doc)?)?;
    Ok(())
}

/// Rebuild a model from a checkpoint against the graph it will score.
/// Structural mismatches (node counts, scale levels, genre vocabulary,
/// attribute dimension, parameter shapes) are rejected.
pub fn load_checkpoint<S: Scalar>(
    path: impl AsRef<Path>,
    graph: &HetGraph,
) -> Result<(HanrecModel<S>, TrainConfig, f64)> {
    let text = std::fs::read_to_string(path)?;
    let doc: CheckpointDoc = serde_json::from_str(&text)?;
    if doc.format_version != CHECKPOINT_VERSION {
        return Err(Error::CheckpointMismatch(format!(
            "unsupported checkpoint version {}",
            doc.format_version
        )));
    }
    let expected = super::ModelDims::for_graph(graph, doc.config.d);
    if expected != doc.dims {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint dims {:?} do not match graph dims {:?}",
            doc.dims, expected
        )));
    }
    let mut model: HanrecModel<S> = HanrecModel::new(
        graph,
        doc.config.d,
        doc.config.variant,
        doc.config.flags,
        doc.config.seed,
    );
    if model.params.len() != doc.params.len() {
        return Err(Error::CheckpointMismatch(format!(
            "parameter count {} vs expected {}",
            doc.params.len(),
            model.params.len()
        )));
    }
    for (i, pd) in doc.params.iter().enumerate() {
        let pid = crate::tape::ParamId(i);
        if model.params.name(pid) != pd.name {
            return Err(Error::CheckpointMismatch(format!(
                "parameter {} named {:?}, expected {:?}",
                i,
                pd.name,
                model.params.name(pid)
            )));
        }
        let current = model.params.get(pid);
        if current.shape() != pd.shape.as_slice() {
            return Err(Error::CheckpointMismatch(format!(
                "parameter {:?} has shape {:?}, expected {:?}",
                pd.name,
                pd.shape,
                current.shape()
            )));
        }
        let tensor = Tensor::new(
            pd.shape.clone(),
            pd.data.iter().map(|&v| S::from_f64_val(v)).collect(),
        )?;
        *model.params.get_mut(pid) = tensor;
    }
    model.params.ensure_finite()?;
    Ok((model, doc.config, doc.train_mean))
}
