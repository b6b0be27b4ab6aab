//! Seeded mini-batch training over frozen neighbor pools.

use super::{AblationFlags, FrozenPools, HanrecModel};
use crate::connector::{load_or_discover, ConnectVariant, ConnectorCaps, PotentialNeighbors};
use crate::error::{Error, Result};
use crate::graph::HetGraph;
use crate::nn::{AdamHyper, AdamState};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Scalar;
use crate::tape::{Mode, Tape};
use crate::tensor::Tensor;
use rand::Rng;
use std::collections::HashSet;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskMode {
    /// Regress the rating value of a pair.
    Rating,
    /// Predict edge presence as a probability.
    Link,
}

/// One scored pair: ground truth and model output. In rating mode the
/// reported prediction is clamped to the scale bounds; in link mode it is a
/// probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPrediction {
    pub i: usize,
    pub j: usize,
    pub truth: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainConfig {
    pub task: TaskMode,
    pub d: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub iterations: usize,
    pub dropout: f64,
    pub seed: u64,
    pub caps: ConnectorCaps,
    /// Optional first-order neighborhood subsample (seeded, frozen per run).
    pub max_first_order: Option<usize>,
    pub variant: ConnectVariant,
    pub flags: AblationFlags,
    /// Optional potential-neighbor cache file.
    pub nprime_cache: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            task: TaskMode::Rating,
            d: 128,
            lr: 1e-3,
            batch_size: 128,
            iterations: 2000,
            dropout: 0.5,
            seed: 0,
            caps: ConnectorCaps::default(),
            max_first_order: None,
            variant: ConnectVariant::Full,
            flags: AblationFlags::default(),
            nprime_cache: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        if self.lr <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iteration count must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout rate {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }
}

pub struct TrainOutput<S> {
    pub model: HanrecModel<S>,
    pub pools: FrozenPools,
    /// (iteration, batch loss) sampled every 10 iterations.
    pub loss_curve: Vec<(usize, f64)>,
    pub nprime_pairs: usize,
    pub train_mean: f64,
    /// Connector MLP input extent, recorded for run logs.
    pub connector_input_extent: usize,
}

/// Train on `train_graph` (its edge set IS the training split). Fully
/// deterministic per seed: discovery, pool freezing, initialization, batch
/// order, negatives, and dropout all draw from decoupled seed streams.
pub fn train<S: Scalar>(train_graph: &HetGraph, cfg: &TrainConfig) -> Result<TrainOutput<S>> {
    cfg.validate()?;
    if train_graph.edge_count() == 0 {
        return Err(Error::contract("train", "empty training set"));
    }

    let nprime = if cfg.flags.disable_connect {
        PotentialNeighbors::empty(train_graph.node_count())
    } else {
        load_or_discover(
            train_graph,
            cfg.caps,
            cfg.seed,
            cfg.nprime_cache.as_deref(),
        )?
    };
    let nprime_pairs = nprime.total_pairs();
    let pools = FrozenPools::build(train_graph, &nprime, cfg.max_first_order, cfg.seed);

    let mut model: HanrecModel<S> =
        HanrecModel::new(train_graph, cfg.d, cfg.variant, cfg.flags, cfg.seed);

    let scale = train_graph.scale();
    let train_mean = train_graph
        .edges()
        .iter()
        .map(|e| scale.value_of(e.level as usize))
        .sum::<f64>()
        / train_graph.edge_count() as f64;
    if cfg.task == TaskMode::Rating {
        // start the scoring head at the mean rating
        model.set_score_bias(train_mean);
    }

    let mut adam = AdamState::new(&model.params, AdamHyper::with_lr(cfg.lr));
    let mut batch_rng = stream_rng(cfg.seed, Stream::Batch);
    let mut dropout_rng = stream_rng(cfg.seed, Stream::Dropout);
    let mut neg_rng = stream_rng(cfg.seed, Stream::TrainNegatives);

    // Training pool. Rating mode: observed edges with their values. Link
    // mode: observed edges labeled 1 plus an equal number of negatives
    // labeled 0, negatives refreshed every epoch-equivalent.
    let positives: Vec<((usize, usize), f64)> = train_graph
        .edges()
        .iter()
        .map(|e| ((e.a, e.b), scale.value_of(e.level as usize)))
        .collect();
    let edge_set: HashSet<(usize, usize)> = train_graph
        .edges()
        .iter()
        .map(|e| (e.a.min(e.b), e.a.max(e.b)))
        .collect();
    let n_edges = positives.len();
    let epoch_len = n_edges.div_ceil(cfg.batch_size);

    let mut negatives: Vec<(usize, usize)> = Vec::new();
    let mut resample_negatives = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<(usize, usize)> {
        let n_nodes = train_graph.node_count();
        let mut out = Vec::with_capacity(n_edges);
        while out.len() < n_edges {
            let a = rng.gen_range(0..n_nodes);
            let b = rng.gen_range(0..n_nodes);
            if a == b || edge_set.contains(&(a.min(b), a.max(b))) {
                continue;
            }
            out.push((a, b));
        }
        out
    };

    let mut loss_curve = Vec::with_capacity(cfg.iterations / 10 + 1);
    for iter in 1..=cfg.iterations {
        let mut pairs = Vec::with_capacity(cfg.batch_size);
        let mut targets: Vec<S> = Vec::with_capacity(cfg.batch_size);
        match cfg.task {
            TaskMode::Rating => {
                for _ in 0..cfg.batch_size {
                    let ((a, b), r) = positives[batch_rng.gen_range(0..n_edges)];
                    pairs.push((a, b));
                    targets.push(S::from_f64_val(r));
                }
            }
            TaskMode::Link => {
                if (iter - 1) % epoch_len == 0 {
                    negatives = resample_negatives(&mut neg_rng);
                }
                for _ in 0..cfg.batch_size {
                    let k = batch_rng.gen_range(0..2 * n_edges);
                    if k < n_edges {
                        pairs.push(positives[k].0);
                        targets.push(S::one());
                    } else {
                        pairs.push(negatives[k - n_edges]);
                        targets.push(S::zero());
                    }
                }
            }
        }

        let mut tape = Tape::new();
        let scores = model.score_pairs_batch(
            &mut tape,
            train_graph,
            &pools,
            &pairs,
            cfg.task,
            Mode::Train,
            cfg.dropout,
            &mut dropout_rng,
        )?;
        let target_node = tape.leaf(Tensor::vector(targets));
        let loss = HanrecModel::batch_loss(&mut tape, scores, target_node)?;
        let loss_value = tape.value(loss).data()[0].to_f64_val();
        if !loss_value.is_finite() {
            return Err(Error::NonFinite(format!("training loss at iteration {}", iter)));
        }
        let grads = tape.backward(loss)?;
        drop(tape);
        adam.step(&mut model.params, &grads)?;

        if iter % 10 == 0 {
            loss_curve.push((iter, loss_value));
        }
    }
    model.params.ensure_finite()?;

    Ok(TrainOutput {
        model,
        pools,
        loss_curve,
        nprime_pairs,
        train_mean,
        connector_input_extent: cfg.variant.input_extent(cfg.d),
    })
}

/// Score (i, j, truth) triples against frozen parameters in eval mode.
/// Rating-mode predictions are clamped to the scale bounds at this reporting
/// boundary; the raw regression output feeds the loss during training only.
pub fn predict_pairs<S: Scalar>(
    model: &HanrecModel<S>,
    graph: &HetGraph,
    pools: &FrozenPools,
    triples: &[(usize, usize, f64)],
    task: TaskMode,
) -> Result<Vec<PairPrediction>> {
    let scale = graph.scale();
    let mut out = Vec::with_capacity(triples.len());
    let mut rng = stream_rng(0, Stream::Dropout);
    for chunk in triples.chunks(512) {
        let pairs: Vec<(usize, usize)> = chunk.iter().map(|&(i, j, _)| (i, j)).collect();
        let mut tape = Tape::new();
        let scores = model.score_pairs_batch(
            &mut tape,
            graph,
            pools,
            &pairs,
            task,
            Mode::Eval,
            0.0,
            &mut rng,
        )?;
        let values = tape.value(scores);
        for (&(i, j, truth), &raw) in chunk.iter().zip(values.data()) {
            let raw = raw.to_f64_val();
            let prediction = match task {
                TaskMode::Rating => scale.clamp(raw),
                TaskMode::Link => raw,
            };
            out.push(PairPrediction {
                i,
                j,
                truth,
                prediction,
            });
        }
    }
    Ok(out)
}
