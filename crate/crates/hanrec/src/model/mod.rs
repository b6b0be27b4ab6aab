//! Model assembly: initial embeddings, neighbor pools, attention channels,
//! fusion, and pair scoring.
//!
//! The forward pass is built once per mini-batch as a handful of batched tape
//! ops: one gather/MLP pipeline per interaction role (first-order homogeneous,
//! first-order heterogeneous, connector paths), segment softmax for the
//! attention weights, and a fused scoring head. Single-node and single-pair
//! entry points wrap the same machinery with one-element batches.

mod checkpoint;
#[cfg(test)]
mod tests;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use train::{predict_pairs, train, PairPrediction, TaskMode, TrainConfig, TrainOutput};

use crate::connector::{ConnectVariant, PotentialNeighbors, TargetPaths};
use crate::error::{Error, Result};
use crate::graph::HetGraph;
use crate::nn::{gaussian, Affine, Mlp, ParamSet, INIT_STD, PRELU_INIT};
use crate::rng::{entity_rng, stream_rng, Stream};
use crate::scalar::Scalar;
use crate::tape::{Mode, NodeId, ParamId, Tape};
use crate::tensor::Tensor;
use rand::seq::index::sample;
use rand::Rng;
use std::collections::HashMap;

/// Attention channel selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Homogeneous,
    Heterogeneous,
}

/// Component switches for ablation runs. Disabling a component is exact:
/// `disable_homo` forces h_B = 0, `disable_connect` empties N′, and
/// `disable_attention` replaces softmax weights with uniform 1/|pool|.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AblationFlags {
    pub disable_connect: bool,
    pub disable_homo: bool,
    pub disable_hetero: bool,
    pub disable_attention: bool,
}

/// Structural dimensions the parameter tables are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ModelDims {
    pub d: usize,
    pub levels: usize,
    pub n_nodes: usize,
    pub n_genres: usize,
    pub attr_dim: Option<usize>,
}

impl ModelDims {
    pub fn for_graph(g: &HetGraph, d: usize) -> Self {
        ModelDims {
            d,
            levels: g.scale().level_count(),
            n_nodes: g.node_count(),
            n_genres: g.genre_names().len(),
            attr_dim: g.attr_dim(),
        }
    }
}

/// How a node's initial representation h⁰ is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedKind {
    /// Row of the node embedding table.
    Plain,
    /// Mean of the node's genre embedding rows (recomputed every forward
    /// pass so genre gradients flow).
    GenreMean,
    /// Affine projection of the node's attribute vector.
    Attr,
    /// Genre-bearing node with an empty genre set; falls back to the node
    /// table row.
    PlainFallback,
}

/// One attention scorer: 2d→d affine, PReLU, d→1 affine.
#[derive(Debug, Clone, Copy)]
pub struct AttnChannel {
    pub affine1: Affine,
    pub score: Affine,
    pub slope: ParamId,
}

impl AttnChannel {
    fn new<S: Scalar>(ps: &mut ParamSet<S>, rng: &mut impl Rng, d: usize, name: &str) -> Self {
        AttnChannel {
            affine1: Affine::new(ps, rng, 2 * d, d, &format!("{name}.a1")),
            score: Affine::new(ps, rng, d, 1, &format!("{name}.score")),
            slope: ps.register(
                format!("{name}.slope"),
                Tensor::scalar(S::from_f64_val(PRELU_INIT)),
            ),
        }
    }
}

/// All trainable state plus the structural metadata needed to rebuild the
/// forward pass.
pub struct HanrecModel<S> {
    pub params: ParamSet<S>,
    pub dims: ModelDims,
    pub variant: ConnectVariant,
    pub flags: AblationFlags,
    pub node_table: ParamId,
    pub genre_table: Option<ParamId>,
    pub rating_table: ParamId,
    pub attr_proj: Option<Affine>,
    pub mlp_conn: Mlp,
    pub mlp_homo: Mlp,
    pub mlp_hetero: Mlp,
    pub mlp_fusion: Mlp,
    pub mlp_score: Mlp,
    pub attn_homo: AttnChannel,
    pub attn_hetero: AttnChannel,
    embed_kinds: Vec<EmbedKind>,
    node_types: Vec<u16>,
}

impl<S: Scalar> HanrecModel<S> {
    pub fn new(
        g: &HetGraph,
        d: usize,
        variant: ConnectVariant,
        flags: AblationFlags,
        seed: u64,
    ) -> Self {
        let dims = ModelDims::for_graph(g, d);
        let mut rng = stream_rng(seed, Stream::ParamInit);
        let mut ps = ParamSet::new();

        let node_table = ps.register("node_table", gaussian(&mut rng, vec![dims.n_nodes, d], INIT_STD));
        let genre_table = (dims.n_genres > 0)
            .then(|| ps.register("genre_table", gaussian(&mut rng, vec![dims.n_genres, d], INIT_STD)));
        let rating_table =
            ps.register("rating_table", gaussian(&mut rng, vec![dims.levels, d], INIT_STD));
        let attr_proj = dims
            .attr_dim
            .map(|a| Affine::new(&mut ps, &mut rng, a, d, "attr_proj"));

        let mlp_conn = Mlp::new(&mut ps, &mut rng, variant.input_extent(d), d, d, "mlp_conn");
        let mlp_homo = Mlp::new(&mut ps, &mut rng, 2 * d, d, d, "mlp_homo");
        let mlp_hetero = Mlp::new(&mut ps, &mut rng, 2 * d, d, d, "mlp_hetero");
        let mlp_fusion = Mlp::new(&mut ps, &mut rng, 3 * d, d, d, "mlp_fusion");
        let mlp_score = Mlp::new(&mut ps, &mut rng, 2 * d, d, 1, "mlp_score");
        let attn_homo = AttnChannel::new(&mut ps, &mut rng, d, "attn_homo");
        let attn_hetero = AttnChannel::new(&mut ps, &mut rng, d, "attn_hetero");

        let mut fallbacks = 0usize;
        let embed_kinds = g
            .nodes()
            .iter()
            .map(|n| match (&n.genres, &n.attrs) {
                (Some(gs), _) if !gs.is_empty() => EmbedKind::GenreMean,
                (Some(_), _) => {
                    fallbacks += 1;
                    EmbedKind::PlainFallback
                }
                (None, Some(_)) => EmbedKind::Attr,
                (None, None) => EmbedKind::Plain,
            })
            .collect();
        if fallbacks > 0 {
            log::warn!(
                "{} genre-bearing node(s) with empty genre sets fall back to node-table rows",
                fallbacks
            );
        }

        HanrecModel {
            params: ps,
            dims,
            variant,
            flags,
            node_table,
            genre_table,
            rating_table,
            attr_proj,
            mlp_conn,
            mlp_homo,
            mlp_hetero,
            mlp_fusion,
            mlp_score,
            attn_homo,
            attn_hetero,
            embed_kinds,
            node_types: g.nodes().iter().map(|n| n.node_type).collect(),
        }
    }

    pub fn embed_kind(&self, v: usize) -> EmbedKind {
        self.embed_kinds[v]
    }

    fn attn(&self, channel: Channel) -> &AttnChannel {
        match channel {
            Channel::Homogeneous => &self.attn_homo,
            Channel::Heterogeneous => &self.attn_hetero,
        }
    }

    fn interaction_mlp(&self, channel: Channel) -> &Mlp {
        match channel {
            Channel::Homogeneous => &self.mlp_homo,
            Channel::Heterogeneous => &self.mlp_hetero,
        }
    }

    /// Overwrite the scoring head's output bias (rating runs start it at the
    /// training-mean rating so the head does not spend iterations climbing to
    /// the scale's center).
    pub fn set_score_bias(&mut self, value: f64) {
        let bias = self.params.get_mut(self.mlp_score.layers[2].b);
        bias.data_mut()[0] = S::from_f64_val(value);
    }
}

/// Per-node neighbor pools frozen for one training run: first-order
/// adjacency (optionally subsampled to `max_first_order`) plus the discovered
/// potential neighbors. Built from the training split only.
#[derive(Debug, Clone, Default)]
pub struct FrozenPools {
    pub first_order: Vec<Vec<(usize, u8)>>,
    pub potential: Vec<Vec<TargetPaths>>,
}

impl FrozenPools {
    pub fn build(
        g: &HetGraph,
        nprime: &PotentialNeighbors,
        max_first_order: Option<usize>,
        seed: u64,
    ) -> Self {
        let first_order = (0..g.node_count())
            .map(|v| {
                let adj = g.adjacency(v);
                match max_first_order {
                    Some(cap) if adj.len() > cap => {
                        let mut rng = entity_rng(seed, Stream::NeighborCap, v as u64);
                        let mut keep: Vec<usize> = sample(&mut rng, adj.len(), cap).into_vec();
                        keep.sort_unstable();
                        keep.into_iter().map(|i| adj[i]).collect()
                    }
                    _ => adj.to_vec(),
                }
            })
            .collect();
        FrozenPools {
            first_order,
            potential: nprime.per_source.clone(),
        }
    }
}

/// Where a pooled instance's interaction vector comes from.
#[derive(Clone, Copy)]
enum FSource {
    FirstOrder(usize),
    Potential(usize),
}

#[derive(Default)]
struct ChannelPlan {
    fo_neighbor: Vec<usize>,
    fo_level: Vec<usize>,
    inst_center: Vec<usize>,
    inst_neighbor: Vec<usize>,
    inst_src: Vec<FSource>,
    offsets: Vec<usize>,
}

/// Result of a batched center forward: latent representations for each
/// requested center plus the H0 row map for reuse.
pub struct CenterForward {
    pub p: NodeId,
    pub h0: NodeId,
    pub h0_row: HashMap<usize, usize>,
    pub h_homo: NodeId,
    pub h_hetero: NodeId,
}

impl<S: Scalar> HanrecModel<S> {
    /// Initial representations for `needed` nodes (sorted, deduplicated by
    /// the caller) as one rank-2 tensor; returns the node → row map.
    fn build_h0(
        &self,
        tape: &mut Tape<S>,
        g: &HetGraph,
        needed: &[usize],
    ) -> Result<(NodeId, HashMap<usize, usize>)> {
        let mut plain = Vec::new();
        let mut genre = Vec::new();
        let mut attr = Vec::new();
        for &v in needed {
            match self.embed_kinds[v] {
                EmbedKind::Plain | EmbedKind::PlainFallback => plain.push(v),
                EmbedKind::GenreMean => genre.push(v),
                EmbedKind::Attr => attr.push(v),
            }
        }
        let mut parts = Vec::new();
        let mut row_map = HashMap::with_capacity(needed.len());
        let mut next_row = 0usize;

        if !plain.is_empty() {
            let table = self.params.bind(tape, self.node_table);
            let block = tape.gather_rows(table, plain.clone())?;
            parts.push(block);
            for &v in &plain {
                row_map.insert(v, next_row);
                next_row += 1;
            }
        }
        if !genre.is_empty() {
            let table = self.params.bind(
                tape,
                self.genre_table.expect("genre nodes imply a genre table"),
            );
            let mut flat = Vec::new();
            let mut offsets = vec![0usize];
            for &v in &genre {
                let gs = g.node(v).genres.as_ref().expect("genre node");
                flat.extend(gs.iter().map(|&x| x as usize));
                offsets.push(flat.len());
            }
            let rows = tape.gather_rows(table, flat)?;
            let block = tape.segment_mean(rows, offsets)?;
            parts.push(block);
            for &v in &genre {
                row_map.insert(v, next_row);
                next_row += 1;
            }
        }
        if !attr.is_empty() {
            let proj = self.attr_proj.expect("attr nodes imply a projection");
            let dim = self.dims.attr_dim.expect("attr dim");
            let mut data = Vec::with_capacity(attr.len() * dim);
            for &v in &attr {
                let a = g.node(v).attrs.as_ref().expect("attr node");
                data.extend(a.iter().map(|&x| S::from_f64_val(x)));
            }
            let x = tape.leaf(Tensor::matrix(attr.len(), dim, data)?);
            let block = proj.apply(tape, &self.params, x)?;
            parts.push(block);
            for &v in &attr {
                row_map.insert(v, next_row);
                next_row += 1;
            }
        }
        let h0 = match parts.len() {
            0 => tape.leaf(Tensor::zeros(vec![0, self.dims.d])),
            1 => parts[0],
            _ => tape.concat_rows(&parts)?,
        };
        Ok((h0, row_map))
    }

    /// Latent representation p_v for a batch of centers over frozen pools.
    pub fn forward_centers(
        &self,
        tape: &mut Tape<S>,
        g: &HetGraph,
        pools: &FrozenPools,
        centers: &[usize],
        mode: Mode,
        dropout_rate: f64,
        rng: &mut impl Rng,
    ) -> Result<CenterForward> {
        let d = self.dims.d;

        // Gather the node universe this batch touches.
        let mut needed: Vec<usize> = centers.to_vec();
        for &c in centers {
            for &(j, _) in &pools.first_order[c] {
                needed.push(j);
            }
            if !self.flags.disable_connect {
                for tp in &pools.potential[c] {
                    needed.push(tp.target);
                    for &(via, _, _) in &tp.paths {
                        needed.push(via);
                    }
                }
            }
        }
        needed.sort_unstable();
        needed.dedup();
        let (h0, h0_row) = self.build_h0(tape, g, &needed)?;

        // Connector paths, shared by both channels: one MLP run over every
        // path, then a mean per (center, target).
        let mut path_via = Vec::new();
        let mut path_lv1 = Vec::new();
        let mut path_tgt = Vec::new();
        let mut path_lv2 = Vec::new();
        let mut path_offsets = vec![0usize];
        // per (center position, target): row in the pooled matrix
        let mut np_row: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
        if !self.flags.disable_connect {
            for (ci, &c) in centers.iter().enumerate() {
                for tp in &pools.potential[c] {
                    for &(via, l1, l2) in &tp.paths {
                        path_via.push(h0_row[&via]);
                        path_lv1.push(l1 as usize);
                        path_tgt.push(h0_row[&tp.target]);
                        path_lv2.push(l2 as usize);
                    }
                    np_row[ci].push(path_offsets.len() - 1);
                    path_offsets.push(path_via.len());
                }
            }
        }
        let f_np = if path_via.is_empty() {
            None
        } else {
            let e = self.params.bind(tape, self.rating_table);
            let h_via = tape.gather_rows(h0, path_via)?;
            let h_tgt = tape.gather_rows(h0, path_tgt)?;
            let input = match self.variant {
                ConnectVariant::Full => {
                    let e1 = tape.gather_rows(e, path_lv1)?;
                    let e2 = tape.gather_rows(e, path_lv2)?;
                    tape.concat_cols(&[h_via, e1, h_tgt, e2])?
                }
                ConnectVariant::FeatureBased => tape.concat_cols(&[h_via, h_tgt])?,
                ConnectVariant::RelationBased => {
                    let e1 = tape.gather_rows(e, path_lv1)?;
                    let e2 = tape.gather_rows(e, path_lv2)?;
                    tape.concat_cols(&[e1, e2])?
                }
            };
            let per_path = self.mlp_conn.forward(tape, &self.params, input)?;
            Some(tape.segment_mean(per_path, path_offsets)?)
        };

        // Channel plans: per center, first-order members then potential
        // members, each routed by type parity.
        let mut homo = ChannelPlan::default();
        let mut hetero = ChannelPlan::default();
        homo.offsets.push(0);
        hetero.offsets.push(0);
        for (ci, &c) in centers.iter().enumerate() {
            let ct = self.node_types[c];
            for plan_pass in 0..2 {
                let plan = if plan_pass == 0 { &mut homo } else { &mut hetero };
                let want_same = plan_pass == 0;
                for &(j, lv) in &pools.first_order[c] {
                    if (self.node_types[j] == ct) != want_same {
                        continue;
                    }
                    plan.inst_center.push(h0_row[&c]);
                    plan.inst_neighbor.push(h0_row[&j]);
                    plan.inst_src.push(FSource::FirstOrder(plan.fo_neighbor.len()));
                    plan.fo_neighbor.push(h0_row[&j]);
                    plan.fo_level.push(lv as usize);
                }
                if !self.flags.disable_connect {
                    for (ti, tp) in pools.potential[c].iter().enumerate() {
                        if (self.node_types[tp.target] == ct) != want_same {
                            continue;
                        }
                        plan.inst_center.push(h0_row[&c]);
                        plan.inst_neighbor.push(h0_row[&tp.target]);
                        plan.inst_src.push(FSource::Potential(np_row[ci][ti]));
                    }
                }
                plan.offsets.push(plan.inst_center.len());
            }
        }

        let h_homo = if self.flags.disable_homo {
            tape.leaf(Tensor::zeros(vec![centers.len(), d]))
        } else {
            self.pool_channel(tape, Channel::Homogeneous, h0, &homo, f_np, mode)?
        };
        let h_hetero = if self.flags.disable_hetero {
            tape.leaf(Tensor::zeros(vec![centers.len(), d]))
        } else {
            self.pool_channel(tape, Channel::Heterogeneous, h0, &hetero, f_np, mode)?
        };

        let center_rows: Vec<usize> = centers.iter().map(|c| h0_row[c]).collect();
        let h0_centers = tape.gather_rows(h0, center_rows)?;
        let fused_in = tape.concat_cols(&[h0_centers, h_homo, h_hetero])?;
        let fused_in = tape.dropout(fused_in, dropout_rate, mode, rng)?;
        let p = self.mlp_fusion.forward(tape, &self.params, fused_in)?;

        Ok(CenterForward {
            p,
            h0,
            h0_row,
            h_homo,
            h_hetero,
        })
    }

    /// Attention-weighted pooling of one channel's instances. Centers with an
    /// empty pool come out as zero rows.
    fn pool_channel(
        &self,
        tape: &mut Tape<S>,
        channel: Channel,
        h0: NodeId,
        plan: &ChannelPlan,
        f_np: Option<NodeId>,
        _mode: Mode,
    ) -> Result<NodeId> {
        let n_centers = plan.offsets.len() - 1;
        let d = self.dims.d;
        if plan.inst_center.is_empty() {
            return Ok(tape.leaf(Tensor::zeros(vec![n_centers, d])));
        }

        // Interaction vectors: first-order through this channel's MLP, plus
        // the shared connector outputs, stitched per instance.
        let f_fo = if plan.fo_neighbor.is_empty() {
            None
        } else {
            let e = self.params.bind(tape, self.rating_table);
            let hj = tape.gather_rows(h0, plan.fo_neighbor.clone())?;
            let ej = tape.gather_rows(e, plan.fo_level.clone())?;
            let input = tape.concat_cols(&[hj, ej])?;
            Some(
                self.interaction_mlp(channel)
                    .forward(tape, &self.params, input)?,
            )
        };
        let uses_np = plan
            .inst_src
            .iter()
            .any(|s| matches!(s, FSource::Potential(_)));
        let (combined, np_base) = match (f_fo, uses_np) {
            (Some(fo), true) => {
                let np = f_np.expect("potential instances imply connector output");
                let fo_rows = tape.value(fo).rows();
                (tape.concat_rows(&[fo, np])?, fo_rows)
            }
            (Some(fo), false) => (fo, 0),
            (None, true) => (f_np.expect("potential instances imply connector output"), 0),
            (None, false) => unreachable!("non-empty plan has a source"),
        };
        let idx: Vec<usize> = plan
            .inst_src
            .iter()
            .map(|s| match *s {
                FSource::FirstOrder(r) => r,
                FSource::Potential(r) => np_base + r,
            })
            .collect();
        let f_inst = tape.gather_rows(combined, idx)?;

        let weights = if self.flags.disable_attention {
            let mut w = vec![S::zero(); plan.inst_center.len()];
            for s in 0..n_centers {
                let (lo, hi) = (plan.offsets[s], plan.offsets[s + 1]);
                if lo == hi {
                    continue;
                }
                let uniform = S::one() / S::from_f64_val((hi - lo) as f64);
                for v in &mut w[lo..hi] {
                    *v = uniform;
                }
            }
            tape.leaf(Tensor::vector(w))
        } else {
            let att = self.attn(channel);
            let hc = tape.gather_rows(h0, plan.inst_center.clone())?;
            let hj = tape.gather_rows(h0, plan.inst_neighbor.clone())?;
            let pair = tape.concat_cols(&[hc, hj])?;
            let a1 = att.affine1.apply(tape, &self.params, pair)?;
            let slope = self.params.bind(tape, att.slope);
            let act = tape.prelu(a1, slope)?;
            let logit_col = att.score.apply(tape, &self.params, act)?;
            let n = tape.value(logit_col).rows();
            let logits = tape.reshape(logit_col, vec![n])?;
            tape.segment_softmax(logits, plan.offsets.clone())?
        };
        tape.weighted_sum_rows(weights, f_inst, plan.offsets.clone())
    }

    /// h⁰ of a single node (rank-1).
    pub fn initial_embedding(&self, tape: &mut Tape<S>, g: &HetGraph, v: usize) -> Result<NodeId> {
        if v >= self.dims.n_nodes {
            return Err(Error::UnknownNode(format!("index {}", v)));
        }
        let (h0, map) = self.build_h0(tape, g, &[v])?;
        let row = tape.gather_rows(h0, vec![map[&v]])?;
        tape.reshape(row, vec![self.dims.d])
    }

    /// Opinion-aware interaction vector of one two-hop path (rank-1, length d).
    pub fn potential_interaction(
        &self,
        tape: &mut Tape<S>,
        g: &HetGraph,
        path: &crate::connector::PotentialPath,
    ) -> Result<NodeId> {
        self.paths_mean(
            tape,
            g,
            path.target,
            &[(path.via, path.level_first, path.level_second)],
        )
    }

    /// Mean connector output over all witnessing paths of one (source, target)
    /// pair. Errs on an empty path list.
    pub fn aggregate_paths(
        &self,
        tape: &mut Tape<S>,
        g: &HetGraph,
        target: &TargetPaths,
    ) -> Result<NodeId> {
        if target.paths.is_empty() {
            return Err(Error::contract("aggregate_paths", "empty path list"));
        }
        self.paths_mean(tape, g, target.target, &target.paths)
    }

    fn paths_mean(
        &self,
        tape: &mut Tape<S>,
        g: &HetGraph,
        target: usize,
        paths: &[(usize, u8, u8)],
    ) -> Result<NodeId> {
        // single-segment reuse of the batched connector pipeline
        let mut needed: Vec<usize> = paths.iter().map(|&(via, _, _)| via).collect();
        needed.push(target);
        needed.sort_unstable();
        needed.dedup();
        let (h0, map) = self.build_h0(tape, g, &needed)?;
        let e = self.params.bind(tape, self.rating_table);
        let via_rows: Vec<usize> = paths.iter().map(|&(via, _, _)| map[&via]).collect();
        let tgt_rows: Vec<usize> = paths.iter().map(|_| map[&target]).collect();
        let lv1: Vec<usize> = paths.iter().map(|&(_, l1, _)| l1 as usize).collect();
        let lv2: Vec<usize> = paths.iter().map(|&(_, _, l2)| l2 as usize).collect();
        let h_via = tape.gather_rows(h0, via_rows)?;
        let h_tgt = tape.gather_rows(h0, tgt_rows)?;
        let input = match self.variant {
            ConnectVariant::Full => {
                let e1 = tape.gather_rows(e, lv1)?;
                let e2 = tape.gather_rows(e, lv2)?;
                tape.concat_cols(&[h_via, e1, h_tgt, e2])?
            }
            ConnectVariant::FeatureBased => tape.concat_cols(&[h_via, h_tgt])?,
            ConnectVariant::RelationBased => {
                let e1 = tape.gather_rows(e, lv1)?;
                let e2 = tape.gather_rows(e, lv2)?;
                tape.concat_cols(&[e1, e2])?
            }
        };
        let out = self.mlp_conn.forward(tape, &self.params, input)?;
        let mean = tape.segment_mean(out, vec![0, paths.len()])?;
        tape.reshape(mean, vec![self.dims.d])
    }

    /// First-order interaction vector f_{i,j} = MLP(h_j⁰ ⊕ e_level), routed
    /// through the homogeneous or heterogeneous MLP by the type parity of
    /// `i` and `j`.
    pub fn interaction_repr(
        &self,
        tape: &mut Tape<S>,
        g: &HetGraph,
        i: usize,
        j: usize,
        level: usize,
    ) -> Result<NodeId> {
        if level >= self.dims.levels {
            return Err(Error::contract(
                "interaction_repr",
                format!("level {} outside scale with {} levels", level, self.dims.levels),
            ));
        }
        let channel = if self.node_types[i] == self.node_types[j] {
            Channel::Homogeneous
        } else {
            Channel::Heterogeneous
        };
        let (h0, map) = self.build_h0(tape, g, &[j])?;
        let hj = tape.gather_rows(h0, vec![map[&j]])?;
        let e = self.params.bind(tape, self.rating_table);
        let ej = tape.gather_rows(e, vec![level])?;
        let input = tape.concat_cols(&[hj, ej])?;
        let out = self.interaction_mlp(channel).forward(tape, &self.params, input)?;
        tape.reshape(out, vec![self.dims.d])
    }

    /// Raw attention logit for (i, j) on one channel:
    /// w₂ᵀ·PReLU(W₁·[h_i⁰ ⊕ h_j⁰] + b₁) + b₂.
    pub fn attention_logit(
        &self,
        tape: &mut Tape<S>,
        g: &HetGraph,
        channel: Channel,
        i: usize,
        j: usize,
    ) -> Result<NodeId> {
        let mut needed = vec![i, j];
        needed.sort_unstable();
        needed.dedup();
        let (h0, map) = self.build_h0(tape, g, &needed)?;
        let hi = tape.gather_rows(h0, vec![map[&i]])?;
        let hj = tape.gather_rows(h0, vec![map[&j]])?;
        let pair = tape.concat_cols(&[hi, hj])?;
        let att = self.attn(channel);
        let a1 = att.affine1.apply(tape, &self.params, pair)?;
        let slope = self.params.bind(tape, att.slope);
        let act = tape.prelu(a1, slope)?;
        let logit = att.score.apply(tape, &self.params, act)?;
        tape.reshape(logit, vec![1])
    }

    /// Attention-weighted pooling over an explicit pool of (neighbor h⁰ row,
    /// interaction vector) pairs for a single center. Empty pools pool to the
    /// zero vector; a singleton pool passes its vector through with weight 1.
    pub fn attend_and_pool(
        &self,
        tape: &mut Tape<S>,
        channel: Channel,
        h_center: NodeId,
        members: &[(NodeId, NodeId)],
    ) -> Result<NodeId> {
        let d = self.dims.d;
        if members.is_empty() {
            return Ok(tape.leaf(Tensor::zeros(vec![d])));
        }
        let n = members.len();
        let mut rows = Vec::with_capacity(n);
        let mut f_rows = Vec::with_capacity(n);
        for &(hj, f) in members {
            let hj2 = tape.reshape(hj, vec![1, d])?;
            let f2 = tape.reshape(f, vec![1, d])?;
            rows.push(hj2);
            f_rows.push(f2);
        }
        let hj_mat = tape.concat_rows(&rows)?;
        let f_mat = tape.concat_rows(&f_rows)?;
        let hc2 = tape.reshape(h_center, vec![1, d])?;
        let hc_mat = tape.gather_rows(hc2, vec![0; n])?;
        let pair = tape.concat_cols(&[hc_mat, hj_mat])?;
        let att = self.attn(channel);
        let a1 = att.affine1.apply(tape, &self.params, pair)?;
        let slope = self.params.bind(tape, att.slope);
        let act = tape.prelu(a1, slope)?;
        let logit_col = att.score.apply(tape, &self.params, act)?;
        let logits = tape.reshape(logit_col, vec![n])?;
        let weights = if self.flags.disable_attention {
            let uniform = S::one() / S::from_f64_val(n as f64);
            tape.leaf(Tensor::vector(vec![uniform; n]))
        } else {
            tape.segment_softmax(logits, vec![0, n])?
        };
        let pooled = tape.weighted_sum_rows(weights, f_mat, vec![0, n])?;
        tape.reshape(pooled, vec![d])
    }

    /// p_v for one node under frozen pools (eval mode), rank-1.
    pub fn final_embedding(
        &self,
        tape: &mut Tape<S>,
        g: &HetGraph,
        pools: &FrozenPools,
        v: usize,
    ) -> Result<NodeId> {
        let mut rng = stream_rng(0, Stream::Dropout);
        let fwd = self.forward_centers(tape, g, pools, &[v], Mode::Eval, 0.0, &mut rng)?;
        tape.reshape(fwd.p, vec![self.dims.d])
    }

    /// Relationship score for one pair (eval mode): raw regression output in
    /// rating mode, logistic-squashed probability in link mode.
    pub fn score_pair(
        &self,
        tape: &mut Tape<S>,
        g: &HetGraph,
        pools: &FrozenPools,
        i: usize,
        j: usize,
        task: train::TaskMode,
    ) -> Result<NodeId> {
        if i == j {
            return Err(Error::contract("score_pair", "i and j must differ"));
        }
        let mut rng = stream_rng(0, Stream::Dropout);
        let scores = self.score_pairs_batch(
            tape,
            g,
            pools,
            &[(i, j)],
            task,
            Mode::Eval,
            0.0,
            &mut rng,
        )?;
        tape.reshape(scores, vec![1])
    }

    /// Batched pair scoring; shared by training and evaluation.
    #[allow(clippy::too_many_arguments)]
    pub fn score_pairs_batch(
        &self,
        tape: &mut Tape<S>,
        g: &HetGraph,
        pools: &FrozenPools,
        pairs: &[(usize, usize)],
        task: train::TaskMode,
        mode: Mode,
        dropout_rate: f64,
        rng: &mut impl Rng,
    ) -> Result<NodeId> {
        if pairs.is_empty() {
            return Err(Error::contract("score_pairs", "empty pair list"));
        }
        for &(i, j) in pairs {
            if i == j {
                return Err(Error::contract("score_pairs", "i and j must differ"));
            }
        }
        let mut centers: Vec<usize> = pairs.iter().flat_map(|&(i, j)| [i, j]).collect();
        centers.sort_unstable();
        centers.dedup();
        let fwd = self.forward_centers(tape, g, pools, &centers, mode, dropout_rate, rng)?;
        let pos: HashMap<usize, usize> = centers.iter().enumerate().map(|(r, &c)| (c, r)).collect();
        let i_rows: Vec<usize> = pairs.iter().map(|&(i, _)| pos[&i]).collect();
        let j_rows: Vec<usize> = pairs.iter().map(|&(_, j)| pos[&j]).collect();
        let pi = tape.gather_rows(fwd.p, i_rows)?;
        let pj = tape.gather_rows(fwd.p, j_rows)?;
        let pair_in = tape.concat_cols(&[pi, pj])?;
        let raw_col = self.mlp_score.forward(tape, &self.params, pair_in)?;
        let raw = tape.reshape(raw_col, vec![pairs.len()])?;
        Ok(match task {
            train::TaskMode::Rating => raw,
            train::TaskMode::Link => tape.sigmoid(raw),
        })
    }

    /// Mean squared pair loss: (1 / 2|T|) Σ (r′ − r)².
    pub fn batch_loss(
        tape: &mut Tape<S>,
        predictions: NodeId,
        targets: NodeId,
    ) -> Result<NodeId> {
        let n = tape.value(predictions).numel();
        if n == 0 {
            return Err(Error::contract("batch_loss", "empty batch"));
        }
        let diff = tape.sub(predictions, targets)?;
        let sq = tape.mul(diff, diff)?;
        let total = tape.sum(sq);
        Ok(tape.scale(total, S::from_f64_val(0.5 / n as f64)))
    }
}
