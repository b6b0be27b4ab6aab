//! Train/test edge splitting and negative sampling.

use super::{Edge, HetGraph};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    /// Fraction of edges kept for training, in (0, 1].
    pub train_ratio: f64,
    pub seed: u64,
}

/// Seeded uniform shuffle; `|train| = floor(ratio * |E|)`. `ratio = 1`
/// leaves the test side empty (callers warn).
pub fn split_edges(g: &HetGraph, spec: SplitSpec) -> Result<(Vec<Edge>, Vec<Edge>)> {
    if !(spec.train_ratio > 0.0 && spec.train_ratio <= 1.0) {
        return Err(Error::Config(format!(
            "train ratio {} outside (0, 1]",
            spec.train_ratio
        )));
    }
    let mut idx: Vec<usize> = (0..g.edge_count()).collect();
    let mut rng = stream_rng(spec.seed, Stream::Split);
    idx.shuffle(&mut rng);
    let n_train = (spec.train_ratio * g.edge_count() as f64).floor() as usize;
    let train = idx[..n_train].iter().map(|&i| g.edges()[i]).collect();
    let test = idx[n_train..].iter().map(|&i| g.edges()[i]).collect();
    Ok((train, test))
}

fn pair_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// `n` distinct node pairs with no edge in `g`, optionally constrained to a
/// `(type_a, type_b)` endpoint combination. Errs when fewer than `n`
/// disconnected pairs exist.
pub fn sample_negatives(
    g: &HetGraph,
    n: usize,
    type_pair: Option<(&str, &str)>,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let (pool_a, pool_b): (Vec<usize>, Vec<usize>) = match type_pair {
        Some((ta, tb)) => {
            let ia = g
                .type_names()
                .iter()
                .position(|t| t == ta)
                .ok_or_else(|| Error::Config(format!("unknown node type {}", ta)))?;
            let ib = g
                .type_names()
                .iter()
                .position(|t| t == tb)
                .ok_or_else(|| Error::Config(format!("unknown node type {}", tb)))?;
            (g.nodes_of_type(ia as u16), g.nodes_of_type(ib as u16))
        }
        None => {
            let all: Vec<usize> = (0..g.node_count()).collect();
            (all.clone(), all)
        }
    };
    if pool_a.is_empty() || pool_b.is_empty() {
        return Err(Error::InfeasibleNegatives("empty endpoint pool".into()));
    }

    let edge_set: HashSet<(usize, usize)> = g
        .edges()
        .iter()
        .map(|e| pair_key(e.a, e.b))
        .collect();

    // Feasibility: count candidate pairs for the requested constraint.
    let same_pool = type_pair.map(|(a, b)| a == b).unwrap_or(true);
    let possible: usize = if same_pool {
        pool_a.len() * (pool_a.len().saturating_sub(1)) / 2
    } else {
        pool_a.len() * pool_b.len()
    };
    let matching_edges = g
        .edges()
        .iter()
        .filter(|e| match type_pair {
            None => true,
            Some((ta, tb)) => {
                let (na, nb) = (g.type_name(g.node(e.a).node_type), g.type_name(g.node(e.b).node_type));
                (na == ta && nb == tb) || (na == tb && nb == ta)
            }
        })
        .count();
    let free = possible.saturating_sub(matching_edges);
    if n > free {
        return Err(Error::InfeasibleNegatives(format!(
            "requested {} pairs but only {} disconnected pairs exist",
            n, free
        )));
    }

    let mut rng = stream_rng(seed, Stream::TestNegatives);
    let mut chosen: HashSet<(usize, usize)> = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);

    if free <= 4 * n || possible <= 1 << 20 {
        // Dense regime: enumerate every free pair and take a seeded sample.
        let mut candidates = Vec::with_capacity(free);
        if same_pool {
            for (i, &a) in pool_a.iter().enumerate() {
                for &b in pool_a.iter().skip(i + 1) {
                    if !edge_set.contains(&pair_key(a, b)) {
                        candidates.push(pair_key(a, b));
                    }
                }
            }
        } else {
            for &a in &pool_a {
                for &b in &pool_b {
                    if a != b && !edge_set.contains(&pair_key(a, b)) {
                        candidates.push((a, b));
                    }
                }
            }
        }
        candidates.shuffle(&mut rng);
        candidates.truncate(n);
        return Ok(candidates);
    }

    while out.len() < n {
        let a = pool_a[rng.gen_range(0..pool_a.len())];
        let b = pool_b[rng.gen_range(0..pool_b.len())];
        if a == b {
            continue;
        }
        let key = pair_key(a, b);
        if edge_set.contains(&key) || !chosen.insert(key) {
            continue;
        }
        out.push((a, b));
    }
    Ok(out)
}
