//! Potential-neighbor discovery: enumerate two-hop walks over the training
//! graph, group them per (source, target) pair, and subsample deterministically
//! when caps are set. The discovered set is frozen before training begins.

use crate::error::Result;
use crate::graph::HetGraph;
use crate::rng::{entity_rng, Stream};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

/// Which inputs the connector MLP consumes for a two-hop path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectVariant {
    /// Intermediate feature ⊕ first rating ⊕ target feature ⊕ second rating (4d).
    Full,
    /// Features only (2d).
    FeatureBased,
    /// Rating embeddings only (2d).
    RelationBased,
}

impl ConnectVariant {
    pub fn input_extent(self, d: usize) -> usize {
        match self {
            ConnectVariant::Full => 4 * d,
            ConnectVariant::FeatureBased | ConnectVariant::RelationBased => 2 * d,
        }
    }
}

/// One two-hop walk source → via → target with the rating levels of both hops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PotentialPath {
    pub source: usize,
    pub via: usize,
    pub target: usize,
    pub level_first: u8,
    pub level_second: u8,
}

/// All witnessed paths toward one potential neighbor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetPaths {
    pub target: usize,
    /// (via, level source→via, level via→target), in deterministic order.
    pub paths: Vec<(usize, u8, u8)>,
}

/// Subsampling limits: at most `max_targets` potential neighbors per source
/// and `max_paths_per_target` witnessing paths each. `None` disables a cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectorCaps {
    pub max_targets: Option<usize>,
    pub max_paths_per_target: Option<usize>,
}

impl Default for ConnectorCaps {
    fn default() -> Self {
        ConnectorCaps {
            max_targets: Some(32),
            max_paths_per_target: Some(8),
        }
    }
}

impl ConnectorCaps {
    pub fn unlimited() -> Self {
        ConnectorCaps {
            max_targets: None,
            max_paths_per_target: None,
        }
    }
}

/// Frozen potential-neighbor sets for every node, indexed by source.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PotentialNeighbors {
    pub per_source: Vec<Vec<TargetPaths>>,
}

impl PotentialNeighbors {
    pub fn empty(node_count: usize) -> Self {
        PotentialNeighbors {
            per_source: vec![Vec::new(); node_count],
        }
    }

    pub fn targets(&self, v: usize) -> &[TargetPaths] {
        &self.per_source[v]
    }

    pub fn total_pairs(&self) -> usize {
        self.per_source.iter().map(|t| t.len()).sum()
    }
}

/// Discover the potential neighbors of one source node: every `v → k → j`
/// walk over training edges with `j ≠ v` and `(v, j)` not an edge, grouped by
/// target and capped by seeded uniform subsampling. Isolated nodes yield an
/// empty set.
pub fn discover_potential(
    g: &HetGraph,
    v: usize,
    caps: ConnectorCaps,
    seed: u64,
) -> Vec<TargetPaths> {
    let first_order: HashSet<usize> = g.adjacency(v).iter().map(|&(n, _)| n).collect();
    // walks grouped per target, in adjacency (sorted) order
    let mut walks: Vec<(usize, (usize, u8, u8))> = Vec::new();
    for &(k, lv1) in g.adjacency(v) {
        for &(j, lv2) in g.adjacency(k) {
            if j == v || first_order.contains(&j) {
                continue;
            }
            walks.push((j, (k, lv1, lv2)));
        }
    }
    walks.sort_by_key(|&(j, (k, _, _))| (j, k));

    let mut grouped: Vec<TargetPaths> = Vec::new();
    for (j, path) in walks {
        match grouped.last_mut() {
            Some(tp) if tp.target == j => tp.paths.push(path),
            _ => grouped.push(TargetPaths {
                target: j,
                paths: vec![path],
            }),
        }
    }

    let mut rng = entity_rng(seed, Stream::Discovery, v as u64);
    if let Some(m) = caps.max_targets {
        if grouped.len() > m {
            let mut keep: Vec<usize> = sample(&mut rng, grouped.len(), m).into_vec();
            keep.sort_unstable();
            grouped = keep.into_iter().map(|i| grouped[i].clone()).collect();
        }
    }
    if let Some(k) = caps.max_paths_per_target {
        for tp in &mut grouped {
            if tp.paths.len() > k {
                let mut keep: Vec<usize> = sample(&mut rng, tp.paths.len(), k).into_vec();
                keep.sort_unstable();
                tp.paths = keep.into_iter().map(|i| tp.paths[i]).collect();
            }
        }
    }
    grouped
}

/// Discovery over every node. Read-only on the graph; each source draws from
/// its own seed stream, so the result is independent of traversal order.
pub fn discover_all(g: &HetGraph, caps: ConnectorCaps, seed: u64) -> PotentialNeighbors {
    PotentialNeighbors {
        per_source: (0..g.node_count())
            .map(|v| discover_potential(g, v, caps, seed))
            .collect(),
    }
}

#[derive(Serialize, Deserialize)]
struct CacheDoc {
    graph_hash: String,
    seed: u64,
    caps: ConnectorCaps,
    sets: PotentialNeighbors,
}

/// Write the discovered sets keyed by graph content hash + seed + caps.
pub fn save_cache(
    path: impl AsRef<Path>,
    g: &HetGraph,
    seed: u64,
    caps: ConnectorCaps,
    sets: &PotentialNeighbors,
) -> Result<()> {
    let doc = CacheDoc {
        graph_hash: g.content_hash()?,
        seed,
        caps,
        sets: sets.clone(),
    };
    std::fs::write(path, serde_json::to_string(&doc)?)?;
    Ok(())
}

/// Load a cache if it exists and every key matches; a stale or missing cache
/// reads as `None`.
pub fn load_cache(
    path: impl AsRef<Path>,
    g: &HetGraph,
    seed: u64,
    caps: ConnectorCaps,
) -> Result<Option<PotentialNeighbors>> {
    let path = path.as_ref();
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path)?;
    let doc: CacheDoc = match serde_json::from_str(&text) {
        Ok(doc) => doc,
        Err(_) => return Ok(None),
    };
    if doc.graph_hash != g.content_hash()? || doc.seed != seed || doc.caps != caps {
        return Ok(None);
    }
    Ok(Some(doc.sets))
}

/// Discovery with an optional cache file in front of it.
pub fn load_or_discover(
    g: &HetGraph,
    caps: ConnectorCaps,
    seed: u64,
    cache_path: Option<&Path>,
) -> Result<PotentialNeighbors> {
    if let Some(path) = cache_path {
        if let Some(sets) = load_cache(path, g, seed, caps)? {
            return Ok(sets);
        }
    }
    let sets = discover_all(g, caps, seed);
    if let Some(path) = cache_path {
        save_cache(path, g, seed, caps, &sets)?;
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::test_fixtures::bipartite_fixture;
    use crate::graph::{Edge, HetGraph, NodeData, RatingScale};

    /// Brute-force two-hop enumeration used as the discovery oracle.
    fn brute_force(g: &HetGraph, v: usize) -> Vec<PotentialPath> {
        let mut out = Vec::new();
        for &(k, lv1) in g.adjacency(v) {
            for &(j, lv2) in g.adjacency(k) {
                if j != v && !g.has_edge(v, j) {
                    out.push(PotentialPath {
                        source: v,
                        via: k,
                        target: j,
                        level_first: lv1,
                        level_second: lv2,
                    });
                }
            }
        }
        out.sort_by_key(|p| (p.target, p.via));
        out
    }

    fn six_node_fixture() -> HetGraph {
        // users u0..u2, movies m0..m2 arranged so several 2-hop walks exist
        let user = |i: usize| NodeData {
            external_id: format!("u{}", i),
            node_type: 0,
            attrs: None,
            genres: None,
        };
        let movie = |i: usize| NodeData {
            external_id: format!("m{}", i),
            node_type: 1,
            attrs: None,
            genres: Some(vec![]),
        };
        let nodes = vec![user(0), user(1), user(2), movie(0), movie(1), movie(2)];
        let s = RatingScale::movielens();
        let lv = |r: f64| s.level_of(r).unwrap() as u8;
        let edges = vec![
            Edge { a: 0, b: 3, level: lv(4.0), relation: 0 },
            Edge { a: 1, b: 3, level: lv(4.0), relation: 0 },
            Edge { a: 1, b: 4, level: lv(2.0), relation: 0 },
            Edge { a: 2, b: 4, level: lv(5.0), relation: 0 },
            Edge { a: 2, b: 5, level: lv(1.0), relation: 0 },
        ];
        HetGraph::from_parts(
            nodes,
            vec!["user".into(), "movie".into()],
            vec!["rating".into()],
            vec![],
            edges,
            s,
        )
        .unwrap()
    }

    #[test]
    fn shared_movie_connects_users() {
        // two users who rated the same movie become potential neighbors
        let g = bipartite_fixture();
        let u1 = g.require("user:1").unwrap();
        let u2 = g.require("user:2").unwrap();
        let m1 = g.require("movie:1").unwrap();
        let sets = discover_potential(&g, u1, ConnectorCaps::unlimited(), 0);
        let entry = sets.iter().find(|t| t.target == u2).expect("u2 in N'(u1)");
        assert!(entry.paths.iter().any(|&(via, _, _)| via == m1));
    }

    #[test]
    fn node_without_two_hop_walks_has_empty_set() {
        let g = bipartite_fixture();
        let isolated = g.require("user:3").unwrap();
        assert!(discover_potential(&g, isolated, ConnectorCaps::unlimited(), 0).is_empty());
    }

    #[test]
    fn uncapped_discovery_equals_brute_force() {
        let g = six_node_fixture();
        for v in 0..g.node_count() {
            let got: Vec<PotentialPath> = discover_potential(&g, v, ConnectorCaps::unlimited(), 9)
                .iter()
                .flat_map(|tp| {
                    tp.paths.iter().map(move |&(via, l1, l2)| PotentialPath {
                        source: v,
                        via,
                        target: tp.target,
                        level_first: l1,
                        level_second: l2,
                    })
                })
                .collect();
            assert_eq!(got, brute_force(&g, v), "node {}", v);
        }
        // the fixture really exercises multiple walks
        let total: usize = (0..g.node_count())
            .map(|v| brute_force(&g, v).len())
            .sum();
        assert!(total >= 7, "fixture has {} walks", total);
    }

    #[test]
    fn soundness_and_exclusion() {
        let g = crate::graph::generate_synthetic(&crate::graph::SynthConfig {
            communities: 2,
            nodes_per_type: 25,
            intra: 0.25,
            inter: 0.05,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let sets = discover_all(&g, ConnectorCaps::default(), 4);
        for (v, targets) in sets.per_source.iter().enumerate() {
            for tp in targets {
                assert!(tp.target != v);
                assert!(!g.has_edge(v, tp.target), "target must not be first-order");
                assert!(!tp.paths.is_empty());
                for &(k, l1, l2) in &tp.paths {
                    assert!(g.adjacency(v).iter().any(|&(n, l)| n == k && l == l1));
                    assert!(g.adjacency(k).iter().any(|&(n, l)| n == tp.target && l == l2));
                }
            }
        }
    }

    #[test]
    fn caps_are_respected_and_deterministic() {
        let g = crate::graph::generate_synthetic(&crate::graph::SynthConfig {
            communities: 2,
            nodes_per_type: 40,
            intra: 0.4,
            inter: 0.1,
            seed: 8,
            ..Default::default()
        })
        .unwrap();
        let caps = ConnectorCaps {
            max_targets: Some(5),
            max_paths_per_target: Some(2),
        };
        let s1 = discover_all(&g, caps, 77);
        let s2 = discover_all(&g, caps, 77);
        assert_eq!(s1, s2);
        let uncapped = discover_all(&g, ConnectorCaps::unlimited(), 77);
        for (v, targets) in s1.per_source.iter().enumerate() {
            assert!(targets.len() <= 5);
            for tp in targets {
                assert!(tp.paths.len() <= 2);
                // capped selections are a subset of the uncapped set
                let full = uncapped.per_source[v]
                    .iter()
                    .find(|t| t.target == tp.target)
                    .expect("capped target exists uncapped");
                for p in &tp.paths {
                    assert!(full.paths.contains(p));
                }
            }
        }
        let s3 = discover_all(&g, caps, 78);
        assert_ne!(s1, s3, "different seed should subsample differently");
    }

    #[test]
    fn cache_roundtrip_and_invalidation() {
        let g = six_node_fixture();
        let caps = ConnectorCaps::default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nprime.json");
        let sets = load_or_discover(&g, caps, 5, Some(&path)).unwrap();
        assert!(path.exists());
        let cached = load_cache(&path, &g, 5, caps).unwrap();
        assert_eq!(cached.as_ref(), Some(&sets));
        // different seed, caps, or graph -> stale
        assert!(load_cache(&path, &g, 6, caps).unwrap().is_none());
        assert!(load_cache(
            &path,
            &g,
            5,
            ConnectorCaps {
                max_targets: Some(1),
                max_paths_per_target: Some(1)
            }
        )
        .unwrap()
        .is_none());
        let g2 = g.with_edges(g.edges()[..3].to_vec());
        assert!(load_cache(&path, &g2, 5, caps).unwrap().is_none());
    }
}
