//! Heterogeneous attributed graph store: typed nodes, optional attribute
//! vectors and genre sets, rating-weighted undirected edges, and the
//! adjacency views the aggregators consume.

mod movielens;
mod serialize;
mod split;
mod synthetic;
mod typed;

pub use movielens::{load_movielens, LoadReport};
pub use serialize::FORMAT_VERSION;
pub use split::{sample_negatives, split_edges, SplitSpec};
pub use synthetic::{
    generate_movielens_like, generate_synthetic, MovielensLikeConfig, SynthConfig,
};
pub use typed::load_typed_edges;

use crate::error::{Error, Result};
use std::collections::HashMap;

/// Discretized rating range. `level = (r - min) / step` must be an exact
/// integer for every stored rating; binary graphs use the degenerate
/// single-level scale.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl RatingScale {
    pub fn movielens() -> Self {
        RatingScale {
            min: 0.5,
            max: 5.0,
            step: 0.5,
        }
    }

    /// Single-level scale for graphs whose edges carry no weight.
    pub fn binary() -> Self {
        RatingScale {
            min: 1.0,
            max: 1.0,
            step: 0.0,
        }
    }

    pub fn is_binary(&self) -> bool {
        self.step == 0.0
    }

    pub fn level_count(&self) -> usize {
        if self.is_binary() {
            1
        } else {
            ((self.max - self.min) / self.step).round() as usize + 1
        }
    }

    /// Level index of a rating value, or `None` when it falls off-scale.
    pub fn level_of(&self, r: f64) -> Option<usize> {
        if self.is_binary() {
            return if r == self.min { Some(0) } else { None };
        }
        if r < self.min - 1e-9 || r > self.max + 1e-9 {
            return None;
        }
        let raw = (r - self.min) / self.step;
        let idx = raw.round();
        if (raw - idx).abs() > 1e-9 {
            return None;
        }
        Some(idx as usize)
    }

    pub fn value_of(&self, level: usize) -> f64 {
        self.min + self.step * level as f64
    }

    pub fn clamp(&self, r: f64) -> f64 {
        r.clamp(self.min, self.max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeData {
    pub external_id: String,
    pub node_type: u16,
    pub attrs: Option<Vec<f64>>,
    pub genres: Option<Vec<u16>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub level: u8,
    pub relation: u16,
}

/// Neighbor view of one node: all first-order neighbors plus the same-type /
/// different-type filtered subsets. The two subsets partition `all`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborView {
    pub all: Vec<usize>,
    pub same_type: Vec<usize>,
    pub diff_type: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct HetGraph {
    nodes: Vec<NodeData>,
    node_index: HashMap<String, usize>,
    type_names: Vec<String>,
    relation_names: Vec<String>,
    genre_names: Vec<String>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(usize, u8)>>,
    scale: RatingScale,
    attr_dim: Option<usize>,
}

impl HetGraph {
    /// Assemble and validate a graph. Edges must reference existing nodes,
    /// self-loops are rejected, and every attributed node must share one
    /// attribute dimension.
    pub fn from_parts(
        nodes: Vec<NodeData>,
        type_names: Vec<String>,
        relation_names: Vec<String>,
        genre_names: Vec<String>,
        edges: Vec<Edge>,
        scale: RatingScale,
    ) -> Result<Self> {
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.external_id.clone(), i).is_some() {
                return Err(Error::DuplicateNode(n.external_id.clone()));
            }
        }
        let mut attr_dim = None;
        for n in &nodes {
            if let Some(a) = &n.attrs {
                match attr_dim {
                    None => attr_dim = Some(a.len()),
                    Some(d) if d != a.len() => {
                        return Err(Error::Config(format!(
                            "attribute dimension mismatch: {} vs {} on {}",
                            d,
                            a.len(),
                            n.external_id
                        )))
                    }
                    _ => {}
                }
            }
        }
        let level_count = scale.level_count();
        for e in &edges {
            if e.a >= nodes.len() || e.b >= nodes.len() {
                return Err(Error::DanglingEdge(format!("({}, {})", e.a, e.b)));
            }
            if e.a == e.b {
                return Err(Error::Contract {
                    op: "graph",
                    details: format!("self-loop on node {}", nodes[e.a].external_id),
                });
            }
            if e.level as usize >= level_count {
                return Err(Error::Contract {
                    op: "graph",
                    details: format!("rating level {} outside scale", e.level),
                });
            }
        }
        let adj = build_adjacency(nodes.len(), &edges);
        Ok(HetGraph {
            nodes,
            node_index,
            type_names,
            relation_names,
            genre_names,
            edges,
            adj,
            scale,
            attr_dim,
        })
    }

    /// Same node universe, different edge set (used for the training split).
    pub fn with_edges(&self, edges: Vec<Edge>) -> HetGraph {
        let adj = build_adjacency(self.nodes.len(), &edges);
        HetGraph {
            nodes: self.nodes.clone(),
            node_index: self.node_index.clone(),
            type_names: self.type_names.clone(),
            relation_names: self.relation_names.clone(),
            genre_names: self.genre_names.clone(),
            edges,
            adj,
            scale: self.scale,
            attr_dim: self.attr_dim,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, v: usize) -> &NodeData {
        &self.nodes[v]
    }

    pub fn nodes(&self) -> &[NodeData] {
        &self.nodes
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn attr_dim(&self) -> Option<usize> {
        self.attr_dim
    }

    pub fn genre_names(&self) -> &[String] {
        &self.genre_names
    }

    pub fn type_names(&self) -> &[String] {
        &self.type_names
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn type_name(&self, t: u16) -> &str {
        &self.type_names[t as usize]
    }

    pub fn lookup(&self, external_id: &str) -> Option<usize> {
        self.node_index.get(external_id).copied()
    }

    pub fn require(&self, external_id: &str) -> Result<usize> {
        self.lookup(external_id)
            .ok_or_else(|| Error::UnknownNode(external_id.to_string()))
    }

    pub fn nodes_of_type(&self, t: u16) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&v| self.nodes[v].node_type == t)
            .collect()
    }

    pub fn count_of_type(&self, name: &str) -> usize {
        match self.type_names.iter().position(|t| t == name) {
            Some(t) => self.nodes.iter().filter(|n| n.node_type == t as u16).count(),
            None => 0,
        }
    }

    /// Adjacency entries `(neighbor, level)` of `v`, sorted by neighbor id.
    pub fn adjacency(&self, v: usize) -> &[(usize, u8)] {
        &self.adj[v]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let (s, t) = if self.adj[a].len() <= self.adj[b].len() {
            (a, b)
        } else {
            (b, a)
        };
        self.adj[s].iter().any(|&(n, _)| n == t)
    }

    /// `type(nodes) + type(edges) > 2`; loaders warn when an input is not
    /// heterogeneous by this measure.
    pub fn is_heterogeneous(&self) -> bool {
        self.type_names.len() + self.relation_names.len() > 2
    }

    /// N(v) with the same-type (B ∩ N) and different-type (C ∩ N) views.
    pub fn neighbor_sets(&self, v: usize) -> Result<NeighborView> {
        if v >= self.nodes.len() {
            return Err(Error::UnknownNode(format!("index {}", v)));
        }
        let vt = self.nodes[v].node_type;
        let mut all: Vec<usize> = self.adj[v].iter().map(|&(n, _)| n).collect();
        all.dedup();
        let same_type = all
            .iter()
            .copied()
            .filter(|&n| self.nodes[n].node_type == vt)
            .collect();
        let diff_type = all
            .iter()
            .copied()
            .filter(|&n| self.nodes[n].node_type != vt)
            .collect();
        Ok(NeighborView {
            all,
            same_type,
            diff_type,
        })
    }
}

fn build_adjacency(n: usize, edges: &[Edge]) -> Vec<Vec<(usize, u8)>> {
    let mut adj = vec![Vec::new(); n];
    for e in edges {
        adj[e.a].push((e.b, e.level));
        adj[e.b].push((e.a, e.level));
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}


#[cfg(test)]
mod tests {
    use super::test_fixtures::*;
    use super::*;

    #[test]
    fn scale_levels() {
        let s = RatingScale::movielens();
        assert_eq!(s.level_count(), 10);
        assert_eq!(s.level_of(0.5), Some(0));
        assert_eq!(s.level_of(4.0), Some(7));
        assert_eq!(s.level_of(5.0), Some(9));
        assert_eq!(s.level_of(4.25), None);
        assert_eq!(s.level_of(5.5), None);
        assert_eq!(s.value_of(7), 4.0);

        let b = RatingScale::binary();
        assert_eq!(b.level_count(), 1);
        assert_eq!(b.level_of(1.0), Some(0));
        assert_eq!(b.level_of(0.5), None);
    }

    #[test]
    fn neighbor_sets_bipartite_user_has_no_same_type_neighbors() {
        let g = bipartite_fixture();
        let v = g.require("user:1").unwrap();
        let nv = g.neighbor_sets(v).unwrap();
        assert!(nv.same_type.is_empty());
        assert_eq!(nv.diff_type.len(), 2);
        assert_eq!(nv.all.len(), 2);
    }

    #[test]
    fn neighbor_sets_author_fixture() {
        let g = author_paper_fixture();
        let v = g.require("a1").unwrap();
        let nv = g.neighbor_sets(v).unwrap();
        assert_eq!(nv.same_type.len(), 1); // one coauthor
        assert_eq!(nv.diff_type.len(), 1); // one paper
    }

    #[test]
    fn neighbor_sets_isolated_node() {
        let g = bipartite_fixture();
        let v = g.require("user:3").unwrap();
        let nv = g.neighbor_sets(v).unwrap();
        assert!(nv.all.is_empty() && nv.same_type.is_empty() && nv.diff_type.is_empty());
    }

    #[test]
    fn neighbor_view_partitions() {
        let g = author_paper_fixture();
        for v in 0..g.node_count() {
            let nv = g.neighbor_sets(v).unwrap();
            let mut merged = nv.same_type.clone();
            merged.extend(&nv.diff_type);
            merged.sort_unstable();
            let mut all = nv.all.clone();
            all.sort_unstable();
            assert_eq!(merged, all);
            assert!(nv.same_type.iter().all(|n| !nv.diff_type.contains(n)));
        }
    }

    #[test]
    fn self_loop_rejected() {
        let nodes = vec![
            NodeData {
                external_id: "x".into(),
                node_type: 0,
                attrs: None,
                genres: None,
            },
            NodeData {
                external_id: "y".into(),
                node_type: 1,
                attrs: None,
                genres: None,
            },
        ];
        let edges = vec![Edge { a: 0, b: 0, level: 0, relation: 0 }];
        assert!(HetGraph::from_parts(
            nodes,
            vec!["a".into(), "b".into()],
            vec!["r".into()],
            vec![],
            edges,
            RatingScale::binary(),
        )
        .is_err());
    }

    #[test]
    fn heterogeneity_measure() {
        assert!(bipartite_fixture().is_heterogeneous()); // 2 node types + 1 edge type
        assert!(author_paper_fixture().is_heterogeneous());
    }

    #[test]
    fn unknown_node_errors() {
        let g = bipartite_fixture();
        assert!(g.require("user:999").is_err());
        assert!(g.neighbor_sets(999).is_err());
    }
}
