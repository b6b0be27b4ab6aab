//! Canonical graph document: a versioned JSON file with nodes, edges, and
//! the scale descriptor. Reloading yields an isomorphic graph (same external
//! ids, types, attributes, genre sets, edges, and rating levels).

use super::{Edge, HetGraph, NodeData, RatingScale};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: String,
    #[serde(rename = "type")]
    node_type: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    attrs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    genres: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    a: String,
    b: String,
    rating: f64,
    relation: String,
}

#[derive(Serialize, Deserialize)]
struct GraphDoc {
    format_version: u32,
    scale: RatingScale,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

impl HetGraph {
    pub fn to_canonical_json(&self) -> Result<String> {
        let doc = GraphDoc {
            format_version: FORMAT_VERSION,
            scale: self.scale,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDoc {
                    id: n.external_id.clone(),
                    node_type: self.type_name(n.node_type).to_string(),
                    attrs: n.attrs.clone(),
                    genres: n.genres.as_ref().map(|gs| {
                        gs.iter()
                            .map(|&g| self.genre_names[g as usize].clone())
                            .collect()
                    }),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeDoc {
                    a: self.nodes[e.a].external_id.clone(),
                    b: self.nodes[e.b].external_id.clone(),
                    rating: self.scale.value_of(e.level as usize),
                    relation: self.relation_names[e.relation as usize].clone(),
                })
                .collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_canonical_json(text: &str) -> Result<HetGraph> {
        let doc: GraphDoc = serde_json::from_str(text)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported graph format_version {}",
                doc.format_version
            )));
        }
        let mut type_names: Vec<String> = Vec::new();
        let mut genre_names: Vec<String> = Vec::new();
        let mut relation_names: Vec<String> = Vec::new();
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for nd in &doc.nodes {
            let t = intern(&mut type_names, &nd.node_type);
            let genres = nd.genres.as_ref().map(|gs| {
                gs.iter()
                    .map(|g| intern(&mut genre_names, g))
                    .collect::<Vec<u16>>()
            });
            nodes.push(NodeData {
                external_id: nd.id.clone(),
                node_type: t,
                attrs: nd.attrs.clone(),
                genres,
            });
        }
        let index: std::collections::HashMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.external_id.as_str(), i))
            .collect();
        let mut edges = Vec::with_capacity(doc.edges.len());
        for ed in &doc.edges {
            let a = *index
                .get(ed.a.as_str())
                .ok_or_else(|| Error::DanglingEdge(ed.a.clone()))?;
            let b = *index
                .get(ed.b.as_str())
                .ok_or_else(|| Error::DanglingEdge(ed.b.clone()))?;
            let level = doc.scale.level_of(ed.rating).ok_or_else(|| Error::Contract {
                op: "graph load",
                details: format!("rating {} off scale", ed.rating),
            })? as u8;
            let relation = intern(&mut relation_names, &ed.relation);
            edges.push(Edge {
                a,
                b,
                level,
                relation,
            });
        }
        HetGraph::from_parts(nodes, type_names, relation_names, genre_names, edges, doc.scale)
    }

    pub fn save_canonical(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_canonical_json()?)?;
        Ok(())
    }

    pub fn load_canonical(path: impl AsRef<Path>) -> Result<HetGraph> {
        let text = std::fs::read_to_string(path)?;
        HetGraph::from_canonical_json(&text)
    }

    /// Hex digest of the canonical document; keys the potential-neighbor cache.
    pub fn content_hash(&self) -> Result<String> {
        let json = self.to_canonical_json()?;
        let mut hasher = Sha256::new();
        hasher.update(json.as_bytes());
        Ok(hex_string(&hasher.finalize()))
    }
}

fn intern(names: &mut Vec<String>, name: &str) -> u16 {
    match names.iter().position(|n| n == name) {
        Some(i) => i as u16,
        None => {
            names.push(name.to_string());
            (names.len() - 1) as u16
        }
    }
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{:02x}", b)).collect()
}
