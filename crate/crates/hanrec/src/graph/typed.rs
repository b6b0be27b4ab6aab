//! Generic typed edge-list loader (author/paper-style graphs).
//!
//! Nodes file, tab-separated: `id<TAB>type[<TAB>attr1,attr2,...]`.
//! Edges file, tab-separated: `i<TAB>j<TAB>relation`.
//! Edge weights are binary (single-level scale).

use super::{Edge, HetGraph, LoadReport, NodeData, RatingScale};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

pub fn load_typed_edges(
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
) -> Result<(HetGraph, LoadReport)> {
    let nodes_path = nodes_path.as_ref();
    let edges_path = edges_path.as_ref();
    let mut report = LoadReport::default();

    let mut nodes: Vec<NodeData> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut type_names: Vec<String> = Vec::new();
    let mut type_idx: HashMap<String, u16> = HashMap::new();

    let nf = std::fs::File::open(nodes_path)?;
    for (i, line) in std::io::BufReader::new(nf).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(Error::Parse {
                path: nodes_path.display().to_string(),
                line: i + 1,
                msg: "expected id<TAB>type[<TAB>attrs]".into(),
            });
        }
        let id = fields[0].trim().to_string();
        if index.contains_key(&id) {
            return Err(Error::DuplicateNode(id));
        }
        let tname = fields[1].trim().to_string();
        let t = *type_idx.entry(tname.clone()).or_insert_with(|| {
            type_names.push(tname.clone());
            (type_names.len() - 1) as u16
        });
        let attrs = if fields.len() > 2 && !fields[2].trim().is_empty() {
            let parsed: std::result::Result<Vec<f64>, _> = fields[2]
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect();
            match parsed {
                Ok(v) => Some(v),
                Err(e) => {
                    return Err(Error::Parse {
                        path: nodes_path.display().to_string(),
                        line: i + 1,
                        msg: format!("bad attribute vector: {}", e),
                    })
                }
            }
        } else {
            None
        };
        index.insert(id.clone(), nodes.len());
        nodes.push(NodeData {
            external_id: id,
            node_type: t,
            attrs,
            genres: None,
        });
    }

    let mut relation_names: Vec<String> = Vec::new();
    let mut relation_idx: HashMap<String, u16> = HashMap::new();
    let mut edges = Vec::new();
    let ef = std::fs::File::open(edges_path)?;
    for (i, line) in std::io::BufReader::new(ef).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(Error::Parse {
                path: edges_path.display().to_string(),
                line: i + 1,
                msg: "expected i<TAB>j<TAB>relation".into(),
            });
        }
        let a = *index
            .get(fields[0].trim())
            .ok_or_else(|| Error::DanglingEdge(fields[0].trim().to_string()))?;
        let b = *index
            .get(fields[1].trim())
            .ok_or_else(|| Error::DanglingEdge(fields[1].trim().to_string()))?;
        if a == b {
            report.rejected.push(format!(
                "{}:{}: self-loop on {}",
                edges_path.display(),
                i + 1,
                fields[0].trim()
            ));
            continue;
        }
        let rname = fields[2].trim().to_string();
        let r = *relation_idx.entry(rname.clone()).or_insert_with(|| {
            relation_names.push(rname.clone());
            (relation_names.len() - 1) as u16
        });
        edges.push(Edge {
            a,
            b,
            level: 0,
            relation: r,
        });
    }

    let graph = HetGraph::from_parts(
        nodes,
        type_names,
        relation_names,
        vec![],
        edges,
        RatingScale::binary(),
    )?;
    if !graph.is_heterogeneous() {
        report
            .warnings
            .push("input is not heterogeneous (type(nodes) + type(edges) <= 2)".into());
        log::warn!("typed edge list is not heterogeneous");
    }
    Ok((graph, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &std::path::Path, name: &str, contents: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    const NODES: &str = "a1\tauthor\t0.1,0.9\na2\tauthor\t0.8,0.2\np1\tpaper\t0.5,0.5\np2\tpaper\t0.3,0.7\n";

    #[test]
    fn four_node_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(dir.path(), "nodes.tsv", NODES);
        let edges = write_file(
            dir.path(),
            "edges.tsv",
            "a1\ta2\tcoauthor\np1\tp2\tcitation\na1\tp1\twrites\na2\tp2\twrites\n",
        );
        let (g, _) = load_typed_edges(&nodes, &edges).unwrap();
        assert_eq!(g.type_names(), &["author".to_string(), "paper".to_string()]);
        assert_eq!(g.edge_count(), 4);
        assert!(g.scale().is_binary());
        assert_eq!(g.attr_dim(), Some(2));
    }

    #[test]
    fn dangling_endpoint_errors() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(dir.path(), "nodes.tsv", NODES);
        let edges = write_file(dir.path(), "edges.tsv", "a1\tghost\twrites\n");
        assert!(matches!(
            load_typed_edges(&nodes, &edges),
            Err(Error::DanglingEdge(_))
        ));
    }

    #[test]
    fn duplicate_node_id_errors() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(dir.path(), "nodes.tsv", "a1\tauthor\na1\tauthor\n");
        let edges = write_file(dir.path(), "edges.tsv", "");
        assert!(matches!(
            load_typed_edges(&nodes, &edges),
            Err(Error::DuplicateNode(_))
        ));
    }

    #[test]
    fn self_loop_rows_rejected_with_diagnostic() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(dir.path(), "nodes.tsv", NODES);
        let edges = write_file(dir.path(), "edges.tsv", "a1\ta1\tcoauthor\na1\tp1\twrites\n");
        let (g, report) = load_typed_edges(&nodes, &edges).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(report.rejected.len(), 1);
    }

    #[test]
    fn mixed_attribute_dims_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let nodes = write_file(dir.path(), "nodes.tsv", "a1\tauthor\t0.1\na2\tauthor\t0.1,0.2\n");
        let edges = write_file(dir.path(), "edges.tsv", "");
        assert!(load_typed_edges(&nodes, &edges).is_err());
    }
}
