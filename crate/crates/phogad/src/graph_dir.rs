//! On-disk form of a behavior graph: `nodes.csv`, `edges.csv` and
//! `meta.json` in one directory.

use std::fs;
use std::path::Path;

use phogad_core::graph::{build_graph, EdgeSpec};
use phogad_core::{BehaviorGraph, Label};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::fmt::{float, parse_float, read_json, write_json};

pub const NODES: &str = "nodes.csv";
pub const EDGES: &str = "edges.csv";
pub const META: &str = "meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub node_dim: usize,
    pub edge_dim: usize,
    pub node_count: usize,
    pub edge_count: usize,
    pub normal_edges: usize,
    pub anomalous_edges: usize,
    pub unlabeled_edges: usize,
    /// Anomalous share of the labeled edges.
    pub anomaly_proportion: f64,
}

impl GraphMeta {
    pub fn of(g: &BehaviorGraph) -> Self {
        let count = |l: Label| g.edges().iter().filter(|e| e.label == l).count();
        let (normal, anomalous) = (count(Label::Normal), count(Label::Anomalous));
        let labeled = normal + anomalous;
        Self {
            node_dim: g.node_dim(),
            edge_dim: g.edge_dim(),
            node_count: g.node_count(),
            edge_count: g.edge_count(),
            normal_edges: normal,
            anomalous_edges: anomalous,
            unlabeled_edges: count(Label::Unlabeled),
            anomaly_proportion: if labeled == 0 { 0.0 } else { anomalous as f64 / labeled as f64 },
        }
    }
}

pub fn write_graph(g: &BehaviorGraph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).at(dir)?;

    let path = dir.join(NODES);
    let mut w = csv::Writer::from_path(&path).at(&path)?;
    let mut header = vec!["entity_key".to_string()];
    header.extend((0..g.node_dim()).map(|i| format!("a{i}")));
    w.write_record(&header).at(&path)?;
    for n in g.nodes() {
        let mut row = vec![n.entity_key.clone()];
        row.extend(n.attr.iter().map(|&x| float(x)));
        // nodes without attributes are padded so every row has the same width
        row.resize(header.len(), String::new());
        w.write_record(&row).at(&path)?;
    }
    w.flush().at(&path)?;

    let path = dir.join(EDGES);
    let mut w = csv::Writer::from_path(&path).at(&path)?;
    let mut header = vec!["key_a".to_string(), "key_b".into(), "label".into()];
    header.extend((0..g.edge_dim()).map(|i| format!("x{i}")));
    w.write_record(&header).at(&path)?;
    for e in g.edges() {
        let mut row = vec![
            g.node(e.endpoints.0).entity_key.clone(),
            g.node(e.endpoints.1).entity_key.clone(),
            e.label.as_str().to_string(),
        ];
        row.extend(e.attr.iter().map(|&x| float(x)));
        w.write_record(&row).at(&path)?;
    }
    w.flush().at(&path)?;

    write_json(&dir.join(META), &GraphMeta::of(g))
}

fn cells(path: &Path, row: usize, header: &csv::StringRecord, rec: &csv::StringRecord, from: usize) -> Result<Vec<f64>> {
    rec.iter()
        .enumerate()
        .skip(from)
        .map(|(c, s)| {
            parse_float(s)
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::UnparseableCell {
                    path: path.to_path_buf(),
                    row,
                    column: header.get(c).unwrap_or_default().to_string(),
                    value: s.to_string(),
                })
        })
        .collect()
}

pub fn read_graph(dir: &Path) -> Result<BehaviorGraph> {
    let meta: GraphMeta = read_json(&dir.join(META))?;

    let path = dir.join(NODES);
    let mut r = csv::Reader::from_path(&path).at(&path)?;
    let header = r.headers().at(&path)?.clone();
    let mut nodes = Vec::with_capacity(meta.node_count);
    for (i, rec) in r.records().enumerate() {
        let rec = rec.at(&path)?;
        let attr = if rec.iter().skip(1).all(str::is_empty) {
            Vec::new()
        } else {
            cells(&path, i + 1, &header, &rec, 1)?
        };
        nodes.push((rec[0].to_string(), attr));
    }

    let path = dir.join(EDGES);
    let mut r = csv::Reader::from_path(&path).at(&path)?;
    let header = r.headers().at(&path)?.clone();
    if header.len() < 3 {
        return Err(Error::MissingColumn {
            path,
            column: "label".into(),
        });
    }
    let mut edges: Vec<EdgeSpec> = Vec::with_capacity(meta.edge_count);
    for (i, rec) in r.records().enumerate() {
        let rec = rec.at(&path)?;
        let label = Label::parse(&rec[2]).ok_or_else(|| Error::UnparseableCell {
            path: path.clone(),
            row: i + 1,
            column: "label".into(),
            value: rec[2].to_string(),
        })?;
        let attr = cells(&path, i + 1, &header, &rec, 3)?;
        edges.push((rec[0].to_string(), rec[1].to_string(), attr, label));
    }

    let g = build_graph(nodes, edges)?;
    let found = GraphMeta::of(&g);
    let width_ok = found.edge_count == 0 || found.edge_dim == meta.edge_dim;
    if !width_ok || (found.node_count, found.edge_count) != (meta.node_count, meta.edge_count) {
        return Err(Error::Format {
            path: dir.join(META),
            message: format!(
                "meta.json promises {} nodes, {} edges of width {}; files hold {}, {}, {}",
                meta.node_count, meta.edge_count, meta.edge_dim, found.node_count, found.edge_count, found.edge_dim
            ),
        });
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use phogad_core::graph::node_attr_from_edges;

    fn sample() -> BehaviorGraph {
        let g = build_graph(
            vec![("10.0.0.1".into(), vec![]), ("10.0.0.2".into(), vec![]), ("a,b".into(), vec![])],
            vec![
                ("10.0.0.1".into(), "10.0.0.2".into(), vec![0.1, 1.0 / 3.0], Label::Normal),
                ("10.0.0.1".into(), "10.0.0.2".into(), vec![0.7, 2f64.sqrt()], Label::Anomalous),
                ("a,b".into(), "a,b".into(), vec![1e-17, 0.0], Label::Unlabeled),
            ],
        )
        .unwrap();
        node_attr_from_edges(&g).unwrap()
    }

    #[test]
    fn round_trip_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let g = sample();
        write_graph(&g, dir.path()).unwrap();
        let back = read_graph(dir.path()).unwrap();
        assert_eq!(back, g);
        let meta: GraphMeta = read_json(&dir.path().join(META)).unwrap();
        assert_eq!((meta.normal_edges, meta.anomalous_edges, meta.unlabeled_edges), (1, 1, 1));
        assert_eq!(meta.anomaly_proportion, 0.5);
    }

    #[test]
    fn graph_without_node_attrs_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let g = build_graph(
            vec![("a".into(), vec![]), ("b".into(), vec![])],
            vec![("a".into(), "b".into(), vec![0.5], Label::Normal)],
        )
        .unwrap();
        write_graph(&g, dir.path()).unwrap();
        assert_eq!(read_graph(dir.path()).unwrap(), g);
    }

    #[test]
    fn bad_cell_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_graph(&sample(), dir.path()).unwrap();
        let path = dir.path().join(EDGES);
        let text = fs::read_to_string(&path).unwrap().replacen("1.0000000000000001e-1", "oops", 1);
        fs::write(&path, text).unwrap();
        match read_graph(dir.path()) {
            Err(Error::UnparseableCell { row, column, .. }) => assert_eq!((row, column.as_str()), (1, "x0")),
            other => panic!("{other:?}"),
        }
    }
}
