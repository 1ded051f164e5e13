//! Persistence diagram and selection exports.

use std::path::Path;

use phogad_core::homology::{Composition, PersistenceDiagram, PersistenceFeature, PhoConfig};
use phogad_core::EdgeId;
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::fmt::{float, parse_float};

pub const DIAGRAM_CSV: &str = "diagram.csv";
pub const DIAGRAM_META: &str = "diagram.json";
pub const COMPOSITION: &str = "composition.json";

/// Companion metadata of `diagram.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramMeta {
    /// Scales are pairwise distances (twice the ball radius).
    pub scale_convention: String,
    pub max_scale: f64,
    pub point_count: usize,
    pub feature_count: usize,
    pub rule: String,
    pub dims: Vec<u8>,
    pub alpha: f64,
    pub selected_edges: usize,
}

impl DiagramMeta {
    pub fn new(diag: &PersistenceDiagram, cfg: &PhoConfig, selected_edges: usize) -> Self {
        Self {
            scale_convention: "diameter".into(),
            max_scale: diag.max_scale,
            point_count: diag.point_count,
            feature_count: diag.features.len(),
            rule: cfg.rule.to_string(),
            dims: cfg.dims.clone(),
            alpha: cfg.alpha,
            selected_edges,
        }
    }
}

pub fn write_diagram_csv(diag: &PersistenceDiagram, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).at(path)?;
    w.write_record(["dimension", "birth", "death", "member_ids"]).at(path)?;
    for f in &diag.features {
        let members: Vec<String> = f.members.iter().map(|e| e.0.to_string()).collect();
        w.write_record([f.dimension.to_string(), float(f.birth), float(f.death), members.join(";")])
            .at(path)?;
    }
    w.flush().at(path)
}

/// Features of a `diagram.csv`, in file order.
pub fn read_diagram_csv(path: &Path) -> Result<Vec<PersistenceFeature>> {
    let mut r = csv::Reader::from_path(path).at(path)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.at(path)?;
        let bad = |column: &str, value: &str| Error::UnparseableCell {
            path: path.to_path_buf(),
            row: i + 1,
            column: column.into(),
            value: value.into(),
        };
        let dimension = rec[0].parse().map_err(|_| bad("dimension", &rec[0]))?;
        let birth = parse_float(&rec[1]).ok_or_else(|| bad("birth", &rec[1]))?;
        let death = parse_float(&rec[2]).ok_or_else(|| bad("death", &rec[2]))?;
        let members = rec[3]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map(EdgeId).map_err(|_| bad("member_ids", &rec[3])))
            .collect::<Result<_>>()?;
        out.push(PersistenceFeature {
            dimension,
            birth,
            death,
            members,
        });
    }
    Ok(out)
}

/// Label make-up of the selected structures next to the whole graph's.
/// The fractions are absent when the selection holds no labeled edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub selected_edges: usize,
    pub selected_anomalous: usize,
    pub selected_normal: usize,
    pub anomaly_fraction: Option<f64>,
    pub normal_fraction: Option<f64>,
    pub global_anomaly_fraction: f64,
}

impl CompositionReport {
    pub fn new(selected_edges: usize, composition: Option<Composition>, global_anomaly_fraction: f64) -> Self {
        Self {
            selected_edges,
            selected_anomalous: composition.map_or(0, |c| c.anomalous),
            selected_normal: composition.map_or(0, |c| c.normal),
            anomaly_fraction: composition.map(|c| c.anomaly_fraction),
            normal_fraction: composition.map(|c| c.normal_fraction),
            global_anomaly_fraction,
        }
    }
}
