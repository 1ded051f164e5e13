//! Persistent homology over edge attributes.
//!
//! Every edge contributes its attribute vector as a point. A Vietoris–Rips
//! filtration over those points is reduced to a persistence diagram in
//! dimensions 0 and 1, the unusually persistent features are selected, and
//! the attributes of the edges they cover are pulled toward the mean of that
//! set.
//!
//! Scales follow the diameter convention throughout: a pair of points enters
//! the filtration at their distance `t`, which corresponds to closed balls of
//! radius `t / 2`.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::graph::{BehaviorGraph, EdgeId, Label};
use crate::linalg::euclidean;
use crate::rng;

mod filtration;
mod rips;
mod union_find;

pub use filtration::{build_filtration, compute_persistence, Filtration, Simplex};
pub use rips::rips_persistence;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Edge attributes as points in Euclidean space, tagged with their edge.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    ids: Vec<EdgeId>,
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(points: Vec<(EdgeId, Vec<f64>)>) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.1.len());
        let mut ids = Vec::with_capacity(points.len());
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (id, p) in points {
            if p.len() != dim {
                return Err(Error::InconsistentDimension {
                    what: "point",
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "non-finite attribute on edge {}",
                    id.0
                )));
            }
            ids.push(id);
            coords.extend(p);
        }
        Ok(Self { ids, dim, coords })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[EdgeId] {
        &self.ids
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    /// Same cloud with every coordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            ids: self.ids.clone(),
            dim: self.dim,
            coords: self.coords.iter().map(|x| x * c).collect(),
        }
    }

    /// Full `n × n` distance matrix, row-major.
    pub(crate) fn distance_matrix(&self) -> Vec<f64> {
        let n = self.len();
        let mut d = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = self.distance(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        d
    }

    pub(crate) fn members_of(&self, vertices: impl IntoIterator<Item = u32>) -> Vec<EdgeId> {
        let mut out: Vec<EdgeId> = vertices
            .into_iter()
            .map(|v| self.ids[v as usize])
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// How persistent features are chosen from a diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum PersistenceRule {
    /// Persistence strictly above mean + population standard deviation.
    MeanPlusStd,
    /// The `⌈f · count⌉` most persistent features.
    TopFraction(f64),
}

impl PersistenceRule {
    /// Parses `mean_plus_std` or `top_fraction:<f>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "mean_plus_std" {
            return Ok(Self::MeanPlusStd);
        }
        if let Some(f) = s.strip_prefix("top_fraction:") {
            let f: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(alloc::format!("bad fraction in `{s}`")))?;
            if f > 0.0 && f <= 1.0 {
                return Ok(Self::TopFraction(f));
            }
        }
        Err(Error::InvalidConfig(alloc::format!(
            "unknown persistence rule `{s}`"
        )))
    }
}

impl fmt::Display for PersistenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MeanPlusStd => f.write_str("mean_plus_std"),
            Self::TopFraction(x) => write!(f, "top_fraction:{x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct PhoConfig {
    /// Weight kept on an edge's own attribute during optimization.
    pub alpha: f64,
    pub max_points: usize,
    /// Quantile of pairwise distances used as the filtration cutoff.
    pub max_scale_quantile: f64,
    pub rule: PersistenceRule,
    /// Homology dimensions taking part in selection.
    pub dims: Vec<u8>,
    pub seed: u64,
}

impl Default for PhoConfig {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            max_points: 2000,
            max_scale_quantile: 0.5,
            rule: PersistenceRule::MeanPlusStd,
            dims: alloc::vec![0, 1],
            seed: 0,
        }
    }
}

impl PhoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(alloc::format!("alpha {} outside [0, 1]", self.alpha));
        }
        if self.max_points < 2 {
            return bad(alloc::format!("max_points {} < 2", self.max_points));
        }
        if !(self.max_scale_quantile > 0.0 && self.max_scale_quantile <= 1.0) {
            return bad(alloc::format!(
                "max_scale_quantile {} outside (0, 1]",
                self.max_scale_quantile
            ));
        }
        if let PersistenceRule::TopFraction(f) = self.rule {
            if !(f > 0.0 && f <= 1.0) {
                return bad(alloc::format!("top fraction {f} outside (0, 1]"));
            }
        }
        if self.dims.iter().any(|&d| d > 1) {
            return bad(String::from("only dimensions 0 and 1 are computed"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PersistenceFeature {
    pub dimension: u8,
    pub birth: f64,
    /// `f64::INFINITY` when the feature survives to the cutoff scale.
    pub death: f64,
    /// Edges whose points make up the feature, sorted.
    pub members: Vec<EdgeId>,
}

impl PersistenceFeature {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_finite(&self) -> bool {
        self.death.is_finite()
    }

    pub(crate) fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.dimension
            .cmp(&other.dimension)
            .then(self.birth.total_cmp(&other.birth))
            .then(self.death.total_cmp(&other.death))
            .then_with(|| self.members.cmp(&other.members))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PersistenceDiagram {
    /// Features with positive persistence, sorted by
    /// `(dimension, birth, death, members)`.
    pub features: Vec<PersistenceFeature>,
    pub max_scale: f64,
    pub point_count: usize,
}

impl PersistenceDiagram {
    pub(crate) fn from_features(
        mut features: Vec<PersistenceFeature>,
        max_scale: f64,
        point_count: usize,
    ) -> Self {
        features.sort_by(PersistenceFeature::canonical_cmp);
        Self {
            features,
            max_scale,
            point_count,
        }
    }

    pub fn finite(&self) -> impl Iterator<Item = &PersistenceFeature> {
        self.features.iter().filter(|f| f.is_finite())
    }

    pub fn in_dimension(&self, dim: u8) -> impl Iterator<Item = &PersistenceFeature> {
        self.features.iter().filter(move |f| f.dimension == dim)
    }
}

/// Collects one point per edge; above `cfg.max_points` edges a seeded
/// uniform subset is taken (kept in edge-id order).
pub fn build_point_cloud(g: &BehaviorGraph, cfg: &PhoConfig) -> Result<PointCloud> {
    let m = g.edge_count();
    if m < 2 {
        return Err(Error::TooFewEdges(m));
    }
    let chosen: Vec<usize> = if m > cfg.max_points {
        let mut rng = rng::stream(cfg.seed, rng::purpose::POINT_SAMPLE);
        let mut picked = index::sample(&mut rng, m, cfg.max_points).into_vec();
        picked.sort_unstable();
        picked
    } else {
        (0..m).collect()
    };
    PointCloud::new(
        chosen
            .into_iter()
            .map(|i| {
                let e = &g.edges()[i];
                (e.id, e.attr.clone())
            })
            .collect(),
    )
}

/// Nearest-rank `q`-quantile of all pairwise distances.
pub fn pairwise_quantile(pc: &PointCloud, q: f64) -> f64 {
    let n = pc.len();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d.push(pc.distance(i, j));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    let rank = (libm::ceil(q * d.len() as f64) as usize).clamp(1, d.len()) - 1;
    let (_, v, _) = d.select_nth_unstable_by(rank, f64::total_cmp);
    *v
}

/// Default cutoff for a cloud: the configured distance quantile, nudged up
/// to a positive value when the quantile is zero (many duplicate points).
pub fn default_max_scale(pc: &PointCloud, cfg: &PhoConfig) -> f64 {
    let q = pairwise_quantile(pc, cfg.max_scale_quantile);
    if q > 0.0 {
        q
    } else {
        pairwise_quantile(pc, 1.0).max(f64::MIN_POSITIVE)
    }
}

/// Union of the members of the selected persistent features.
///
/// Only finite features in `cfg.dims` are considered; infinite ones are
/// excluded from both the statistic and the selection.
pub fn select_persistent(diag: &PersistenceDiagram, cfg: &PhoConfig) -> BTreeSet<EdgeId> {
    let candidates: Vec<&PersistenceFeature> = diag
        .finite()
        .filter(|f| cfg.dims.contains(&f.dimension))
        .collect();
    let mut selected = BTreeSet::new();
    if candidates.is_empty() {
        return selected;
    }
    let chosen: Vec<&PersistenceFeature> = match cfg.rule {
        PersistenceRule::MeanPlusStd => {
            let n = candidates.len() as f64;
            let mean = candidates.iter().map(|f| f.persistence()).sum::<f64>() / n;
            let var = candidates
                .iter()
                .map(|f| {
                    let d = f.persistence() - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            let threshold = mean + libm::sqrt(var);
            candidates
                .into_iter()
                .filter(|f| f.persistence() > threshold)
                .collect()
        }
        PersistenceRule::TopFraction(frac) => {
            let take = libm::ceil(frac * candidates.len() as f64) as usize;
            let mut ranked = candidates;
            ranked.sort_by(|a, b| {
                b.persistence()
                    .total_cmp(&a.persistence())
                    .then_with(|| a.canonical_cmp(b))
            });
            ranked.truncate(take);
            ranked
        }
    };
    for f in chosen {
        selected.extend(f.members.iter().copied());
    }
    selected
}

/// Moves every selected edge's attribute toward the mean `m` of the selected
/// set: `attr' = alpha * attr + (1 - alpha) * m`. Other edges are untouched.
pub fn optimize_attributes(
    g: &BehaviorGraph,
    vr_edges: &BTreeSet<EdgeId>,
    alpha: f64,
) -> Result<BehaviorGraph> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig(alloc::format!(
            "alpha {alpha} outside [0, 1]"
        )));
    }
    if vr_edges.is_empty() || alpha == 1.0 {
        return Ok(g.clone());
    }
    let dim = g.edge_dim();
    let mut mean = alloc::vec![0.0; dim];
    for e in vr_edges {
        for (m, x) in mean.iter_mut().zip(&g.edge(*e).attr) {
            *m += x;
        }
    }
    let inv = 1.0 / vr_edges.len() as f64;
    for m in &mut mean {
        *m *= inv;
    }
    let attrs = g
        .edges()
        .iter()
        .map(|e| {
            if vr_edges.contains(&e.id) {
                e.attr
                    .iter()
                    .zip(&mean)
                    .map(|(x, m)| alpha * x + (1.0 - alpha) * m)
                    .collect()
            } else {
                e.attr.clone()
            }
        })
        .collect();
    g.with_edge_attrs(attrs)
}

/// Label make-up of the selected edge set (labeled edges only).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Composition {
    pub anomaly_fraction: f64,
    pub normal_fraction: f64,
    pub anomalous: usize,
    pub normal: usize,
}

pub fn structure_composition(vr_edges: &BTreeSet<EdgeId>, g: &BehaviorGraph) -> Result<Composition> {
    let (mut anomalous, mut normal) = (0usize, 0usize);
    for e in vr_edges {
        match g.edge(*e).label {
            Label::Anomalous => anomalous += 1,
            Label::Normal => normal += 1,
            Label::Unlabeled => {}
        }
    }
    let total = anomalous + normal;
    if total == 0 {
        return Err(Error::EmptySelection);
    }
    Ok(Composition {
        anomaly_fraction: anomalous as f64 / total as f64,
        normal_fraction: normal as f64 / total as f64,
        anomalous,
        normal,
    })
}

/// Everything produced by the homology stage for one graph.
#[derive(Debug, Clone)]
pub struct PhOutcome {
    pub diagram: PersistenceDiagram,
    pub selected: BTreeSet<EdgeId>,
    pub optimized: BehaviorGraph,
}

/// Point cloud → diagram → selection → attribute optimization.
pub fn persistent_homology_optimize(g: &BehaviorGraph, cfg: &PhoConfig) -> Result<PhOutcome> {
    cfg.validate()?;
    let pc = build_point_cloud(g, cfg)?;
    let max_scale = default_max_scale(&pc, cfg);
    let diagram = rips_persistence(&pc, max_scale);
    let selected = select_persistent(&diagram, cfg);
    let optimized = optimize_attributes(g, &selected, cfg.alpha)?;
    Ok(PhOutcome {
        diagram,
        selected,
        optimized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;
    use alloc::string::ToString;
    use alloc::vec;

    fn feature(dim: u8, birth: f64, death: f64, members: &[u32]) -> PersistenceFeature {
        PersistenceFeature {
            dimension: dim,
            birth,
            death,
            members: members.iter().map(|&m| EdgeId(m)).collect(),
        }
    }

    fn line_graph(attrs: &[Vec<f64>], labels: &[Label]) -> BehaviorGraph {
        let n = attrs.len() + 1;
        build_graph(
            (0..n).map(|i| (i.to_string(), vec![])).collect(),
            attrs
                .iter()
                .enumerate()
                .map(|(i, a)| (i.to_string(), (i + 1).to_string(), a.clone(), labels[i]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn point_cloud_no_op_and_subsample() {
        let attrs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let g = line_graph(&attrs, &[Label::Normal; 10]);
        let pc = build_point_cloud(&g, &PhoConfig::default()).unwrap();
        assert_eq!(pc.len(), 10);
        assert_eq!(pc.ids(), &(0..10).map(EdgeId).collect::<Vec<_>>()[..]);

        let attrs: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        let g = line_graph(&attrs, &[Label::Normal; 50]);
        let cfg = PhoConfig {
            max_points: 20,
            seed: 3,
            ..PhoConfig::default()
        };
        let a = build_point_cloud(&g, &cfg).unwrap();
        let b = build_point_cloud(&g, &cfg).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a, b);
        assert!(a.ids().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn point_cloud_needs_two_edges() {
        let g = line_graph(&[vec![0.0]], &[Label::Normal]);
        assert_eq!(
            build_point_cloud(&g, &PhoConfig::default()).unwrap_err(),
            Error::TooFewEdges(1)
        );
    }

    #[test]
    fn mean_plus_std_selects_outlier() {
        // persistences {1,1,1,10}: mean 3.25, population std 3.897
        let diag = PersistenceDiagram::from_features(
            vec![
                feature(0, 0.0, 1.0, &[0]),
                feature(0, 0.0, 1.0, &[1]),
                feature(1, 2.0, 3.0, &[2]),
                feature(1, 1.0, 11.0, &[3, 4]),
                feature(0, 0.0, f64::INFINITY, &[9]),
            ],
            20.0,
            10,
        );
        let sel = select_persistent(&diag, &PhoConfig::default());
        assert_eq!(sel, [EdgeId(3), EdgeId(4)].into_iter().collect());
    }

    #[test]
    fn equal_persistence_selects_nothing() {
        let diag = PersistenceDiagram::from_features(
            vec![feature(0, 0.0, 1.0, &[0]), feature(0, 0.0, 1.0, &[1])],
            2.0,
            2,
        );
        assert!(select_persistent(&diag, &PhoConfig::default()).is_empty());
    }

    #[test]
    fn top_fraction_counts() {
        let diag = PersistenceDiagram::from_features(
            vec![
                feature(0, 0.0, 1.0, &[0]),
                feature(0, 0.0, 4.0, &[1]),
                feature(1, 1.0, 2.0, &[2]),
                feature(1, 1.0, 4.0, &[3]),
            ],
            5.0,
            4,
        );
        let cfg = PhoConfig {
            rule: PersistenceRule::TopFraction(0.5),
            ..PhoConfig::default()
        };
        let sel = select_persistent(&diag, &cfg);
        assert_eq!(sel, [EdgeId(1), EdgeId(3)].into_iter().collect());
        let dim1 = PhoConfig {
            dims: vec![1],
            ..cfg
        };
        assert_eq!(select_persistent(&diag, &dim1), [EdgeId(3)].into_iter().collect());
    }

    #[test]
    fn rule_parsing() {
        assert_eq!(
            PersistenceRule::parse("top_fraction:0.1").unwrap(),
            PersistenceRule::TopFraction(0.1)
        );
        assert_eq!(
            PersistenceRule::parse("mean_plus_std").unwrap(),
            PersistenceRule::MeanPlusStd
        );
        assert!(PersistenceRule::parse("top_fraction:2").is_err());
        assert_eq!(
            PersistenceRule::TopFraction(0.1).to_string(),
            "top_fraction:0.1"
        );
    }

    #[test]
    fn optimize_examples() {
        let g = line_graph(
            &[vec![1.0, 0.0], vec![0.0, 2.0], vec![5.0, 5.0]],
            &[Label::Normal; 3],
        );
        let sel: BTreeSet<EdgeId> = [EdgeId(0), EdgeId(1)].into_iter().collect();
        let same = optimize_attributes(&g, &sel, 1.0).unwrap();
        assert_eq!(same, g);
        let flat = optimize_attributes(&g, &sel, 0.0).unwrap();
        assert_eq!(flat.edge(EdgeId(0)).attr, vec![0.5, 1.0]);
        assert_eq!(flat.edge(EdgeId(1)).attr, vec![0.5, 1.0]);
        assert_eq!(flat.edge(EdgeId(2)).attr, vec![5.0, 5.0]);

        // attr [1,0] with selected mean [0,1] at alpha 0.7 -> [0.7, 0.3]
        let g = line_graph(
            &[vec![1.0, 0.0], vec![-1.0, 2.0]],
            &[Label::Normal; 2],
        );
        let out = optimize_attributes(&g, &sel, 0.7).unwrap();
        let a = &out.edge(EdgeId(0)).attr;
        assert!((a[0] - 0.7).abs() < 1e-15 && (a[1] - 0.3).abs() < 1e-15);
        assert!(optimize_attributes(&g, &BTreeSet::new(), 0.3).unwrap() == g);
    }

    #[test]
    fn composition_counts() {
        let mut labels = vec![Label::Normal; 20];
        labels[3] = Label::Anomalous;
        let attrs: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let g = line_graph(&attrs, &labels);
        let all: BTreeSet<EdgeId> = (0..20).map(EdgeId).collect();
        let c = structure_composition(&all, &g).unwrap();
        assert!((c.anomaly_fraction - 0.05).abs() < 1e-15);
        assert!((c.normal_fraction - 0.95).abs() < 1e-15);
        let normal: BTreeSet<EdgeId> = [EdgeId(0), EdgeId(1)].into_iter().collect();
        let c = structure_composition(&normal, &g).unwrap();
        assert_eq!((c.anomaly_fraction, c.normal_fraction), (0.0, 1.0));
        assert_eq!(
            structure_composition(&BTreeSet::new(), &g).unwrap_err(),
            Error::EmptySelection
        );
    }

    #[test]
    fn quantile_nearest_rank() {
        let pc = PointCloud::new(vec![
            (EdgeId(0), vec![0.0]),
            (EdgeId(1), vec![1.0]),
            (EdgeId(2), vec![3.0]),
        ])
        .unwrap();
        // distances {1, 2, 3}
        assert_eq!(pairwise_quantile(&pc, 0.5), 2.0);
        assert_eq!(pairwise_quantile(&pc, 1.0), 3.0);
        assert_eq!(pairwise_quantile(&pc, 0.01), 1.0);
    }
}
