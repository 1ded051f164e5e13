//! Synthetic behavior data with known anomalies.
//!
//! Entities sit on a ring split into contiguous arcs. Normal behaviors join
//! nearby entities of the same arc and draw their features from a tight
//! Gaussian around that arc's centre. Anomalous behaviors join entities of
//! two different arcs and draw every feature uniformly from `[0, 1]`.

use phogad_core::features::FlowRecord;
use phogad_core::rng;
use phogad_core::Label;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub normal_edges: usize,
    /// Share of anomalous edges in the output.
    pub anomaly_proportion: f64,
    pub nodes: usize,
    pub clusters: usize,
    pub dim: usize,
    pub cluster_std: f64,
    /// Baseline feature value of every cluster centre.
    pub level: f64,
    /// Lift of a cluster centre on its own block of dimensions.
    pub contrast: f64,
    /// Largest ring distance between the endpoints of a normal edge.
    pub reach: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            normal_edges: 2000,
            anomaly_proportion: 0.10,
            nodes: 60,
            clusters: 3,
            dim: 32,
            cluster_std: 0.03,
            level: 0.15,
            contrast: 0.2,
            reach: 3,
            seed: 0,
        }
    }
}

const STREAM: u64 = 0x5EED;

impl SyntheticSpec {
    pub fn anomalous_edges(&self) -> usize {
        phogad_core::features::anomaly_budget(self.normal_edges, self.anomaly_proportion)
    }

    /// Cluster `c` sits at `level + contrast` on its own block of feature
    /// dimensions and at `level` elsewhere, so entities of different arcs
    /// point in different directions while all clusters stay closer to each
    /// other than to typical uniform points.
    pub fn centres(&self) -> Vec<Vec<f64>> {
        (0..self.clusters)
            .map(|c| {
                (0..self.dim)
                    .map(|k| if k * self.clusters / self.dim == c { self.level + self.contrast } else { self.level })
                    .collect()
            })
            .collect()
    }

    /// Records in a seeded random order.
    pub fn generate(&self) -> Vec<FlowRecord> {
        assert!(self.clusters >= 2 && self.nodes >= 2 * self.clusters, "ring too small for its arcs");
        let mut rng = rng::stream(self.seed, STREAM);
        let arc_len = self.nodes / self.clusters;
        let centres = self.centres();
        let noise = Normal::new(0.0, self.cluster_std).expect("finite std");
        let key = |n: usize| format!("n{n:03}");

        let mut records = Vec::with_capacity(self.normal_edges + self.anomalous_edges());
        for i in 0..self.normal_edges {
            let c = i % self.clusters;
            let start = c * arc_len;
            let u = rng.random_range(0..arc_len);
            let step = rng.random_range(1..=self.reach.min(arc_len - 1));
            let v = (u + step) % arc_len;
            let features = centres[c]
                .iter()
                .map(|&m| (m + noise.sample(&mut rng)).clamp(0.0, 1.0))
                .collect();
            records.push(FlowRecord {
                src_key: key(start + u),
                dst_key: key(start + v),
                features,
                label: Label::Normal,
            });
        }
        for _ in 0..self.anomalous_edges() {
            let a = rng.random_range(0..self.clusters);
            let b = (a + rng.random_range(1..self.clusters)) % self.clusters;
            let u = a * arc_len + rng.random_range(0..arc_len);
            let v = b * arc_len + rng.random_range(0..arc_len);
            records.push(FlowRecord {
                src_key: key(u),
                dst_key: key(v),
                features: (0..self.dim).map(|_| rng.random::<f64>()).collect(),
                label: Label::Anomalous,
            });
        }
        records.shuffle(&mut rng);
        records
    }
}
