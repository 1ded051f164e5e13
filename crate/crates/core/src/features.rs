//! Record-level preprocessing: min–max scaling, anomaly down-sampling and
//! conversion of behavior records into a [`BehaviorGraph`].

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::graph::{build_graph, node_attr_from_edges, BehaviorGraph, Label};
use crate::rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// One observed behavior between two entities.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub src_key: String,
    pub dst_key: String,
    pub features: Vec<f64>,
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SamplingSpec {
    pub target_anomaly_proportion: f64,
    pub seed: u64,
}

/// Per-dimension scaling bounds learned on a training set.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MinMax {
    pub min: f64,
    pub max: f64,
}

impl MinMax {
    /// Maps into `[0, 1]`; constant dimensions map to 0 and values outside
    /// the learned range are clamped.
    #[inline]
    pub fn scale(&self, x: f64) -> f64 {
        let span = self.max - self.min;
        if span > 0.0 {
            ((x - self.min) / span).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Min–max scales every feature dimension in place and returns the bounds
/// for reuse on held-out records.
pub fn normalize_features(records: &mut [FlowRecord]) -> Result<Vec<MinMax>> {
    let dim = records.first().map_or(0, |r| r.features.len());
    let mut bounds = alloc::vec![
        MinMax {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        };
        dim
    ];
    for r in records.iter() {
        if r.features.len() != dim {
            return Err(Error::InconsistentDimension {
                what: "feature",
                expected: dim,
                found: r.features.len(),
            });
        }
        for (b, &x) in bounds.iter_mut().zip(&r.features) {
            b.min = b.min.min(x);
            b.max = b.max.max(x);
        }
    }
    apply_normalization(records, &bounds)?;
    Ok(bounds)
}

pub fn apply_normalization(records: &mut [FlowRecord], bounds: &[MinMax]) -> Result<()> {
    for r in records.iter_mut() {
        if r.features.len() != bounds.len() {
            return Err(Error::InconsistentDimension {
                what: "feature",
                expected: bounds.len(),
                found: r.features.len(),
            });
        }
        for (x, b) in r.features.iter_mut().zip(bounds) {
            *x = b.scale(*x);
        }
    }
    Ok(())
}

/// Result of [`downsample_anomalies`].
#[derive(Debug, Clone, PartialEq)]
pub struct Downsampled {
    pub records: Vec<FlowRecord>,
    pub normal: usize,
    pub anomalous: usize,
}

impl Downsampled {
    pub fn achieved_proportion(&self) -> f64 {
        self.anomalous as f64 / (self.normal + self.anomalous) as f64
    }
}

/// Largest anomaly count `k` with `k / (normal + k) <= target`.
pub fn anomaly_budget(normal: usize, target: f64) -> usize {
    if target >= 1.0 {
        return usize::MAX;
    }
    let exact = target * normal as f64 / (1.0 - target);
    // absorb representation error (0.1 * 90 / 0.9 evaluates just below 10)
    let mut k = libm::floor(exact + 1e-9) as usize;
    while k > 0 && (k as f64) / ((normal + k) as f64) > target + 1e-12 {
        k -= 1;
    }
    k
}

/// Keeps every normal record and a seeded uniform subset of anomalous ones
/// so the anomaly fraction is the largest achievable value not above the
/// target. Input order is preserved.
pub fn downsample_anomalies(records: &[FlowRecord], spec: &SamplingSpec) -> Result<Downsampled> {
    let target = spec.target_anomaly_proportion;
    if !(target > 0.0 && target <= 1.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "anomaly proportion {target} outside (0, 1]"
        )));
    }
    let anomalous: Vec<usize> = records
        .iter()
        .enumerate()
        .filter(|(_, r)| r.label == Label::Anomalous)
        .map(|(i, _)| i)
        .collect();
    let normal = records.iter().filter(|r| r.label == Label::Normal).count();
    if anomalous.is_empty() || normal == 0 {
        return Err(Error::MissingClass);
    }
    let budget = anomaly_budget(normal, target);
    if budget == 0 {
        return Err(Error::TargetUnreachable { target, normal });
    }
    let keep_count = budget.min(anomalous.len());
    let mut keep = alloc::vec![true; records.len()];
    if keep_count < anomalous.len() {
        let mut rng = rng::stream(spec.seed, rng::purpose::DOWNSAMPLE);
        for &i in &anomalous {
            keep[i] = false;
        }
        for pick in index::sample(&mut rng, anomalous.len(), keep_count) {
            keep[anomalous[pick]] = true;
        }
    }
    let records: Vec<FlowRecord> = records
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(r, _)| r.clone())
        .collect();
    Ok(Downsampled {
        records,
        normal,
        anomalous: keep_count,
    })
}

/// Turns records into a behavior graph: one node per distinct entity key in
/// first-appearance order, one edge per record, node attributes derived from
/// incident edges.
pub fn records_to_graph(records: &[FlowRecord]) -> Result<BehaviorGraph> {
    let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
    let mut nodes = Vec::new();
    for r in records {
        for key in [&r.src_key, &r.dst_key] {
            if seen.insert(key.as_str(), ()).is_none() {
                nodes.push((key.clone(), Vec::new()));
            }
        }
    }
    let edges = records
        .iter()
        .map(|r| (r.src_key.clone(), r.dst_key.clone(), r.features.clone(), r.label))
        .collect();
    node_attr_from_edges(&build_graph(nodes, edges)?)
}
