//! Focal-loss training with full-batch Adam, evaluation and the ablation
//! driver.

mod adam;
mod focal;
mod metrics;
mod split;

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

pub use adam::{Adam, AdamConfig};
pub use focal::{focal_loss, focal_loss_grad, FocalConfig, P_MAX, P_MIN};
pub use metrics::{Confusion, EvalReport};
pub use split::{stratified_split, Split, SplitPart};

use crate::embed::{
    anomaly_probability, backward, forward_with, EdgeEmbedNet, EdgeInputs, EdgeWeights, Logits, Mode, NetConfig,
};
use crate::error::{Error, Result};
use crate::graph::{BehaviorGraph, EdgeAdjacencyIndex, EdgeId};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam: AdamConfig,
    pub train_fraction: f64,
    pub val_fraction: f64,
    /// Drives the split, parameter init and dropout masks.
    pub seed: u64,
    pub early_stop_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            learning_rate: 1e-2,
            adam: AdamConfig::default(),
            train_fraction: 0.7,
            val_fraction: 0.15,
            seed: 0,
            early_stop_patience: 20,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |x: f64| x > 0.0 && x < 1.0;
        if !frac(self.train_fraction) || !frac(self.val_fraction) || self.train_fraction + self.val_fraction >= 1.0 {
            return Err(Error::InvalidConfig(alloc::format!(
                "split fractions must lie in (0, 1) and sum below 1, got {} and {}",
                self.train_fraction,
                self.val_fraction
            )));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn split(&self, g: &BehaviorGraph) -> Split {
        stratified_split(&g.labels(), self.train_fraction, self.val_fraction, self.seed)
    }
}

/// Everything that shapes one training run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct TrainSettings {
    pub net: NetConfig,
    pub focal: FocalConfig,
    pub train: TrainConfig,
}

impl TrainSettings {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if !(0.0..1.0).contains(&self.net.dropout_rate) {
            return Err(Error::InvalidConfig("dropout rate must lie in [0, 1)".into()));
        }
        if self.focal.gamma.is_nan() || self.focal.gamma < 0.0 {
            return Err(Error::InvalidConfig("focal gamma must be non-negative".into()));
        }
        Ok(())
    }
}

/// One row of the training log. `loss` is the mean focal loss over the train
/// split after the epoch's update, measured without dropout.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub val_loss: f64,
    pub val: EvalReport,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub net: EdgeEmbedNet,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainOutcome {
    pub fn best_record(&self) -> &EpochRecord {
        &self.history[self.best_epoch - 1]
    }
}

fn labeled(g: &BehaviorGraph, ids: &[EdgeId]) -> Vec<(usize, u8)> {
    ids.iter()
        .filter_map(|&e| g.edge(e).label.target().map(|y| (e.index(), y)))
        .collect()
}

fn mean_loss(logits: &Logits, rows: &[(usize, u8)], cfg: &FocalConfig) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    let total: f64 = rows
        .iter()
        .map(|&(e, y)| focal_loss(anomaly_probability(logits[e]), y, cfg))
        .sum();
    total / rows.len() as f64
}

fn report(logits: &Logits, rows: &[(usize, u8)]) -> EvalReport {
    EvalReport::from_confusion(Confusion::from_pairs(
        rows.iter().map(|&(e, y)| (predicts_anomalous(logits[e]), y == 1)),
    ))
}

/// Argmax of the logits; ties go to normal.
#[inline]
pub fn predicts_anomalous(logits: [f64; 2]) -> bool {
    logits[1] > logits[0]
}

fn dropout_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Full-batch training on `split.train`, keeping the parameters of the
/// epoch with the best validation F1 (ties go to the lower validation loss).
/// Training stops after `early_stop_patience` epochs in which neither the
/// validation F1 nor the validation loss improved.
pub fn train(
    g: &BehaviorGraph,
    adj: &EdgeAdjacencyIndex,
    weights: &EdgeWeights,
    split: &Split,
    settings: &TrainSettings,
) -> Result<TrainOutcome> {
    settings.validate()?;
    let cfg = &settings.train;
    let train_rows = labeled(g, &split.train);
    let val_rows = labeled(g, &split.val);
    let has = |y: u8| train_rows.iter().any(|&(_, t)| t == y);
    if !has(0) || !has(1) {
        return Err(Error::SingleClassSplit);
    }

    let mut net = EdgeEmbedNet::new(g.edge_dim(), &settings.net, cfg.seed)?;
    let inputs = EdgeInputs::new(g, adj, weights, settings.net.use_weights)?;
    let shapes: Vec<usize> = net.tensors().iter().map(|t| t.len()).collect();
    let mut adam = Adam::new(&shapes, cfg.learning_rate, cfg.adam);
    let scale = 1.0 / train_rows.len() as f64;

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = net.clone();
    let mut best_epoch = 0;
    let mut best_key = (f64::NEG_INFINITY, f64::INFINITY);
    let mut lowest_val_loss = f64::INFINITY;
    let mut stale = 0;

    for epoch in 1..=cfg.epochs {
        let (logits, cache) = forward_with(&net, &inputs, Mode::Train, dropout_seed(cfg.seed, epoch))?;
        let mut grad_logits = alloc::vec![[0.0; 2]; logits.len()];
        for &(e, y) in &train_rows {
            let p = anomaly_probability(logits[e]);
            let d = focal_loss_grad(p, y, &settings.focal) * p * (1.0 - p) * scale;
            grad_logits[e] = [-d, d];
        }
        let grads = backward(&net, &cache, &grad_logits)?;
        drop(cache);
        adam.update(&mut net.tensors_mut(), &grads.tensors());

        let (eval_logits, _) = forward_with(&net, &inputs, Mode::Eval, 0)?;
        let record = EpochRecord {
            epoch,
            loss: mean_loss(&eval_logits, &train_rows, &settings.focal),
            val_loss: mean_loss(&eval_logits, &val_rows, &settings.focal),
            val: report(&eval_logits, &val_rows),
        };
        history.push(record);

        let improved = record.val.f1 > best_key.0 || (record.val.f1 == best_key.0 && record.val_loss < best_key.1);
        if improved {
            best_key = (record.val.f1, record.val_loss);
            best = net.clone();
            best_epoch = epoch;
        }
        // a falling validation loss also counts as progress, so the plateau
        // before the first anomaly is caught does not end training
        if improved || record.val_loss < lowest_val_loss {
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.early_stop_patience {
                break;
            }
        }
        lowest_val_loss = lowest_val_loss.min(record.val_loss);
    }

    Ok(TrainOutcome {
        net: best,
        history,
        best_epoch,
    })
}

/// Eval-mode logits for every edge.
pub fn predict(net: &EdgeEmbedNet, g: &BehaviorGraph, adj: &EdgeAdjacencyIndex, weights: &EdgeWeights) -> Result<Logits> {
    let inputs = EdgeInputs::new(g, adj, weights, net.flags.use_weights)?;
    Ok(forward_with(net, &inputs, Mode::Eval, 0)?.0)
}

/// Metrics over the labeled edges among `edges`.
pub fn evaluate(
    net: &EdgeEmbedNet,
    g: &BehaviorGraph,
    adj: &EdgeAdjacencyIndex,
    weights: &EdgeWeights,
    edges: &[EdgeId],
) -> Result<EvalReport> {
    let logits = predict(net, g, adj, weights)?;
    Ok(report(&logits, &labeled(g, edges)))
}

/// Rows of the ablation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum Ablation {
    Complete,
    NoDisentangle,
    NoWeights,
    NoPh,
    NoneOfThree,
}

impl Ablation {
    pub const ALL: [Ablation; 5] = [
        Ablation::Complete,
        Ablation::NoDisentangle,
        Ablation::NoWeights,
        Ablation::NoPh,
        Ablation::NoneOfThree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Complete => "complete",
            Ablation::NoDisentangle => "no_disentangle",
            Ablation::NoWeights => "no_weights",
            Ablation::NoPh => "no_ph",
            Ablation::NoneOfThree => "none_of_three",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(alloc::format!("unknown ablation row `{s}`")))
    }

    pub fn uses_ph(self) -> bool {
        !matches!(self, Ablation::NoPh | Ablation::NoneOfThree)
    }

    pub fn net_config(self, base: NetConfig) -> NetConfig {
        let mut net = base;
        match self {
            Ablation::Complete | Ablation::NoPh => {}
            Ablation::NoDisentangle => net.use_disentangle = false,
            Ablation::NoWeights => net.use_weights = false,
            Ablation::NoneOfThree => {
                net.use_disentangle = false;
                net.use_weights = false;
            }
        }
        net
    }
}

#[derive(Debug, Clone)]
pub struct AblationResult {
    pub row: Ablation,
    pub report: EvalReport,
    pub best_epoch: usize,
}

/// Trains and evaluates each row on the test split. All rows share the split,
/// the seeds and `base` settings; rows without homology train on `raw`
/// instead of `optimized`.
pub fn run_ablation(
    raw: &BehaviorGraph,
    optimized: &BehaviorGraph,
    adj: &EdgeAdjacencyIndex,
    weights: &EdgeWeights,
    base: &TrainSettings,
    rows: &[Ablation],
) -> Result<Vec<AblationResult>> {
    let split = base.train.split(raw);
    rows.iter()
        .map(|&row| {
            let g = if row.uses_ph() { optimized } else { raw };
            let settings = TrainSettings {
                net: row.net_config(base.net),
                ..*base
            };
            let outcome = train(g, adj, weights, &split, &settings)?;
            let report = evaluate(&outcome.net, g, adj, weights, &split.test)?;
            Ok(AblationResult {
                row,
                report,
                best_epoch: outcome.best_epoch,
            })
        })
        .collect()
}
