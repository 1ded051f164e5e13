//! Training outputs: checkpoints, history logs, reports and the ablation
//! table.

use std::path::Path;

use phogad_core::embed::EdgeEmbedNet;
use phogad_core::train::{AblationResult, EpochRecord, EvalReport, SplitPart, TrainSettings};
use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};
use crate::fmt::{float, read_json, write_json};

pub const CHECKPOINT: &str = "checkpoint.json";
pub const HISTORY: &str = "history.csv";
pub const REPORT: &str = "report.json";
pub const ABLATION: &str = "ablation.csv";

pub const CHECKPOINT_FORMAT: &str = "phogad-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained parameters plus everything needed to rebuild the split they were
/// validated on. Matrices carry their `rows` and `cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub best_epoch: usize,
    pub settings: TrainSettings,
    pub net: EdgeEmbedNet,
}

impl Checkpoint {
    pub fn new(net: EdgeEmbedNet, settings: TrainSettings, best_epoch: usize) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            best_epoch,
            settings,
            net,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ck: Checkpoint = read_json(path)?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!(
                    "expected {CHECKPOINT_FORMAT} version {CHECKPOINT_VERSION}, found {} version {}",
                    ck.format, ck.version
                ),
            });
        }
        ck.net.validate()?;
        Ok(ck)
    }
}

pub fn write_history(history: &[EpochRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).at(path)?;
    w.write_record(["epoch", "loss", "val_accuracy", "val_precision", "val_recall", "val_f1"])
        .at(path)?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            float(r.loss),
            float(r.val.accuracy),
            float(r.val.precision),
            float(r.val.recall),
            float(r.val.f1),
        ])
        .at(path)?;
    }
    w.flush().at(path)
}

/// Metrics of one labeled edge set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub split: SplitPart,
    pub edges: usize,
    #[serde(flatten)]
    pub metrics: EvalReport,
}

impl Report {
    pub fn new(split: SplitPart, metrics: EvalReport) -> Self {
        Self {
            split,
            edges: metrics.confusion.total(),
            metrics,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn write_ablation(rows: &[AblationResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).at(path)?;
    w.write_record([
        "row", "accuracy", "precision", "recall", "f1", "tp", "fp", "tn", "fn", "best_epoch",
    ])
    .at(path)?;
    for r in rows {
        let (m, c) = (&r.report, &r.report.confusion);
        w.write_record([
            r.row.as_str().to_string(),
            float(m.accuracy),
            float(m.precision),
            float(m.recall),
            float(m.f1),
            c.tp.to_string(),
            c.fp.to_string(),
            c.tn.to_string(),
            c.fn_.to_string(),
            r.best_epoch.to_string(),
        ])
        .at(path)?;
    }
    w.flush().at(path)
}
