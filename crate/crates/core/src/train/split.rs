use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::graph::{EdgeId, Label};
use crate::rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Disjoint, sorted edge-id sets. Unlabeled edges are in none of them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Split {
    pub train: Vec<EdgeId>,
    pub val: Vec<EdgeId>,
    pub test: Vec<EdgeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(Serialize, Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum SplitPart {
    Train,
    Val,
    Test,
    All,
}

impl Split {
    pub fn part(&self, part: SplitPart) -> Vec<EdgeId> {
        match part {
            SplitPart::Train => self.train.clone(),
            SplitPart::Val => self.val.clone(),
            SplitPart::Test => self.test.clone(),
            SplitPart::All => {
                let mut all: Vec<EdgeId> = self
                    .train
                    .iter()
                    .chain(&self.val)
                    .chain(&self.test)
                    .copied()
                    .collect();
                all.sort_unstable();
                all
            }
        }
    }
}

/// Per-class seeded shuffle, then `round(train_fraction · n)` to train and
/// `round(val_fraction · n)` to validation; the rest is test.
pub fn stratified_split(labels: &[Label], train_fraction: f64, val_fraction: f64, seed: u64) -> Split {
    let mut rng = rng::stream(seed, rng::purpose::SPLIT);
    let mut split = Split::default();
    for class in [Label::Normal, Label::Anomalous] {
        let mut ids: Vec<EdgeId> = labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| EdgeId(i as u32))
            .collect();
        ids.shuffle(&mut rng);
        let n = ids.len() as f64;
        let n_train = libm::round(train_fraction * n) as usize;
        let n_val = (libm::round(val_fraction * n) as usize).min(ids.len() - n_train.min(ids.len()));
        let n_train = n_train.min(ids.len());
        split.train.extend_from_slice(&ids[..n_train]);
        split.val.extend_from_slice(&ids[n_train..n_train + n_val]);
        split.test.extend_from_slice(&ids[n_train + n_val..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    split
}
