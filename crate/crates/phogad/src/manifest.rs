//! The run manifest: one JSON file describing a whole experiment.

use std::path::{Path, PathBuf};

use phogad_core::embed::NetConfig;
use phogad_core::features::SamplingSpec;
use phogad_core::homology::PhoConfig;
use phogad_core::train::{FocalConfig, TrainConfig, TrainSettings};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::{read_json, write_json};
use crate::synthetic::SyntheticSpec;

pub const SNAPSHOT: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Dataset {
    Flows { input: PathBuf, schema: PathBuf },
    Email { ham: PathBuf, spam: PathBuf, vocab: usize },
    Synthetic(SyntheticSpec),
}

/// Seeds live next to the settings they drive: `sampling.seed`, `pho.seed`,
/// `train.seed` and, for generated data, `dataset.seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub dataset: Dataset,
    #[serde(default)]
    pub sampling: Option<SamplingSpec>,
    #[serde(default)]
    pub pho: PhoConfig,
    #[serde(default)]
    pub net: NetConfig,
    #[serde(default)]
    pub focal: FocalConfig,
    #[serde(default)]
    pub train: TrainConfig,
    pub output: PathBuf,
}

impl RunManifest {
    pub fn settings(&self) -> TrainSettings {
        TrainSettings {
            net: self.net,
            focal: self.focal,
            train: self.train,
        }
    }

    /// Reads a manifest; relative paths are taken from the manifest's own
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut m: RunManifest = read_json(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut m.dataset {
            Dataset::Flows { input, schema } => {
                rebase(input);
                rebase(schema);
            }
            Dataset::Email { ham, spam, .. } => {
                rebase(ham);
                rebase(spam);
            }
            Dataset::Synthetic(_) => {}
        }
        rebase(&mut m.output);
        m.check_paths(path)?;
        Ok(m)
    }

    fn check_paths(&self, manifest: &Path) -> Result<()> {
        let inputs: Vec<&PathBuf> = match &self.dataset {
            Dataset::Flows { input, schema } => vec![input, schema],
            Dataset::Email { ham, spam, .. } => vec![ham, spam],
            Dataset::Synthetic(_) => vec![],
        };
        match inputs.into_iter().find(|p| !p.exists()) {
            Some(missing) => Err(Error::Format {
                path: manifest.to_path_buf(),
                message: format!("referenced path {} does not exist", missing.display()),
            }),
            None => Ok(()),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}
