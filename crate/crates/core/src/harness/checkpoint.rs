//! Model checkpoints: the tensor container plus a JSON manifest holding
//! the model config, the vocabulary and every tensor's name and shape.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::checkpoint::{self, TensorEntry};
use crate::error::CheckpointError;
use crate::model::{ModelConfig, TtsModel};
use crate::params::ParamStore;
use crate::text2graph::Vocab;

#[derive(Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    config: ModelConfig,
    vocab: Vocab,
    tensors: Vec<TensorEntry>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelCheckpoint {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub params: ParamStore,
}

/// `<stem>.bin` and `<stem>.json`.
pub fn checkpoint_paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

impl ModelCheckpoint {
    pub fn save(&self, stem: &Path) -> Result<(), CheckpointError> {
        let (bin, json) = checkpoint_paths(stem);
        if let Some(dir) = bin.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        checkpoint::save_params(&self.params, &bin)?;
        let manifest = Manifest {
            format_version: checkpoint::VERSION,
            config: self.config.clone(),
            vocab: self.vocab.clone(),
            tensors: checkpoint::manifest_entries(self.params.iter()),
        };
        fs::write(json, serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    /// Loads and checks that the tensors match both the manifest and the
    /// shapes the configured model expects.
    pub fn load(stem: &Path) -> Result<Self, CheckpointError> {
        let (bin, json) = checkpoint_paths(stem);
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(json)?)?;
        if manifest.format_version != checkpoint::VERSION {
            return Err(CheckpointError::UnsupportedVersion(manifest.format_version));
        }
        let params = checkpoint::load_params(&bin)?;
        let listed = checkpoint::manifest_entries(params.iter());
        if listed != manifest.tensors {
            return Err(CheckpointError::Corrupt("tensor table differs from manifest".into()));
        }
        let vocab = manifest.vocab.reindexed();
        let model =
            TtsModel::new(&manifest.config, vocab.len()).map_err(|e| CheckpointError::ConfigMismatch(e.to_string()))?;
        let expected = checkpoint::manifest_entries(model.init_params().iter());
        if expected != listed {
            return Err(CheckpointError::ConfigMismatch(
                "stored tensors do not fit the stored config".into(),
            ));
        }
        Ok(Self {
            config: manifest.config,
            vocab,
            params,
        })
    }

    pub fn model(&self) -> TtsModel {
        TtsModel::new(&self.config, self.vocab.len()).expect("validated on load or construction")
    }

    /// Fails with `ConfigMismatch` when `runtime` differs from the stored config.
    pub fn check_config(&self, runtime: &ModelConfig) -> Result<(), CheckpointError> {
        if runtime != &self.config {
            let a = serde_json::to_value(&self.config)?;
            let b = serde_json::to_value(runtime)?;
            let diffs: Vec<String> = a
                .as_object()
                .unwrap()
                .iter()
                .filter(|(k, v)| b.get(k.as_str()) != Some(v))
                .map(|(k, v)| format!("{k}: checkpoint {v} vs runtime {}", b[k.as_str()]))
                .collect();
            return Err(CheckpointError::ConfigMismatch(diffs.join(", ")));
        }
        Ok(())
    }
}
