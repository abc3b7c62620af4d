//! Checkpoint persistence: one directory per snapshot.
//!
//! Layout:
//! ```text
//! <dir>/manifest.json   seed, epoch, config digest, validation scores,
//!                       file list
//! <dir>/model.json      backbone + both heads + label vocabulary
//! ```
//! Serialization keeps full `f64` precision, so a reloaded checkpoint
//! reproduces its validation score exactly.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eval::ScoreReport;
use crate::model::{TaggingModel, ToyEncoder};
use crate::trainer::TrainError;

const MANIFEST_FILE: &str = "manifest.json";
const MODEL_FILE: &str = "model.json";

/// The best model of a training run, with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: TaggingModel<ToyEncoder>,
    /// 1-based epoch the snapshot was taken at.
    pub epoch: usize,
    pub seed: u64,
    /// Digest of the training configuration that produced it.
    pub config_digest: String,
    /// Validation score that selected this snapshot.
    pub validation: ScoreReport,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointManifest {
    seed: u64,
    epoch: usize,
    config_digest: String,
    validation: ScoreReport,
    files: Vec<String>,
}

impl Checkpoint {
    /// Writes the checkpoint under `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<(), TrainError> {
        let io_err = |source: std::io::Error| TrainError::Io {
            path: dir.to_path_buf(),
            source,
        };
        fs::create_dir_all(dir).map_err(io_err)?;
        let model_json =
            serde_json::to_string(&self.model).expect("model serializes");
        fs::write(dir.join(MODEL_FILE), model_json).map_err(io_err)?;
        let manifest = CheckpointManifest {
            seed: self.seed,
            epoch: self.epoch,
            config_digest: self.config_digest.clone(),
            validation: self.validation.clone(),
            files: vec![MODEL_FILE.to_string()],
        };
        let manifest_json =
            serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(dir.join(MANIFEST_FILE), manifest_json).map_err(io_err)?;
        Ok(())
    }

    /// Reads a checkpoint back and checks the model's shape invariants.
    pub fn load(dir: &Path) -> Result<Self, TrainError> {
        let read = |name: &str| {
            fs::read_to_string(dir.join(name)).map_err(|source| TrainError::Io {
                path: dir.join(name),
                source,
            })
        };
        let manifest: CheckpointManifest =
            serde_json::from_str(&read(MANIFEST_FILE)?).map_err(|e| TrainError::BadCheckpoint {
                path: dir.join(MANIFEST_FILE),
                message: e.to_string(),
            })?;
        let model: TaggingModel<ToyEncoder> =
            serde_json::from_str(&read(MODEL_FILE)?).map_err(|e| TrainError::BadCheckpoint {
                path: dir.join(MODEL_FILE),
                message: e.to_string(),
            })?;
        model.validate().map_err(|e| TrainError::BadCheckpoint {
            path: dir.join(MODEL_FILE),
            message: e.to_string(),
        })?;
        Ok(Checkpoint {
            model,
            epoch: manifest.epoch,
            seed: manifest.seed,
            config_digest: manifest.config_digest,
            validation: manifest.validation,
        })
    }
}
