//! Fitted-model persistence: the kernel spec plus a pointer to its training
//! data and a content hash so stale datasets are caught at prediction time.
//! The Cholesky factor is cheap to rebuild at this scale and is not stored.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use spheregp::kernels::KernelSpec;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub kernel: KernelSpec,
    pub data_path: String,
    pub data_sha256: String,
    /// Sample mean subtracted at ingestion (`--center`); added back to
    /// predicted means. 0 when centering was off.
    pub mean_offset: f64,
}

pub fn sha256_hex(path: &Path) -> Result<String, CliError> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    Ok(hex)
}

impl ModelFile {
    pub fn verify_data(&self, data_path: &Path) -> Result<(), CliError> {
        let actual = sha256_hex(data_path)?;
        if actual != self.data_sha256 {
            return Err(CliError::data(format!(
                "dataset content hash mismatch: model was fitted on {} (sha256 {}), \
                 but {} hashes to {}",
                self.data_path,
                self.data_sha256,
                data_path.display(),
                actual
            )));
        }
        Ok(())
    }
}

/// Accepts either a bare model object or the full `fit` output that wraps
/// one under a "model" key.
pub fn load_model(path: &Path) -> Result<ModelFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let model_value = value.get("model").cloned().unwrap_or(value);
    serde_json::from_value(model_value)
        .map_err(|e| CliError::data(format!("{}: not a model file: {e}", path.display())))
}
