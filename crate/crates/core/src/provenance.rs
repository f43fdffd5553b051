//! Run provenance: config hashing and dataset fingerprinting. Every
//! artifact written by the CLI embeds these so a run can be reproduced and
//! verified from the artifact alone.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Dataset;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

/// Short stable hash of a canonical config serialization.
pub fn config_hash(canonical: &str) -> String {
    sha256_hex(canonical.as_bytes())[..16].to_string()
}

/// Content hash over dimensions, feature names, the exact feature bits and
/// the labels.
pub fn dataset_fingerprint(ds: &Dataset) -> String {
    let mut hasher = Sha256::new();
    hasher.update((ds.n_samples() as u64).to_le_bytes());
    hasher.update((ds.n_features() as u64).to_le_bytes());
    for name in ds.feature_names() {
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
    }
    for v in ds.features().data() {
        hasher.update(v.to_le_bytes());
    }
    hasher.update(ds.labels());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{:02x}", b)).collect()
}

/// Which stratified split a model was trained on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitRef {
    pub seed: u64,
    pub test_fraction: f64,
    pub repetitions: u32,
    pub repetition: u32,
}

/// Everything needed to audit a trained model: seed, config hash, the
/// fingerprints of the data it saw, and how the balanced sets were built.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub master_seed: u64,
    pub config_hash: String,
    /// Fingerprint of the full dataset before splitting (empty when the
    /// model was trained through the library API directly).
    pub source_fingerprint: String,
    /// Fingerprint of the exact training dataset.
    pub train_fingerprint: String,
    pub split: Option<SplitRef>,
    pub with_replacement: bool,
    pub leftover_normals: u64,
}
