use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

/// One generated sample. Paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub id: String,
    pub category: String,
    pub seed: u64,
    /// File name of the background drawn from the pool.
    pub background_source: String,
    pub scene: String,
    pub input: String,
    pub background: String,
    pub mask: String,
    pub attenuation: String,
    pub flow: String,
    /// MSE between the stored input and the stored matte composited over
    /// the stored background, before augmentation.
    pub self_check_mse: f64,
}

impl SampleRecord {
    pub fn files(&self) -> [&str; 6] {
        [
            &self.scene,
            &self.input,
            &self.background,
            &self.mask,
            &self.attenuation,
            &self.flow,
        ]
    }

    /// Directory holding the sample's matte files.
    pub fn dir(&self) -> &str {
        self.mask.rsplit_once('/').map(|(d, _)| d).unwrap_or(".")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub seed: u64,
    pub count: usize,
    /// Samples per category name.
    pub counts: BTreeMap<String, usize>,
    pub config: PipelineConfig,
    #[serde(default)]
    pub samples: Vec<SampleRecord>,
}

impl DatasetManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes to TOML")
    }

    pub fn save(&self, root: &Path) -> Result<()> {
        let path = root.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    /// Reads `root/manifest.toml` and checks that every referenced file
    /// exists and that sample seeds are unique.
    pub fn load(root: &Path) -> Result<Self> {
        let path = root.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: DatasetManifest =
            toml::from_str(&text).map_err(|e| Error::format("dataset manifest", e.to_string()))?;
        if manifest.samples.len() != manifest.count {
            return Err(Error::Validation(format!(
                "manifest lists {} samples but declares {}",
                manifest.samples.len(),
                manifest.count
            )));
        }
        let mut seeds = HashSet::new();
        let mut ids = HashSet::new();
        for s in &manifest.samples {
            if !seeds.insert(s.seed) {
                return Err(Error::Validation(format!(
                    "duplicate sample seed {}",
                    s.seed
                )));
            }
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Validation(format!("duplicate sample id {}", s.id)));
            }
            for f in s.files() {
                if !root.join(f).is_file() {
                    return Err(Error::Validation(format!(
                        "sample {} references missing file {f}",
                        s.id
                    )));
                }
            }
        }
        Ok(manifest)
    }
}
