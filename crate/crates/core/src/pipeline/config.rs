//! Pipeline configuration file (TOML).
//!
//! ```toml
//! [dataset]
//! width = 256
//! height = 256
//! backgrounds = "backgrounds"   # directory of PNGs, relative to this file
//!
//! [categories]                  # relative weights; omitted keys use defaults
//! glass = 52
//! glass_water = 26
//! lens = 20
//! complex = 80
//!
//! [camera]                      # scene randomization ranges
//! focal_min = 0.9               # focal length / image width
//! focal_max = 1.4
//! object_depth_min = 4.5
//! object_depth_max = 6.0
//! background_min = 9.0
//! background_max = 13.0
//! lateral_jitter = 0.4
//!
//! [augment]                     # omit the section to store samples as rendered
//! color = 0.2
//! scale_min = 0.875
//! scale_max = 1.05
//! noise = 0.05
//! flip_horizontal = 0.5
//! flip_vertical = 0.5
//! crop = 224                    # 0 disables cropping
//! blur = true
//! blur_radius = 1.5
//! seed = 0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::error::{Error, Result};
use crate::render::random::{Category, SceneRanges};

/// Smallest supported image side (the SSIM window is 11 pixels).
pub const MIN_SIDE: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub width: usize,
    pub height: usize,
    pub backgrounds: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CategoryWeights {
    pub glass: f64,
    pub glass_water: f64,
    pub lens: f64,
    pub complex: f64,
}

impl Default for CategoryWeights {
    fn default() -> Self {
        Self {
            glass: Category::Glass.default_weight(),
            glass_water: Category::GlassWater.default_weight(),
            lens: Category::Lens.default_weight(),
            complex: Category::Complex.default_weight(),
        }
    }
}

impl CategoryWeights {
    pub fn pairs(&self) -> Vec<(Category, f64)> {
        vec![
            (Category::Glass, self.glass),
            (Category::GlassWater, self.glass_water),
            (Category::Lens, self.lens),
            (Category::Complex, self.complex),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub categories: CategoryWeights,
    #[serde(default)]
    pub camera: SceneRanges,
    #[serde(default = "AugmentConfig::disabled")]
    pub augment: AugmentConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// Reads a config file; a relative background directory is resolved
    /// against the file's own directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        if config.dataset.backgrounds.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            config.dataset.backgrounds = base.join(&config.dataset.backgrounds);
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = &self.dataset;
        if d.width < MIN_SIDE || d.height < MIN_SIDE {
            return bad(format!(
                "dataset size {}x{} below the {MIN_SIDE}x{MIN_SIDE} minimum",
                d.width, d.height
            ));
        }
        let weights = self.categories.pairs();
        if weights.iter().any(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
            return bad("category weights must be finite and non-negative".into());
        }
        if weights.iter().all(|(_, w)| *w == 0.0) {
            return bad("at least one category weight must be positive".into());
        }
        let c = &self.camera;
        for (name, lo, hi) in [
            ("focal", c.focal_min, c.focal_max),
            ("object_depth", c.object_depth_min, c.object_depth_max),
            ("background", c.background_min, c.background_max),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return bad(format!(
                    "camera {name} range [{lo}, {hi}] is not a positive interval"
                ));
            }
        }
        if !(c.lateral_jitter >= 0.0 && c.lateral_jitter.is_finite()) {
            return bad("camera lateral_jitter must be >= 0".into());
        }
        self.augment.validate()?;
        if self.augment.enabled && self.augment.crop > d.width.min(d.height) {
            return bad(format!(
                "augment crop {} larger than the {}x{} dataset images",
                self.augment.crop, d.width, d.height
            ));
        }
        if self.augment.enabled && self.augment.crop != 0 && self.augment.crop < MIN_SIDE {
            return bad(format!("augment crop must be 0 or at least {MIN_SIDE}"));
        }
        Ok(())
    }
}
