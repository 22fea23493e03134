//! TOML configuration covering every tunable with its default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aggregation::AggregatorConfig;
use crate::error::{Error, Result};
use crate::face_pipeline::ClusteringParams;
use crate::privacy_router::PrivacyConfig;
use crate::profiler::{CategoryMap, CategoryThresholds, ProfileConfig};
use crate::representation::ClassifierConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeoConfig {
    pub radius_deg: f64,
}

impl Default for GeoConfig {
    fn default() -> Self {
        Self { radius_deg: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VideoConfig {
    /// Positional frame stride, 3 to 5.
    pub stride: usize,
}

impl Default for VideoConfig {
    fn default() -> Self {
        Self { stride: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    pub grid_step: f64,
    pub classifier: ClassifierConfig,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            grid_step: 0.1,
            classifier: ClassifierConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    /// JSON category map; the bundled map when absent. Relative paths are
    /// resolved against the config file's directory.
    pub category_map: Option<PathBuf>,
    pub privacy: PrivacyConfig,
    pub clustering: ClusteringParams,
    pub categories: CategoryThresholds,
    pub geo: GeoConfig,
    pub video: VideoConfig,
    pub fusion: FusionConfig,
    pub aggregator: AggregatorConfig,
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config: AppConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())))?;
        if let (Some(map), Some(dir)) = (&config.category_map, path.parent()) {
            if map.is_relative() {
                config.category_map = Some(dir.join(map));
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.profile().validate()?;
        if !(3..=5).contains(&self.video.stride) {
            return Err(Error::InvalidParameter(format!(
                "video.stride must be 3, 4 or 5, got {}",
                self.video.stride
            )));
        }
        self.aggregator.validate()
    }

    pub fn profile(&self) -> ProfileConfig {
        ProfileConfig {
            privacy: self.privacy.clone(),
            clustering: self.clustering,
            categories: self.categories.clone(),
            geo_radius_deg: self.geo.radius_deg,
        }
    }

    pub fn category_map(&self) -> Result<CategoryMap> {
        match &self.category_map {
            Some(path) => CategoryMap::load(path),
            None => Ok(CategoryMap::bundled()),
        }
    }

    /// The defaults rendered as TOML.
    pub fn default_toml() -> String {
        toml::to_string(&AppConfig::default()).expect("defaults serialize")
    }
}
