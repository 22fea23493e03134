use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_records::{GalleryHeader, ImageFeatureRecord};
use crate::util::top_k_indices;

const DEFAULT_MAP: &str = include_str!("../../data/category_map.json");

/// Scene and object indices mapped onto interest categories, and categories
/// onto high-level groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoryMap {
    /// Category id to group name.
    pub categories: BTreeMap<String, String>,
    pub scene_to_category: BTreeMap<usize, String>,
    pub object_to_category: BTreeMap<usize, String>,
}

impl CategoryMap {
    /// The bundled map covering outdoors, indoors, sports, food, activity,
    /// fashion, musical instruments, transport, services, appliances and toys.
    pub fn bundled() -> Self {
        serde_json::from_str(DEFAULT_MAP).expect("bundled category map parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("category map {}: {e}", path.display())))
    }

    pub fn group_of(&self, category: &str) -> Option<&str> {
        self.categories.get(category).map(String::as_str)
    }

    pub fn groups(&self) -> BTreeSet<&str> {
        self.categories.values().map(String::as_str).collect()
    }

    /// Object indices mapped to `category`.
    pub fn objects_for(&self, category: &str) -> Vec<usize> {
        self.object_to_category
            .iter()
            .filter(|(_, c)| c.as_str() == category)
            .map(|(&i, _)| i)
            .collect()
    }

    /// Scene indices mapped to `category`.
    pub fn scenes_for(&self, category: &str) -> Vec<usize> {
        self.scene_to_category
            .iter()
            .filter(|(_, c)| c.as_str() == category)
            .map(|(&i, _)| i)
            .collect()
    }

    /// Indices must fit the gallery dimensions and name declared categories.
    pub fn validate(&self, header: &GalleryHeader) -> Result<()> {
        let check = |kind: &str, map: &BTreeMap<usize, String>, bound: usize| -> Result<()> {
            for (&i, c) in map {
                if i >= bound {
                    return Err(Error::InvalidInput(format!(
                        "category map: {kind} index {i} out of range for {bound} classes"
                    )));
                }
                if !self.categories.contains_key(c) {
                    return Err(Error::InvalidInput(format!(
                        "category map: {kind} index {i} maps to undeclared category `{c}`"
                    )));
                }
            }
            Ok(())
        };
        check("scene", &self.scene_to_category, header.num_scenes)?;
        check("object", &self.object_to_category, header.num_objects)?;
        if let Some((c, _)) = self.categories.iter().find(|(_, g)| g.trim().is_empty()) {
            return Err(Error::InvalidInput(format!(
                "category map: category `{c}` has an empty group"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CategoryThresholds {
    /// Number of top-scoring scenes that contribute categories.
    pub scene_top_k: usize,
    /// Minimal object confidence that contributes a category.
    pub object_min_conf: f64,
}

impl Default for CategoryThresholds {
    fn default() -> Self {
        Self {
            scene_top_k: 1,
            object_min_conf: 0.5,
        }
    }
}

impl CategoryThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.object_min_conf) {
            return Err(Error::InvalidParameter(format!(
                "object_min_conf must lie in [0, 1], got {}",
                self.object_min_conf
            )));
        }
        Ok(())
    }
}

/// Categories of the top scenes (lowest index first on ties) and of every
/// sufficiently confident object; unmapped indices contribute nothing.
pub fn categorize_record(
    record: &ImageFeatureRecord,
    map: &CategoryMap,
    thresholds: &CategoryThresholds,
) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for i in top_k_indices(&record.scene_scores, thresholds.scene_top_k) {
        if let Some(c) = map.scene_to_category.get(&i) {
            out.insert(c.clone());
        }
    }
    for (j, &conf) in record.object_confidences.iter().enumerate() {
        if conf >= thresholds.object_min_conf {
            if let Some(c) = map.object_to_category.get(&j) {
                out.insert(c.clone());
            }
        }
    }
    out
}
