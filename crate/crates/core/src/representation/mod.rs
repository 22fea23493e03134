//! Three-view image representation and the fused per-view classifier ensemble.
//!
//! Each photo is described by its scene embedding `f`, its scene scores `p`
//! and the per-class maximal detector confidences `o`. One classifier is
//! trained per view, and their confidence vectors are mixed with weights
//! chosen by exhaustive search on a validation set.

mod classifier;
mod fusion;

pub use classifier::{
    classifier_accuracy, train_view_classifier, ClassifierConfig, SoftmaxRegression, ViewClassifier,
};
pub use fusion::{
    fit_fusion_weights, fuse_scores, predict_fused, simplex_grid, train_fusion, FusionFit,
    FusionModel, FusionWeights, LabeledRepresentation,
};

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feature_records::{primary_records, Gallery, ImageFeatureRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    /// Scene embedding `f`.
    Embedding,
    /// Scene scores `p`.
    SceneScores,
    /// Object confidences `o`.
    Objects,
}

impl View {
    pub const ALL: [View; 3] = [View::Embedding, View::SceneScores, View::Objects];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRepresentation {
    pub f: Vec<f64>,
    pub p: Vec<f64>,
    pub o: Vec<f64>,
}

impl ImageRepresentation {
    pub fn from_record(record: &ImageFeatureRecord) -> Self {
        Self {
            f: record.scene_embedding.clone(),
            p: record.scene_scores.clone(),
            o: record.object_confidences.clone(),
        }
    }

    pub fn view(&self, view: View) -> &[f64] {
        match view {
            View::Embedding => &self.f,
            View::SceneScores => &self.p,
            View::Objects => &self.o,
        }
    }

    /// The single `(D+S+O)`-dimensional vector `[f, p, o]`.
    pub fn concatenated(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.f.len() + self.p.len() + self.o.len());
        v.extend_from_slice(&self.f);
        v.extend_from_slice(&self.p);
        v.extend_from_slice(&self.o);
        v
    }
}

/// Per-class maximum of detection scores; bounding boxes are not used.
pub fn object_confidence_vector(
    detections: &[(usize, f64)],
    num_objects: usize,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0_f64; num_objects];
    for &(class, score) in detections {
        if class >= num_objects {
            return Err(Error::InvalidInput(format!(
                "object class {class} out of range for {num_objects} categories"
            )));
        }
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidInput(format!(
                "detection score {score} outside [0, 1]"
            )));
        }
        out[class] = out[class].max(score);
    }
    Ok(out)
}

/// Reads `photo_id<TAB>class` lines; blank lines and `#` comments are skipped.
pub fn read_label_file(path: &Path) -> Result<BTreeMap<String, usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| Error::Malformed {
            line: i + 1,
            message,
        };
        let (id, class) = line
            .split_once('\t')
            .ok_or_else(|| bad("expected `photo_id<TAB>class`".into()))?;
        let class: usize = class
            .trim()
            .parse()
            .map_err(|_| bad(format!("class `{class}` is not a nonnegative integer")))?;
        if labels.insert(id.to_string(), class).is_some() {
            return Err(bad(format!("duplicate label for `{id}`")));
        }
    }
    Ok(labels)
}

pub fn write_label_file(labels: &BTreeMap<String, usize>, path: &Path) -> Result<()> {
    let text: String = labels
        .iter()
        .map(|(id, c)| format!("{id}\t{c}\n"))
        .collect();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Pairs every labeled photo (one record per id, fast tier first) with its class.
pub fn labeled_representations(
    gallery: &Gallery,
    labels: &BTreeMap<String, usize>,
) -> Result<Vec<LabeledRepresentation>> {
    let records = primary_records(&gallery.records);
    let mut out = Vec::with_capacity(labels.len());
    for r in records {
        if let Some(&label) = labels.get(&r.photo_id) {
            out.push(LabeledRepresentation {
                rep: ImageRepresentation::from_record(r),
                label,
            });
        }
    }
    if out.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels name photos missing from the gallery",
            labels.len() - out.len()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DOG: usize = 17;
    const CAT: usize = 16;

    #[test]
    fn no_detections_give_zero_vector() {
        assert_eq!(object_confidence_vector(&[], 145).unwrap(), vec![0.0; 145]);
    }

    #[test]
    fn maximal_score_is_kept() {
        let o = object_confidence_vector(&[(DOG, 0.3), (DOG, 0.7), (CAT, 0.2)], 145).unwrap();
        assert_eq!(o[DOG], 0.7);
        assert_eq!(o[CAT], 0.2);
        assert_eq!(o.iter().filter(|v| **v > 0.0).count(), 2);
    }

    #[test]
    fn saturated_detections_give_ones() {
        let dets: Vec<_> = (0..145).map(|k| (k, 1.0)).collect();
        assert_eq!(
            object_confidence_vector(&dets, 145).unwrap(),
            vec![1.0; 145]
        );
    }

    #[test]
    fn out_of_range_class_rejected() {
        assert!(object_confidence_vector(&[(145, 0.5)], 145).is_err());
    }

    #[test]
    fn concatenation_order_is_f_p_o() {
        let rep = ImageRepresentation {
            f: vec![1.0],
            p: vec![2.0, 3.0],
            o: vec![4.0],
        };
        assert_eq!(rep.concatenated(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(rep.view(View::SceneScores), &[2.0, 3.0]);
    }

    proptest! {
        #[test]
        fn duplicating_a_detection_changes_nothing(
            dets in prop::collection::vec((0usize..10, 0.0f64..=1.0), 1..20),
            pick in 0usize..20,
        ) {
            let base = object_confidence_vector(&dets, 10).unwrap();
            let mut dup = dets.clone();
            dup.push(dets[pick % dets.len()]);
            prop_assert_eq!(object_confidence_vector(&dup, 10).unwrap(), base);
        }
    }
}
