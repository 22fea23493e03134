use serde::{Deserialize, Serialize};

use super::classifier::{
    train_view_classifier, ClassifierConfig, SoftmaxRegression, ViewClassifier,
};
use super::{ImageRepresentation, View};
use crate::error::{Error, Result};
use crate::util::argmax;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRepresentation {
    pub rep: ImageRepresentation,
    pub label: usize,
}

/// Mixing coefficients of the embedding, scene-score and object classifiers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub w_f: f64,
    pub w_p: f64,
    pub w_o: f64,
}

impl FusionWeights {
    pub fn new(w_f: f64, w_p: f64, w_o: f64) -> Result<Self> {
        let w = Self { w_f, w_p, w_o };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.w_f, self.w_p, self.w_o];
        if all.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || all.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidParameter(format!(
                "fusion weights must be nonnegative and not all zero, got {all:?}"
            )));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.w_f, self.w_p, self.w_o]
    }
}

/// Weighted sum of the three per-view confidence vectors.
pub fn fuse_scores(weights: &FusionWeights, cs_f: &[f64], cs_p: &[f64], cs_o: &[f64]) -> Vec<f64> {
    cs_f.iter()
        .zip(cs_p)
        .zip(cs_o)
        .map(|((f, p), o)| weights.w_f * f + weights.w_p * p + weights.w_o * o)
        .collect()
}

/// All weight triples on the simplex with coordinates in `{0, step, ..., 1}`,
/// in descending lexicographic order: `(1,0,0)` first, `(0,0,1)` last.
pub fn simplex_grid(step: f64) -> Result<Vec<FusionWeights>> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid step must lie in (0, 1], got {step}"
        )));
    }
    let n = (1.0 / step).round() as usize;
    if (n as f64 * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "grid step {step} does not divide 1"
        )));
    }
    let mut grid = Vec::with_capacity((n + 1) * (n + 2) / 2);
    for i in (0..=n).rev() {
        for j in (0..=n - i).rev() {
            let k = n - i - j;
            grid.push(FusionWeights {
                w_f: i as f64 / n as f64,
                w_p: j as f64 / n as f64,
                w_o: k as f64 / n as f64,
            });
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionFit {
    pub weights: FusionWeights,
    /// Validation accuracy of the chosen weights, in [0, 1].
    pub accuracy: f64,
    /// Number of grid points evaluated.
    pub grid_points: usize,
}

/// Exhaustive search of the weight grid for the best validation accuracy.
///
/// The first maximizer in grid order is kept; later points replace it only
/// when strictly more accurate.
pub fn fit_fusion_weights(
    classifiers: [&dyn ViewClassifier; 3],
    validation: &[LabeledRepresentation],
    grid_step: f64,
) -> Result<FusionFit> {
    if validation.is_empty() {
        return Err(Error::InvalidInput("validation set is empty".into()));
    }
    let num_classes = classifiers[0].num_classes();
    if classifiers.iter().any(|c| c.num_classes() != num_classes) {
        return Err(Error::InvalidInput(
            "view classifiers disagree on the number of classes".into(),
        ));
    }
    let grid = simplex_grid(grid_step)?;

    // (cs_f, cs_p, cs_o) per validation image
    let scores: Vec<[Vec<f64>; 3]> = validation
        .iter()
        .map(|s| {
            Ok([
                classifiers[0].predict_scores(s.rep.view(View::Embedding))?,
                classifiers[1].predict_scores(s.rep.view(View::SceneScores))?,
                classifiers[2].predict_scores(s.rep.view(View::Objects))?,
            ])
        })
        .collect::<Result<_>>()?;

    let mut best: Option<(usize, FusionWeights)> = None;
    for weights in &grid {
        let correct = scores
            .iter()
            .zip(validation)
            .filter(|([f, p, o], s)| argmax(&fuse_scores(weights, f, p, o)) == s.label)
            .count();
        if best.is_none_or(|(c, _)| correct > c) {
            best = Some((correct, *weights));
        }
    }
    let (correct, weights) = best.expect("grid is never empty");
    Ok(FusionFit {
        weights,
        accuracy: correct as f64 / validation.len() as f64,
        grid_points: grid.len(),
    })
}

/// Three view classifiers and their validation-selected weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionModel<C = SoftmaxRegression> {
    pub embedding: C,
    pub scene_scores: C,
    pub objects: C,
    pub weights: FusionWeights,
    pub num_classes: usize,
}

impl<C: ViewClassifier> FusionModel<C> {
    pub fn new(embedding: C, scene_scores: C, objects: C, weights: FusionWeights) -> Result<Self> {
        weights.validate()?;
        let num_classes = embedding.num_classes();
        if scene_scores.num_classes() != num_classes || objects.num_classes() != num_classes {
            return Err(Error::InvalidInput(
                "view classifiers disagree on the number of classes".into(),
            ));
        }
        Ok(Self {
            embedding,
            scene_scores,
            objects,
            weights,
            num_classes,
        })
    }
}

/// Fused confidences and the winning class (lowest index on ties).
pub fn predict_fused<C: ViewClassifier>(
    model: &FusionModel<C>,
    rep: &ImageRepresentation,
) -> Result<(usize, Vec<f64>)> {
    let cs = fuse_scores(
        &model.weights,
        &model.embedding.predict_scores(&rep.f)?,
        &model.scene_scores.predict_scores(&rep.p)?,
        &model.objects.predict_scores(&rep.o)?,
    );
    Ok((argmax(&cs), cs))
}

/// Trains the three reference classifiers and fits their fusion weights.
pub fn train_fusion(
    train: &[LabeledRepresentation],
    validation: &[LabeledRepresentation],
    num_classes: usize,
    config: &ClassifierConfig,
    grid_step: f64,
) -> Result<(FusionModel, FusionFit)> {
    if train.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    let labels: Vec<usize> = train.iter().map(|s| s.label).collect();
    let train_view = |view: View| {
        let inputs: Vec<&[f64]> = train.iter().map(|s| s.rep.view(view)).collect();
        train_view_classifier(view, &inputs, &labels, num_classes, config)
    };
    let embedding = train_view(View::Embedding)?;
    let scene_scores = train_view(View::SceneScores)?;
    let objects = train_view(View::Objects)?;
    let fit = fit_fusion_weights([&embedding, &scene_scores, &objects], validation, grid_step)?;
    let model = FusionModel::new(embedding, scene_scores, objects, fit.weights)?;
    Ok((model, fit))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Returns a fixed score vector regardless of input.
    struct Constant(Vec<f64>);

    impl ViewClassifier for Constant {
        fn num_classes(&self) -> usize {
            self.0.len()
        }
        fn input_dim(&self) -> usize {
            1
        }
        fn predict_scores(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    fn sample(label: usize) -> LabeledRepresentation {
        LabeledRepresentation {
            rep: ImageRepresentation {
                f: vec![0.0],
                p: vec![0.0],
                o: vec![0.0],
            },
            label,
        }
    }

    #[test]
    fn grid_cardinality() {
        assert_eq!(simplex_grid(0.1).unwrap().len(), 66);
        assert_eq!(simplex_grid(1.0).unwrap().len(), 3);
        assert_eq!(simplex_grid(0.25).unwrap().len(), 15);
        assert!(simplex_grid(0.3).is_err());
        assert!(simplex_grid(0.0).is_err());
    }

    #[test]
    fn half_step_grid_is_six_point_simplex() {
        let grid: Vec<[f64; 3]> = simplex_grid(0.5)
            .unwrap()
            .iter()
            .map(FusionWeights::as_array)
            .collect();
        assert_eq!(
            grid,
            vec![
                [1.0, 0.0, 0.0],
                [0.5, 0.5, 0.0],
                [0.5, 0.0, 0.5],
                [0.0, 1.0, 0.0],
                [0.0, 0.5, 0.5],
                [0.0, 0.0, 1.0],
            ]
        );
    }

    #[test]
    fn grid_points_sum_to_one() {
        for w in simplex_grid(0.1).unwrap() {
            assert!((w.w_f + w.w_p + w.w_o - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_computed_fusion() {
        let w = FusionWeights::new(0.5, 0.5, 0.0).unwrap();
        let cs = fuse_scores(&w, &[0.9, 0.1], &[0.2, 0.8], &[0.5, 0.5]);
        assert!((cs[0] - 0.55).abs() < 1e-12 && (cs[1] - 0.45).abs() < 1e-12);
        assert_eq!(argmax(&cs), 0);
    }

    #[test]
    fn identical_classifiers_return_first_grid_point() {
        let c = Constant(vec![0.2, 0.8]);
        let val = vec![sample(1), sample(1), sample(0)];
        let fit = fit_fusion_weights([&c, &c, &c], &val, 0.1).unwrap();
        assert!((fit.accuracy - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(fit.weights.as_array(), [1.0, 0.0, 0.0]);
        assert_eq!(fit.grid_points, 66);
    }

    #[test]
    fn empty_validation_rejected() {
        let c = Constant(vec![0.5, 0.5]);
        assert!(fit_fusion_weights([&c, &c, &c], &[], 0.1).is_err());
    }

    #[test]
    fn mismatched_class_counts_rejected() {
        let a = Constant(vec![0.5, 0.5]);
        let b = Constant(vec![0.2, 0.3, 0.5]);
        assert!(fit_fusion_weights([&a, &a, &b], &[sample(0)], 0.1).is_err());
    }

    #[test]
    fn zero_weights_rejected() {
        assert!(FusionWeights::new(0.0, 0.0, 0.0).is_err());
        assert!(FusionWeights::new(-0.1, 0.5, 0.6).is_err());
    }
}
