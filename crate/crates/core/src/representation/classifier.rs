use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::View;
use crate::error::{Error, Result};
use crate::util::softmax;

/// Anything that maps one view of an image to `C` class confidences.
pub trait ViewClassifier {
    fn num_classes(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Class confidences summing to one.
    fn predict_scores(&self, input: &[f64]) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub learning_rate: f64,
    pub max_iter: usize,
    /// L2 penalty on the weights (not the biases).
    pub l2: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            max_iter: 500,
            l2: 1e-4,
            seed: 42,
        }
    }
}

/// Multinomial logistic regression on standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxRegression {
    pub view: View,
    mean: Array1<f64>,
    scale: Array1<f64>,
    weights: Array2<f64>,
    bias: Array1<f64>,
}

impl SoftmaxRegression {
    fn logits(&self, x: ArrayView1<f64>) -> Array1<f64> {
        let z = (&x - &self.mean) / &self.scale;
        self.weights.dot(&z) + &self.bias
    }
}

impl ViewClassifier for SoftmaxRegression {
    fn num_classes(&self) -> usize {
        self.bias.len()
    }

    fn input_dim(&self) -> usize {
        self.mean.len()
    }

    fn predict_scores(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_dim() {
            return Err(Error::InvalidInput(format!(
                "{:?} classifier expects {} inputs, got {}",
                self.view,
                self.input_dim(),
                input.len()
            )));
        }
        Ok(softmax(
            self.logits(ArrayView1::from(input))
                .as_slice()
                .expect("contiguous"),
        ))
    }
}

/// Trains the reference classifier for one view by full-batch gradient descent.
pub fn train_view_classifier<V: AsRef<[f64]>>(
    view: View,
    inputs: &[V],
    labels: &[usize],
    num_classes: usize,
    config: &ClassifierConfig,
) -> Result<SoftmaxRegression> {
    if inputs.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} inputs but {} labels",
            inputs.len(),
            labels.len()
        )));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for {num_classes} classes"
        )));
    }
    let distinct = labels
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    if distinct < 2 {
        return Err(Error::InvalidInput(format!(
            "{view:?} classifier needs at least two classes in the training set, found {distinct}"
        )));
    }
    let dim = inputs[0].as_ref().len();
    if let Some(i) = inputs.iter().position(|x| x.as_ref().len() != dim) {
        return Err(Error::InvalidInput(format!(
            "training vector {i} has length {}, expected {dim}",
            inputs[i].as_ref().len()
        )));
    }

    let n = inputs.len();
    let x = Array2::from_shape_fn((n, dim), |(i, j)| inputs[i].as_ref()[j]);
    let mean = x.mean_axis(ndarray::Axis(0)).expect("nonempty");
    let scale = x
        .std_axis(ndarray::Axis(0), 0.0)
        .mapv(|s| if s > 1e-12 { s } else { 1.0 });
    let z = (&x - &mean) / &scale;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights = Array2::from_shape_fn((num_classes, dim), |_| rng.random_range(-0.01..0.01));
    let mut bias = Array1::<f64>::zeros(num_classes);
    let mut targets = Array2::<f64>::zeros((n, num_classes));
    for (i, &l) in labels.iter().enumerate() {
        targets[[i, l]] = 1.0;
    }

    for _ in 0..config.max_iter {
        let mut probs = z.dot(&weights.t()) + &bias;
        for mut row in probs.rows_mut() {
            let s = softmax(row.as_slice().expect("contiguous"));
            row.assign(&Array1::from(s));
        }
        let residual = (probs - &targets) / n as f64;
        let grad_w = residual.t().dot(&z) + &weights * config.l2;
        let grad_b = residual.sum_axis(ndarray::Axis(0));
        weights.scaled_add(-config.learning_rate, &grad_w);
        bias.scaled_add(-config.learning_rate, &grad_b);
    }

    Ok(SoftmaxRegression {
        view,
        mean,
        scale,
        weights,
        bias,
    })
}

/// Fraction of `inputs` whose argmax prediction equals the label.
pub fn classifier_accuracy<C: ViewClassifier + ?Sized, V: AsRef<[f64]>>(
    classifier: &C,
    inputs: &[V],
    labels: &[usize],
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty set".into()));
    }
    let mut correct = 0usize;
    for (x, &l) in inputs.iter().zip(labels) {
        if crate::util::argmax(&classifier.predict_scores(x.as_ref())?) == l {
            correct += 1;
        }
    }
    Ok(correct as f64 / inputs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;

    fn separable(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for i in 0..n {
            let label = i % 2;
            let shift = if label == 0 { -2.0 } else { 2.0 };
            xs.push(vec![
                shift + rng.random_range(-1.0..1.0),
                rng.random_range(-3.0..3.0),
            ]);
            ys.push(label);
        }
        (xs, ys)
    }

    #[test]
    fn separable_toy_set_is_learned_exactly() {
        let (xs, ys) = separable(1, 60);
        let clf = train_view_classifier(View::Embedding, &xs, &ys, 2, &ClassifierConfig::default())
            .unwrap();
        assert_eq!(classifier_accuracy(&clf, &xs, &ys).unwrap(), 1.0);
        let scores = clf.predict_scores(&xs[0]).unwrap();
        assert!((scores.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn permuted_labels_give_chance_accuracy() {
        let c = 4;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let gen = |rng: &mut ChaCha8Rng, n: usize| {
            let xs: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..5).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let ys: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
            (xs, ys)
        };
        let (train_x, train_y) = gen(&mut rng, 400);
        let (test_x, test_y) = gen(&mut rng, 2000);
        let clf = train_view_classifier(
            View::SceneScores,
            &train_x,
            &train_y,
            c,
            &ClassifierConfig::default(),
        )
        .unwrap();
        let acc = classifier_accuracy(&clf, &test_x, &test_y).unwrap();
        assert!((acc - 0.25).abs() <= 0.1, "accuracy {acc}");
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let (xs, ys) = separable(3, 30);
        let cfg = ClassifierConfig::default();
        let a = train_view_classifier(View::Objects, &xs, &ys, 2, &cfg).unwrap();
        let b = train_view_classifier(View::Objects, &xs, &ys, 2, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_rejected() {
        let xs = vec![vec![1.0], vec![2.0]];
        let err = train_view_classifier(
            View::Embedding,
            &xs,
            &[1, 1],
            3,
            &ClassifierConfig::default(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (xs, ys) = separable(2, 10);
        let clf = train_view_classifier(View::Embedding, &xs, &ys, 2, &ClassifierConfig::default())
            .unwrap();
        assert!(clf.predict_scores(&[1.0, 2.0, 3.0]).is_err());
        let ragged = vec![vec![1.0, 2.0], vec![1.0]];
        assert!(train_view_classifier(
            View::Embedding,
            &ragged,
            &[0, 1],
            2,
            &ClassifierConfig::default()
        )
        .is_err());
    }

    #[test]
    fn constant_feature_does_not_break_standardization() {
        let xs = vec![
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![1.0, 0.1],
            vec![1.0, 0.9],
        ];
        let ys = vec![0, 1, 0, 1];
        let clf = train_view_classifier(View::Embedding, &xs, &ys, 2, &ClassifierConfig::default())
            .unwrap();
        assert_eq!(classifier_accuracy(&clf, &xs, &ys).unwrap(), 1.0);
    }
}
