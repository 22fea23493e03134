use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AggregatorDims, AggregatorModel, AveragePoolingModel, UserExample};
use crate::error::{Error, Result};
use crate::util::{sigmoid, softmax, softplus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregatorConfig {
    /// Squeezed dimension `K̃`, strictly below the feature dimension.
    pub reduced_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Larger photo sets are subsampled to this size each epoch; 0 disables.
    pub fixed_set_size: usize,
}

impl Default for AggregatorConfig {
    fn default() -> Self {
        Self {
            reduced_dim: 128,
            learning_rate: 0.5,
            epochs: 200,
            batch_size: 16,
            seed: 13,
            fixed_set_size: 10,
        }
    }
}

impl AggregatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reduced_dim == 0 || self.batch_size == 0 {
            return Err(Error::InvalidParameter(
                "reduced_dim and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Gradient of the loss with respect to every model parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatorGradient {
    pub squeeze: Array2<f64>,
    pub query: Array1<f64>,
    pub head_weights: Array2<f64>,
    pub head_bias: Array1<f64>,
}

impl AggregatorGradient {
    fn zeros(dims: AggregatorDims) -> Self {
        Self {
            squeeze: Array2::zeros((dims.reduced, dims.input)),
            query: Array1::zeros(dims.reduced),
            head_weights: Array2::zeros((dims.classes, dims.reduced)),
            head_bias: Array1::zeros(dims.classes),
        }
    }

    fn scale(&mut self, factor: f64) {
        self.squeeze *= factor;
        self.query *= factor;
        self.head_weights *= factor;
        self.head_bias *= factor;
    }
}

/// Mean binary cross-entropy over categories, from logits.
fn bce(logits: ArrayView1<f64>, targets: &[f64]) -> f64 {
    let c = targets.len() as f64;
    logits
        .iter()
        .zip(targets)
        .map(|(&z, &t)| softplus(z) - t * z)
        .sum::<f64>()
        / c
}

/// Adds one set's gradient into `grad` and returns its loss.
fn accumulate(
    model: &AggregatorModel,
    x: ArrayView2<f64>,
    targets: &[f64],
    grad: &mut AggregatorGradient,
) -> f64 {
    let s = x.dot(&model.squeeze.t());
    let z = s.dot(&model.query);
    let w = Array1::from(softmax(z.as_slice().expect("contiguous")));
    let d = s.t().dot(&w);
    let logits = model.head_weights.dot(&d) + &model.head_bias;

    let classes = targets.len() as f64;
    let g = Array1::from_iter(
        logits
            .iter()
            .zip(targets)
            .map(|(&l, &t)| (sigmoid(l) - t) / classes),
    );
    // head
    grad.head_weights += &outer(g.view(), d.view());
    grad.head_bias += &g;
    // through the weighted sum and the softmax
    let dd = model.head_weights.t().dot(&g);
    let dw = s.dot(&dd);
    let mean_dw = w.dot(&dw);
    let dz = &w * &(dw - mean_dw);
    grad.query += &s.t().dot(&dz);
    let ds = outer(w.view(), dd.view()) + outer(dz.view(), model.query.view());
    grad.squeeze += &ds.t().dot(&x);

    bce(logits.view(), targets)
}

fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    let a2 = a.insert_axis(Axis(1));
    let b2 = b.insert_axis(Axis(0));
    a2.dot(&b2)
}

fn check_examples(examples: &[UserExample], input: usize, classes: usize) -> Result<()> {
    if examples.is_empty() {
        return Err(Error::InvalidInput("no user examples".into()));
    }
    for u in examples {
        if u.features.nrows() == 0 || u.features.ncols() != input {
            return Err(Error::InvalidInput(format!(
                "user {} has features of shape {:?}, expected (M>0, {input})",
                u.user_id,
                u.features.dim()
            )));
        }
        if u.interests.iter().any(|&c| c >= classes) {
            return Err(Error::InvalidInput(format!(
                "user {} has an interest outside {classes} categories",
                u.user_id
            )));
        }
    }
    Ok(())
}

/// Mean loss over `examples` and its exact gradient, using every photo.
pub fn loss_and_gradient(
    model: &AggregatorModel,
    examples: &[UserExample],
) -> Result<(f64, AggregatorGradient)> {
    let dims = model.dims();
    check_examples(examples, dims.input, dims.classes)?;
    let mut grad = AggregatorGradient::zeros(dims);
    let mut total = 0.0;
    for u in examples {
        total += accumulate(
            model,
            u.features.view(),
            &u.targets(dims.classes),
            &mut grad,
        );
    }
    let n = examples.len() as f64;
    grad.scale(1.0 / n);
    Ok((total / n, grad))
}

pub fn loss(model: &AggregatorModel, examples: &[UserExample]) -> Result<f64> {
    Ok(loss_and_gradient(model, examples)?.0)
}

fn subsample(features: &Array2<f64>, size: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let m = features.nrows();
    if size == 0 || m <= size {
        return features.clone();
    }
    let mut picked = index::sample(rng, m, size).into_vec();
    picked.sort_unstable();
    features.select(Axis(0), &picked)
}

pub fn train_aggregator(
    train: &[UserExample],
    num_classes: usize,
    config: &AggregatorConfig,
) -> Result<AggregatorModel> {
    Ok(train_aggregator_with_history(train, num_classes, config)?.0)
}

/// Trains by seeded mini-batch gradient descent; also returns the full-set
/// training loss after every epoch.
pub fn train_aggregator_with_history(
    train: &[UserExample],
    num_classes: usize,
    config: &AggregatorConfig,
) -> Result<(AggregatorModel, Vec<f64>)> {
    config.validate()?;
    let input = train
        .first()
        .ok_or_else(|| Error::InvalidInput("no user examples".into()))?
        .features
        .ncols();
    check_examples(train, input, num_classes)?;
    let dims = AggregatorDims {
        input,
        reduced: config.reduced_dim,
        classes: num_classes,
    };
    let mut model = AggregatorModel::initialize(dims, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let targets: Vec<Vec<f64>> = train.iter().map(|u| u.targets(num_classes)).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut grad = AggregatorGradient::zeros(dims);
            for &i in batch {
                let x = subsample(&train[i].features, config.fixed_set_size, &mut rng);
                accumulate(&model, x.view(), &targets[i], &mut grad);
            }
            let step = -config.learning_rate / batch.len() as f64;
            model.squeeze.scaled_add(step, &grad.squeeze);
            model.query.scaled_add(step, &grad.query);
            model.head_weights.scaled_add(step, &grad.head_weights);
            model.head_bias.scaled_add(step, &grad.head_bias);
        }
        history.push(loss(&model, train)?);
    }
    Ok((model, history))
}

/// Trains the logistic head of the mean-pooling baseline with the same
/// schedule; every photo of a set enters the mean.
pub fn train_average_pooling(
    train: &[UserExample],
    num_classes: usize,
    config: &AggregatorConfig,
) -> Result<AveragePoolingModel> {
    config.validate()?;
    let input = train
        .first()
        .ok_or_else(|| Error::InvalidInput("no user examples".into()))?
        .features
        .ncols();
    check_examples(train, input, num_classes)?;
    let means: Vec<Array1<f64>> = train
        .iter()
        .map(|u| u.features.mean_axis(Axis(0)).expect("nonempty"))
        .collect();
    let targets: Vec<Vec<f64>> = train.iter().map(|u| u.targets(num_classes)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let bound = 1.0 / (input as f64).sqrt();
    let mut weights =
        Array2::from_shape_fn((num_classes, input), |_| rng.random_range(-bound..bound));
    let mut bias = Array1::<f64>::zeros(num_classes);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let classes = num_classes as f64;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let mut gw = Array2::<f64>::zeros(weights.dim());
            let mut gb = Array1::<f64>::zeros(num_classes);
            for &i in batch {
                let logits = weights.dot(&means[i]) + &bias;
                let g = Array1::from_iter(
                    logits
                        .iter()
                        .zip(&targets[i])
                        .map(|(&l, &t)| (sigmoid(l) - t) / classes),
                );
                gw += &outer(g.view(), means[i].view());
                gb += &g;
            }
            let step = -config.learning_rate / batch.len() as f64;
            weights.scaled_add(step, &gw);
            bias.scaled_add(step, &gb);
        }
    }
    Ok(AveragePoolingModel {
        head_weights: weights,
        head_bias: bias,
    })
}
