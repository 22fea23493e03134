//! Pooling a user's photo set into one descriptor and predicting interests.
//!
//! Every photo feature `x(m)` is squeezed to `s(m) = W_s x(m)`, attention
//! weights are the softmax of `q . s(m)` over the set, and the descriptor is
//! the weighted sum of the squeezed features. A layer of `C` independent
//! logistic regressions on the descriptor gives the interest scores. The
//! whole model is trained end to end on binary per-category targets.

mod dataset;
mod metrics;
mod train;

pub use dataset::{read_users, write_users, UserExample, UsersHeader};
pub use metrics::{evaluate_top_k, TopKMetrics};
pub use train::{
    loss, loss_and_gradient, train_aggregator, train_aggregator_with_history,
    train_average_pooling, AggregatorConfig, AggregatorGradient,
};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{sigmoid, softmax, top_k_indices};

/// Squeeze projection, attention query and multi-label head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatorModel {
    /// `W_s`, shape `(K̃, K)`.
    pub squeeze: Array2<f64>,
    /// `q`, length `K̃`.
    pub query: Array1<f64>,
    /// Shape `(C, K̃)`.
    pub head_weights: Array2<f64>,
    /// Length `C`.
    pub head_bias: Array1<f64>,
}

/// Dimensions of an aggregator: input size, squeezed size and category count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatorDims {
    pub input: usize,
    pub reduced: usize,
    pub classes: usize,
}

/// Parameters added on top of plain averaging: `W_s` plus `q`, i.e. `(K+1)·K̃`.
pub fn attention_parameter_count(input_dim: usize, reduced_dim: usize) -> usize {
    (input_dim + 1) * reduced_dim
}

impl AggregatorModel {
    pub fn new(
        squeeze: Array2<f64>,
        query: Array1<f64>,
        head_weights: Array2<f64>,
        head_bias: Array1<f64>,
    ) -> Result<Self> {
        let model = Self {
            squeeze,
            query,
            head_weights,
            head_bias,
        };
        model.validate()?;
        Ok(model)
    }

    /// Seeded initialization: `W_s` and the head uniform in `±1/sqrt(fan_in)`,
    /// `q` and biases zero, so an untrained model pools by plain averaging.
    pub fn initialize(dims: AggregatorDims, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |rows: usize, cols: usize| {
            let bound = 1.0 / (cols.max(1) as f64).sqrt();
            Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
        };
        let squeeze = uniform(dims.reduced, dims.input);
        let head_weights = uniform(dims.classes, dims.reduced);
        Self::new(
            squeeze,
            Array1::zeros(dims.reduced),
            head_weights,
            Array1::zeros(dims.classes),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let (reduced, input) = self.squeeze.dim();
        if reduced == 0 || reduced >= input {
            return Err(Error::InvalidParameter(format!(
                "squeezed dimension must satisfy 0 < K̃ < K, got K̃={reduced}, K={input}"
            )));
        }
        if self.query.len() != reduced {
            return Err(Error::InvalidParameter(format!(
                "query length {} does not match K̃={reduced}",
                self.query.len()
            )));
        }
        let (classes, head_in) = self.head_weights.dim();
        if classes == 0 || head_in != reduced || self.head_bias.len() != classes {
            return Err(Error::InvalidParameter(format!(
                "head shape ({classes}, {head_in}) with {} biases does not fit K̃={reduced}",
                self.head_bias.len()
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> AggregatorDims {
        AggregatorDims {
            input: self.squeeze.ncols(),
            reduced: self.squeeze.nrows(),
            classes: self.head_bias.len(),
        }
    }

    /// Number of attention-block parameters actually held by the model.
    pub fn attention_parameters(&self) -> usize {
        self.squeeze.len() + self.query.len()
    }

    fn check_features(&self, features: ArrayView2<f64>) -> Result<()> {
        let (m, k) = features.dim();
        if m == 0 {
            return Err(Error::InvalidInput(
                "a photo set needs at least one photo".into(),
            ));
        }
        if k != self.squeeze.ncols() {
            return Err(Error::InvalidInput(format!(
                "feature dimension {k} does not match model input {}",
                self.squeeze.ncols()
            )));
        }
        Ok(())
    }

    /// Squeezed features `s(m)` as rows, shape `(M, K̃)`.
    fn squeezed(&self, features: ArrayView2<f64>) -> Array2<f64> {
        features.dot(&self.squeeze.t())
    }
}

fn softmax_array(logits: &Array1<f64>) -> Array1<f64> {
    Array1::from(softmax(logits.as_slice().expect("contiguous")))
}

/// Softmax attention weight of each photo in the set.
pub fn attention_weights(
    model: &AggregatorModel,
    features: ArrayView2<f64>,
) -> Result<Array1<f64>> {
    model.check_features(features)?;
    Ok(softmax_array(&model.squeezed(features).dot(&model.query)))
}

/// Attention-weighted sum of the squeezed features, length `K̃`.
pub fn aggregate(model: &AggregatorModel, features: ArrayView2<f64>) -> Result<Array1<f64>> {
    model.check_features(features)?;
    let s = model.squeezed(features);
    let w = softmax_array(&s.dot(&model.query));
    Ok(s.t().dot(&w))
}

/// Component-wise mean of the set, length `K`.
pub fn average_baseline(features: ArrayView2<f64>) -> Result<Array1<f64>> {
    features
        .mean_axis(Axis(0))
        .ok_or_else(|| Error::InvalidInput("a photo set needs at least one photo".into()))
}

/// Anything that turns a photo set into per-category interest scores.
pub trait ProfileScorer {
    fn num_classes(&self) -> usize;
    fn score(&self, features: ArrayView2<f64>) -> Result<Vec<f64>>;
}

impl ProfileScorer for AggregatorModel {
    fn num_classes(&self) -> usize {
        self.head_bias.len()
    }

    fn score(&self, features: ArrayView2<f64>) -> Result<Vec<f64>> {
        let descriptor = aggregate(self, features)?;
        let logits = self.head_weights.dot(&descriptor) + &self.head_bias;
        Ok(logits.iter().map(|&z| sigmoid(z)).collect())
    }
}

/// Logistic head on the mean feature vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragePoolingModel {
    /// Shape `(C, K)`.
    pub head_weights: Array2<f64>,
    pub head_bias: Array1<f64>,
}

impl ProfileScorer for AveragePoolingModel {
    fn num_classes(&self) -> usize {
        self.head_bias.len()
    }

    fn score(&self, features: ArrayView2<f64>) -> Result<Vec<f64>> {
        if features.ncols() != self.head_weights.ncols() {
            return Err(Error::InvalidInput(format!(
                "feature dimension {} does not match model input {}",
                features.ncols(),
                self.head_weights.ncols()
            )));
        }
        let mean = average_baseline(features)?;
        let logits = self.head_weights.dot(&mean) + &self.head_bias;
        Ok(logits.iter().map(|&z| sigmoid(z)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePrediction {
    pub scores: Vec<f64>,
    /// Category indices by descending score, lowest index first on ties.
    pub top_k: Vec<usize>,
}

pub fn predict_user_profile<P: ProfileScorer + ?Sized>(
    model: &P,
    features: ArrayView2<f64>,
    k: usize,
) -> Result<ProfilePrediction> {
    let classes = model.num_classes();
    if k == 0 || k > classes {
        return Err(Error::InvalidParameter(format!(
            "top-k must lie in 1..={classes}, got {k}"
        )));
    }
    let scores = model.score(features)?;
    let top_k = top_k_indices(&scores, k);
    Ok(ProfilePrediction { scores, top_k })
}
