//! Sensitive-document detector for OCR text.
//!
//! Token presence over a learned vocabulary feeds a fully connected network
//! with two tanh hidden layers and a sigmoid output, trained with logistic
//! loss by full-batch gradient descent.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{sigmoid, softplus};

const REFERENCE_CORPUS: &str = include_str!("../../data/text_sensitivity_corpus.tsv");

/// Labeled synthetic corpus shipped with the crate: `(text, is_sensitive)`.
pub fn reference_corpus() -> Vec<(String, bool)> {
    parse_corpus(REFERENCE_CORPUS).expect("bundled corpus is well formed")
}

/// Parses `label<TAB>text` lines; `#` starts a comment line.
pub fn parse_corpus(text: &str) -> Result<Vec<(String, bool)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::InvalidInput(format!("corpus line {}: missing tab", i + 1)))?;
        let label = match label.trim() {
            "1" => true,
            "0" => false,
            other => {
                return Err(Error::InvalidInput(format!(
                    "corpus line {}: label must be 0 or 1, got `{other}`",
                    i + 1
                )))
            }
        };
        out.push((body.to_string(), label));
    }
    Ok(out)
}

/// Lowercased word tokens. Pure digit runs become `<num>`, mixed
/// letter/digit runs become `<code>`; single letters are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter_map(|t| {
            let has_digit = t.chars().any(|c| c.is_ascii_digit());
            let has_alpha = t.chars().any(|c| c.is_alphabetic());
            match (has_alpha, has_digit) {
                (false, true) => Some("<num>".to_string()),
                (true, true) => Some("<code>".to_string()),
                _ if t.chars().count() < 2 => None,
                _ => Some(t.to_lowercase()),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextModelConfig {
    pub hidden: (usize, usize),
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TextModelConfig {
    fn default() -> Self {
        Self {
            hidden: (16, 8),
            learning_rate: 0.5,
            epochs: 600,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextSensitivityModel {
    /// Sorted vocabulary; a token's position is its input feature index.
    vocabulary: Vec<String>,
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
    w3: Array1<f64>,
    b3: f64,
}

struct Activations {
    h1: Array1<f64>,
    h2: Array1<f64>,
    logit: f64,
}

struct Gradients {
    w1: Array2<f64>,
    b1: Array1<f64>,
    w2: Array2<f64>,
    b2: Array1<f64>,
    w3: Array1<f64>,
    b3: f64,
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize) -> Array2<f64> {
    let bound = 1.0 / (fan_in.max(1) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-bound..bound))
}

impl TextSensitivityModel {
    /// The reference model trained on [`reference_corpus`], built once.
    pub fn reference() -> &'static TextSensitivityModel {
        static MODEL: OnceLock<TextSensitivityModel> = OnceLock::new();
        MODEL.get_or_init(|| {
            TextSensitivityModel::train(&reference_corpus(), &TextModelConfig::default())
                .expect("bundled corpus has both classes")
        })
    }

    pub fn train(corpus: &[(String, bool)], config: &TextModelConfig) -> Result<Self> {
        if !corpus.iter().any(|(_, s)| *s) || !corpus.iter().any(|(_, s)| !*s) {
            return Err(Error::InvalidInput(
                "text corpus needs both sensitive and non-sensitive examples".into(),
            ));
        }
        let (h1, h2) = config.hidden;
        if h1 == 0 || h2 == 0 {
            return Err(Error::InvalidParameter(
                "hidden layer sizes must be positive".into(),
            ));
        }
        let vocabulary: Vec<String> = corpus
            .iter()
            .flat_map(|(text, _)| tokenize(text))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let vocab_len = vocabulary.len();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut model = Self {
            w1: uniform(&mut rng, h1, vocab_len, vocab_len),
            b1: Array1::zeros(h1),
            w2: uniform(&mut rng, h2, h1, h1),
            b2: Array1::zeros(h2),
            w3: uniform(&mut rng, 1, h2, h2).row(0).to_owned(),
            b3: 0.0,
            vocabulary,
        };

        let docs: Vec<(Vec<usize>, f64)> = corpus
            .iter()
            .map(|(text, s)| (model.features(text), if *s { 1.0 } else { 0.0 }))
            .collect();
        for _ in 0..config.epochs {
            let (_, grad) = model.loss_and_gradient(&docs);
            model.w1.scaled_add(-config.learning_rate, &grad.w1);
            model.b1.scaled_add(-config.learning_rate, &grad.b1);
            model.w2.scaled_add(-config.learning_rate, &grad.w2);
            model.b2.scaled_add(-config.learning_rate, &grad.b2);
            model.w3.scaled_add(-config.learning_rate, &grad.w3);
            model.b3 -= config.learning_rate * grad.b3;
        }
        Ok(model)
    }

    pub fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    /// Sorted, deduplicated vocabulary indices of the tokens present in `text`.
    fn features(&self, text: &str) -> Vec<usize> {
        tokenize(text)
            .iter()
            .filter_map(|t| self.vocabulary.binary_search(t).ok())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    fn forward(&self, active: &[usize]) -> Activations {
        let mut a1 = self.b1.clone();
        for &t in active {
            a1 += &self.w1.column(t);
        }
        let h1 = a1.mapv(f64::tanh);
        let h2 = (self.w2.dot(&h1) + &self.b2).mapv(f64::tanh);
        let logit = self.w3.dot(&h2) + self.b3;
        Activations { h1, h2, logit }
    }

    /// Mean logistic loss and its gradient over `(active tokens, target)` pairs.
    fn loss_and_gradient(&self, docs: &[(Vec<usize>, f64)]) -> (f64, Gradients) {
        let mut g = Gradients {
            w1: Array2::zeros(self.w1.raw_dim()),
            b1: Array1::zeros(self.b1.len()),
            w2: Array2::zeros(self.w2.raw_dim()),
            b2: Array1::zeros(self.b2.len()),
            w3: Array1::zeros(self.w3.len()),
            b3: 0.0,
        };
        let n = docs.len() as f64;
        let mut loss = 0.0;
        for (active, target) in docs {
            let act = self.forward(active);
            loss += softplus(act.logit) - target * act.logit;
            let d_logit = (sigmoid(act.logit) - target) / n;
            g.w3.scaled_add(d_logit, &act.h2);
            g.b3 += d_logit;
            let d_a2 = (&self.w3 * d_logit) * act.h2.mapv(|h| 1.0 - h * h);
            for (i, &d) in d_a2.iter().enumerate() {
                g.w2.row_mut(i).scaled_add(d, &act.h1);
            }
            g.b2 += &d_a2;
            let d_a1 = self.w2.t().dot(&d_a2) * act.h1.mapv(|h| 1.0 - h * h);
            for &t in active {
                g.w1.column_mut(t).scaled_add(1.0, &d_a1);
            }
            g.b1 += &d_a1;
        }
        (loss / n, g)
    }

    /// Positive-class score of `text`, in [0, 1].
    pub fn score(&self, text: &str) -> f64 {
        sigmoid(self.forward(&self.features(text)).logit)
    }
}

/// Classifies OCR text; empty or whitespace-only text is never sensitive.
pub fn classify_text_sensitivity(text: &str, model: &TextSensitivityModel) -> (bool, f64) {
    if text.trim().is_empty() {
        return (false, 0.0);
    }
    let confidence = model.score(text);
    (confidence >= 0.5, confidence)
}
