use serde::{Deserialize, Serialize};

use super::{predict_user_profile, ProfileScorer, UserExample};
use crate::error::{Error, Result};

/// Mean per-user precision, recall and F1 of the top-k predicted categories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TopKMetrics {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Users without any ground-truth interest contribute zero recall and F1.
pub fn evaluate_top_k<P: ProfileScorer + ?Sized>(
    model: &P,
    users: &[UserExample],
    k: usize,
) -> Result<TopKMetrics> {
    if users.is_empty() {
        return Err(Error::InvalidInput("evaluation set is empty".into()));
    }
    let (mut precision, mut recall, mut f1) = (0.0, 0.0, 0.0);
    for user in users {
        let prediction = predict_user_profile(model, user.features.view(), k)?;
        let hits = prediction
            .top_k
            .iter()
            .filter(|c| user.interests.binary_search(c).is_ok())
            .count() as f64;
        let p = hits / k as f64;
        let r = if user.interests.is_empty() {
            0.0
        } else {
            hits / user.interests.len() as f64
        };
        precision += p;
        recall += r;
        if p + r > 0.0 {
            f1 += 2.0 * p * r / (p + r);
        }
    }
    let n = users.len() as f64;
    Ok(TopKMetrics {
        k,
        precision: precision / n,
        recall: recall / n,
        f1: f1 / n,
    })
}
