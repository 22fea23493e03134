use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label assigned to points that belong to no cluster.
pub const NOISE: i32 = -1;

/// Density parameters shared by face and geo clustering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringParams {
    /// Maximal distance between two faces of the same person (inclusive).
    pub eps: f64,
    /// Minimal neighbourhood size of a core point, the point itself included.
    pub min_samples: usize,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        Self {
            eps: 0.9,
            min_samples: 2,
        }
    }
}

impl ClusteringParams {
    pub fn new(eps: f64, min_samples: usize) -> Result<Self> {
        let params = Self { eps, min_samples };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.min_samples == 0 {
            return Err(Error::InvalidParameter("min_samples must be >= 1".into()));
        }
        Ok(())
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Density-based clustering with Euclidean distance.
///
/// Points are scanned in index order and clusters are numbered in order of
/// discovery, so the output is a deterministic function of the input order.
/// A border point reachable from several clusters joins the earliest one.
pub fn dbscan<P: AsRef<[f64]>>(points: &[P], params: &ClusteringParams) -> Result<Vec<i32>> {
    params.validate()?;
    let n = points.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let dim = points[0].as_ref().len();
    if let Some(i) = points.iter().position(|p| p.as_ref().len() != dim) {
        return Err(Error::InvalidInput(format!(
            "point {i} has dimension {}, expected {dim}",
            points[i].as_ref().len()
        )));
    }

    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let pi = points[i].as_ref();
            (0..n)
                .filter(|&j| euclidean(pi, points[j].as_ref()) <= params.eps)
                .collect()
        })
        .collect();

    const UNSEEN: i32 = i32::MIN;
    let mut labels = vec![UNSEEN; n];
    let mut next_cluster = 0;
    let mut queue = VecDeque::new();

    for start in 0..n {
        if labels[start] != UNSEEN {
            continue;
        }
        if neighbours[start].len() < params.min_samples {
            labels[start] = NOISE;
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[start] = cluster;
        queue.extend(neighbours[start].iter().copied());
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                labels[j] = cluster;
            }
            if labels[j] != UNSEEN {
                continue;
            }
            labels[j] = cluster;
            if neighbours[j].len() >= params.min_samples {
                queue.extend(neighbours[j].iter().copied());
            }
        }
    }
    Ok(labels)
}
