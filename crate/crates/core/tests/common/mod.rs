#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

/// Clustering straight from the density definitions: core points are those
/// with at least `min_samples` points within `eps` (itself included); clusters
/// are connected components of the core graph, numbered by their smallest
/// core index; a border point takes the lowest-numbered cluster among the
/// cores within `eps`; everything else is -1.
pub fn brute_force_dbscan(points: &[Vec<f64>], eps: f64, min_samples: usize) -> Vec<i32> {
    let n = points.len();
    let close = |i: usize, j: usize| distance(&points[i], &points[j]) <= eps;
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| close(i, j)).count() >= min_samples)
        .collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if core[i] && core[j] && close(i, j) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut numbering: BTreeMap<usize, i32> = BTreeMap::new();
    let mut root_label = vec![-1; n];
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            let next = numbering.len() as i32;
            root_label[i] = *numbering.entry(r).or_insert(next);
        }
    }
    (0..n)
        .map(|i| {
            if core[i] {
                root_label[i]
            } else {
                (0..n)
                    .filter(|&j| core[j] && close(i, j))
                    .map(|j| root_label[j])
                    .min()
                    .unwrap_or(-1)
            }
        })
        .collect()
}

/// Renumbers labels by first appearance, keeping -1.
pub fn canonical(labels: &[i32]) -> Vec<i32> {
    let mut map: BTreeMap<i32, i32> = BTreeMap::new();
    labels
        .iter()
        .map(|&l| {
            if l < 0 {
                -1
            } else {
                let next = map.len() as i32;
                *map.entry(l).or_insert(next)
            }
        })
        .collect()
}

/// Random clustering instance: a few Gaussian-ish blobs plus uniform noise.
pub struct Instance {
    pub points: Vec<Vec<f64>>,
    pub eps: f64,
    pub min_samples: usize,
}

pub fn random_instance(seed: u64, max_n: usize, max_dim: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let dim = rng.random_range(1..=max_dim);
    let blobs = rng.random_range(1..=5);
    let centers: Vec<Vec<f64>> = (0..blobs)
        .map(|_| (0..dim).map(|_| rng.random_range(-10.0..10.0)).collect())
        .collect();
    let spread = rng.random_range(0.2..2.0);
    let points = (0..n)
        .map(|_| {
            if rng.random_bool(0.8) {
                let c = &centers[rng.random_range(0..blobs)];
                c.iter()
                    .map(|v| v + rng.random_range(-spread..spread))
                    .collect()
            } else {
                (0..dim).map(|_| rng.random_range(-12.0..12.0)).collect()
            }
        })
        .collect();
    Instance {
        points,
        eps: rng.random_range(0.1..3.0) * (dim as f64).sqrt(),
        min_samples: rng.random_range(1..=8),
    }
}
