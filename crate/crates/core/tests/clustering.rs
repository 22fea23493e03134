mod common;

use common::{brute_force_dbscan, canonical, random_instance};
use photo_profile::face_pipeline::{dbscan, ClusteringParams, NOISE};
use photo_profile::feature_records::{Gallery, GalleryHeader, GeoPoint};
use photo_profile::profiler::geo_locations;
use photo_profile::synthetic::random_gallery;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn three_blobs_and_five_isolated_points() {
    let mut points = Vec::new();
    for (cx, cy) in [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)] {
        for k in 0..6 {
            let t = k as f64;
            points.push(vec![cx + 0.1 * t, cy + 0.05 * t]);
        }
    }
    for k in 0..5 {
        points.push(vec![30.0 + 7.0 * k as f64, -20.0]);
    }
    let params = ClusteringParams::new(0.5, 3).unwrap();
    let labels = dbscan(&points, &params).unwrap();
    assert_eq!(labels, brute_force_dbscan(&points, 0.5, 3));
    let expected: Vec<i32> = (0..3)
        .flat_map(|c| std::iter::repeat_n(c, 6))
        .chain(std::iter::repeat_n(NOISE, 5))
        .collect();
    assert_eq!(labels, expected);
}

#[test]
fn matches_oracle_on_random_instances() {
    for seed in 0..100 {
        let inst = random_instance(seed, 80, 6);
        let params = ClusteringParams::new(inst.eps, inst.min_samples).unwrap();
        let got = dbscan(&inst.points, &params).unwrap();
        let want = brute_force_dbscan(&inst.points, inst.eps, inst.min_samples);
        assert_eq!(canonical(&got), canonical(&want), "seed {seed}");
    }
}

/// Core points form the same groups whatever the input order; only borders
/// shared between clusters may move.
fn core_partition(points: &[Vec<f64>], labels: &[i32], eps: f64, min: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut groups: std::collections::BTreeMap<i32, Vec<usize>> = Default::default();
    for i in 0..n {
        let is_core = (0..n)
            .filter(|&j| dist(&points[i], &points[j]) <= eps)
            .count()
            >= min;
        if is_core {
            groups.entry(labels[i]).or_default().push(i);
        }
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn permuting_input_preserves_core_partition(seed in any::<u64>()) {
        let inst = random_instance(seed, 60, 4);
        let params = ClusteringParams::new(inst.eps, inst.min_samples).unwrap();
        let mut perm: Vec<usize> = (0..inst.points.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed));
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| inst.points[i].clone()).collect();

        let a = dbscan(&inst.points, &params).unwrap();
        let b = dbscan(&permuted, &params).unwrap();
        // map permuted labels back to original indices
        let mut b_orig = vec![0; b.len()];
        for (pos, &i) in perm.iter().enumerate() {
            b_orig[i] = b[pos];
        }
        prop_assert_eq!(
            core_partition(&inst.points, &a, inst.eps, inst.min_samples),
            core_partition(&inst.points, &b_orig, inst.eps, inst.min_samples)
        );
        let noise_a: Vec<bool> = a.iter().map(|&l| l == NOISE).collect();
        let noise_b: Vec<bool> = b_orig.iter().map(|&l| l == NOISE).collect();
        prop_assert_eq!(noise_a, noise_b);
    }

    #[test]
    fn labels_are_noise_or_dense(seed in any::<u64>()) {
        let inst = random_instance(seed, 60, 3);
        let params = ClusteringParams::new(inst.eps, inst.min_samples).unwrap();
        let labels = dbscan(&inst.points, &params).unwrap();
        let mut ids: Vec<i32> = labels.iter().copied().filter(|&l| l != NOISE).collect();
        ids.sort();
        ids.dedup();
        // clusters are numbered 0..k without gaps
        prop_assert_eq!(ids.clone(), (0..ids.len() as i32).collect::<Vec<_>>());
        for id in ids {
            prop_assert!(labels.iter().filter(|&&l| l == id).count() >= inst.min_samples.min(inst.points.len()));
        }
    }
}

fn geo_gallery(points: &[(f64, f64)]) -> Gallery {
    let header = GalleryHeader::new(4, 4);
    let mut g = random_gallery(11, 2 * points.len(), &header);
    // keep one record per photo id so every point counts once
    g.records.dedup_by(|a, b| a.photo_id == b.photo_id);
    g.records.truncate(points.len());
    for (r, &(lat, lon)) in g.records.iter_mut().zip(points) {
        r.exif.geo = Some(GeoPoint {
            latitude: lat,
            longitude: lon,
        });
    }
    g
}

#[test]
fn geo_clusters_drop_far_points() {
    let mut pts: Vec<(f64, f64)> = (0..5).map(|i| (48.85 + 0.002 * i as f64, 2.35)).collect();
    pts.push((58.85, 2.35));
    let g = geo_gallery(&pts);
    assert_eq!(g.records.len(), 6);
    let locs = geo_locations(&g, 0.1).unwrap();
    assert_eq!(locs.len(), 1);
    assert_eq!(locs[0].count, 5);
    assert!((locs[0].latitude - 48.854).abs() < 1e-9);
}

#[test]
fn identical_coordinates_form_one_cluster() {
    let g = geo_gallery(&[(10.0, 20.0); 7]);
    let locs = geo_locations(&g, 0.1).unwrap();
    assert_eq!(locs.len(), 1);
    assert_eq!(locs[0].count, g.records.len());
}

#[test]
fn no_geo_tags_give_no_locations() {
    let header = GalleryHeader::new(4, 4);
    let mut g = random_gallery(4, 20, &header);
    g.records.iter_mut().for_each(|r| r.exif.geo = None);
    assert!(geo_locations(&g, 0.1).unwrap().is_empty());
}

#[test]
fn locations_sorted_by_count() {
    let mut pts = vec![(0.0, 0.0); 2];
    pts.extend(vec![(40.0, 40.0); 4]);
    pts.extend(vec![(-40.0, 100.0); 3]);
    let g = geo_gallery(&pts);
    let counts: Vec<usize> = geo_locations(&g, 0.1)
        .unwrap()
        .iter()
        .map(|l| l.count)
        .collect();
    assert_eq!(counts, vec![4, 3, 2]);
}
