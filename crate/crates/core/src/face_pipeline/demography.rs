use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::dbscan::{dbscan, ClusteringParams, NOISE};
use crate::error::Result;
use crate::feature_records::{primary_records, GalleryHeader, ImageFeatureRecord};
use crate::util::argmax;

/// Status reported when no unique owner cluster can be identified.
pub const NOT_ENOUGH_PHOTOS: &str =
    "Photos in the gallery are not enough to perform demography analysis";

/// Number of decade buckets in the histogram; the last one is open-ended.
pub const AGE_DECADES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    fn from_index(i: usize) -> Self {
        if i == crate::feature_records::GENDER_MALE {
            Gender::Male
        } else {
            Gender::Female
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMember {
    pub photo_id: String,
    pub face_index: usize,
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedGender {
    pub gender: Gender,
    /// Mean score of the winning gender, in [0.5, 1].
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedEthnicity {
    pub label: String,
    pub index: usize,
    pub confidence: f64,
}

/// One identity found in the gallery, with demographic attributes fused over
/// all of its faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceCluster {
    pub cluster_id: i32,
    pub members: Vec<ClusterMember>,
    /// Mean of (photo year - expected age) over timestamped members.
    pub fused_birth_year: Option<f64>,
    /// Mean expected age over all members.
    pub fused_age: f64,
    pub fused_gender: FusedGender,
    pub fused_ethnicity: FusedEthnicity,
    /// Number of distinct selfie photos among the members.
    pub selfie_count: usize,
    /// Distinct calendar dates among member timestamps.
    pub distinct_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramEntry {
    pub gender: Gender,
    /// Decade index: 0 for 0-9 years, ..., 8 for 80+.
    pub decade: usize,
    pub age_range: String,
    pub count: usize,
}

/// Cluster id of every face, keyed by photo id, in face order.
pub type FaceLabels = BTreeMap<String, Vec<i32>>;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DemographyReport {
    pub clusters: Vec<FaceCluster>,
    pub histogram: Vec<HistogramEntry>,
    pub owner: Option<i32>,
    pub status: Option<String>,
    pub face_labels: FaceLabels,
}

impl DemographyReport {
    pub fn cluster(&self, id: i32) -> Option<&FaceCluster> {
        self.clusters.iter().find(|c| c.cluster_id == id)
    }

    pub fn owner_cluster(&self) -> Option<&FaceCluster> {
        self.owner.and_then(|id| self.cluster(id))
    }
}

pub fn decade_label(decade: usize) -> String {
    if decade + 1 >= AGE_DECADES {
        format!("{}+", decade * 10)
    } else {
        format!("{}-{}", decade * 10, decade * 10 + 9)
    }
}

fn decade_of(age: f64) -> usize {
    if age <= 0.0 {
        0
    } else {
        ((age / 10.0).floor() as usize).min(AGE_DECADES - 1)
    }
}

/// Score-weighted mean of the age-bin midpoints.
pub fn expected_age(age_scores: &[f64], midpoints: &[f64]) -> f64 {
    let total: f64 = age_scores.iter().sum();
    let weighted: f64 = age_scores.iter().zip(midpoints).map(|(a, m)| a * m).sum();
    if total > 0.0 {
        weighted / total
    } else {
        0.0
    }
}

fn mean_vector<'a>(vectors: impl Iterator<Item = &'a [f64]>, len: usize) -> Vec<f64> {
    let mut sum = vec![0.0; len];
    let mut n = 0usize;
    for v in vectors {
        sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        n += 1;
    }
    if n > 0 {
        sum.iter_mut().for_each(|s| *s /= n as f64);
    }
    sum
}

/// Clusters all faces of a gallery and fuses per-identity demography.
///
/// When the same photo is present at both tiers, only its fast-tier record
/// contributes faces.
pub fn analyze_demography(
    header: &GalleryHeader,
    records: &[ImageFeatureRecord],
    params: &ClusteringParams,
) -> Result<DemographyReport> {
    params.validate()?;
    let records = primary_records(records);

    struct FaceRef<'a> {
        record: &'a ImageFeatureRecord,
        face_index: usize,
    }
    let faces: Vec<FaceRef> = records
        .iter()
        .flat_map(|r| {
            (0..r.faces.len()).map(move |face_index| FaceRef {
                record: r,
                face_index,
            })
        })
        .collect();
    let embeddings: Vec<&[f64]> = faces
        .iter()
        .map(|f| f.record.faces[f.face_index].identity_embedding.as_slice())
        .collect();
    let labels = dbscan(&embeddings, params)?;

    let mut face_labels: FaceLabels = BTreeMap::new();
    for r in &records {
        face_labels.insert(r.photo_id.clone(), Vec::with_capacity(r.faces.len()));
    }
    let mut by_cluster: BTreeMap<i32, Vec<&FaceRef>> = BTreeMap::new();
    for (face, &label) in faces.iter().zip(&labels) {
        face_labels
            .get_mut(&face.record.photo_id)
            .expect("every primary record has an entry")
            .push(label);
        if label != NOISE {
            by_cluster.entry(label).or_default().push(face);
        }
    }

    let midpoints = header.age_bin_midpoints();
    let mut clusters = Vec::with_capacity(by_cluster.len());
    for (cluster_id, members) in by_cluster {
        let obs = || members.iter().map(|m| &m.record.faces[m.face_index]);

        let ages: Vec<f64> = obs()
            .map(|f| expected_age(&f.age_scores, &midpoints))
            .collect();
        let fused_age = ages.iter().sum::<f64>() / ages.len() as f64;
        let birth_years: Vec<f64> = members
            .iter()
            .zip(&ages)
            .filter_map(|(m, age)| m.record.exif.year().map(|y| f64::from(y) - age))
            .collect();
        let fused_birth_year = (!birth_years.is_empty())
            .then(|| birth_years.iter().sum::<f64>() / birth_years.len() as f64);

        let gender_mean = mean_vector(obs().map(|f| f.gender_scores.as_slice()), 2);
        let g = argmax(&gender_mean);
        let ethnicity_mean = mean_vector(
            obs().map(|f| f.ethnicity_scores.as_slice()),
            header.ethnicity_labels.len(),
        );
        let e = argmax(&ethnicity_mean);

        let selfie_count = members
            .iter()
            .filter(|m| m.record.exif.is_selfie == Some(true))
            .map(|m| m.record.photo_id.as_str())
            .collect::<BTreeSet<_>>()
            .len();
        let distinct_days = members
            .iter()
            .filter_map(|m| m.record.exif.date())
            .collect::<BTreeSet<_>>()
            .len();

        clusters.push(FaceCluster {
            cluster_id,
            members: members
                .iter()
                .map(|m| ClusterMember {
                    photo_id: m.record.photo_id.clone(),
                    face_index: m.face_index,
                    timestamp: m.record.exif.timestamp,
                })
                .collect(),
            fused_birth_year,
            fused_age,
            fused_gender: FusedGender {
                gender: Gender::from_index(g),
                confidence: gender_mean[g],
            },
            fused_ethnicity: FusedEthnicity {
                label: header.ethnicity_labels[e].clone(),
                index: e,
                confidence: ethnicity_mean[e],
            },
            selfie_count,
            distinct_days,
        });
    }

    let mut buckets: BTreeMap<(Gender, usize), usize> = BTreeMap::new();
    for c in &clusters {
        *buckets
            .entry((c.fused_gender.gender, decade_of(c.fused_age)))
            .or_default() += 1;
    }
    let histogram = buckets
        .into_iter()
        .map(|((gender, decade), count)| HistogramEntry {
            gender,
            decade,
            age_range: decade_label(decade),
            count,
        })
        .collect();

    let owner = find_owner(&clusters);
    Ok(DemographyReport {
        clusters,
        histogram,
        owner,
        status: owner.is_none().then(|| NOT_ENOUGH_PHOTOS.to_string()),
        face_labels,
    })
}

/// The owner is the only cluster attaining the maximal positive selfie count.
fn find_owner(clusters: &[FaceCluster]) -> Option<i32> {
    let max = clusters.iter().map(|c| c.selfie_count).max()?;
    if max == 0 {
        return None;
    }
    let mut best = clusters.iter().filter(|c| c.selfie_count == max);
    match (best.next(), best.next()) {
        (Some(c), None) => Some(c.cluster_id),
        _ => None,
    }
}

/// Clusters large and recurring enough to mark their faces as important people.
pub fn important_clusters(
    report: &DemographyReport,
    min_photos: usize,
    min_days: usize,
) -> BTreeSet<i32> {
    report
        .clusters
        .iter()
        .filter(|c| c.members.len() >= min_photos && c.distinct_days >= min_days)
        .map(|c| c.cluster_id)
        .collect()
}

/// Plain-text table of clusters and the gender/age histogram.
pub fn render_summary(report: &DemographyReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>7}  {:>7}  {:>6}  {:>10}  {:<14}  {:>7}  {:>4}",
        "cluster", "members", "gender", "birth year", "ethnicity", "selfies", "days"
    );
    for c in &report.clusters {
        let gender = match c.fused_gender.gender {
            Gender::Male => "male",
            Gender::Female => "female",
        };
        let birth = c
            .fused_birth_year
            .map_or_else(|| "-".to_string(), |y| format!("{y:.1}"));
        let marker = if report.owner == Some(c.cluster_id) {
            " *"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "{:>7}  {:>7}  {:>6}  {:>10}  {:<14}  {:>7}  {:>4}{}",
            c.cluster_id,
            c.members.len(),
            gender,
            birth,
            c.fused_ethnicity.label,
            c.selfie_count,
            c.distinct_days,
            marker
        );
    }
    out.push('\n');
    for h in &report.histogram {
        let gender = match h.gender {
            Gender::Male => "male",
            Gender::Female => "female",
        };
        let _ = writeln!(
            out,
            "{:<6} {:>6}  {}",
            gender,
            h.age_range,
            "#".repeat(h.count)
        );
    }
    if let Some(status) = &report.status {
        let _ = writeln!(out, "\n{status}");
    }
    out
}
