//! Gallery-level orchestration: demography, routing, tier selection,
//! categorization and the resulting interest counters.
//!
//! Counting is per media item: a photo counts once, and a video counts once
//! with the union of its frames' categories. Every map is ordered so the
//! serialized profile is byte-stable.

mod category;
mod report;

pub use category::{categorize_record, CategoryMap, CategoryThresholds};
pub use report::{render_text_report, write_profile_json};

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::face_pipeline::{analyze_demography, dbscan, ClusteringParams, DemographyReport, NOISE};
use crate::feature_records::{primary_records, Gallery, ImageFeatureRecord, Tier};
use crate::privacy_router::{
    route_photo, route_video, PrivacyConfig, RoutingDecision, TextSensitivityModel,
};

/// Positional sampling: every `stride`-th element, starting with the first.
pub fn select_video_frames(frame_indices: &[u64], stride: usize) -> Result<Vec<u64>> {
    if !(3..=5).contains(&stride) {
        return Err(Error::InvalidParameter(format!(
            "video frame stride must be 3, 4 or 5, got {stride}"
        )));
    }
    Ok(frame_indices.iter().step_by(stride).copied().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub privacy: PrivacyConfig,
    pub clustering: ClusteringParams,
    pub categories: CategoryThresholds,
    /// DBSCAN radius over (latitude, longitude), in degrees.
    pub geo_radius_deg: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            privacy: PrivacyConfig::default(),
            clustering: ClusteringParams::default(),
            categories: CategoryThresholds::default(),
            geo_radius_deg: 0.1,
        }
    }
}

impl ProfileConfig {
    pub fn validate(&self) -> Result<()> {
        self.privacy.validate()?;
        self.clustering.validate()?;
        self.categories.validate()?;
        if !(self.geo_radius_deg.is_finite() && self.geo_radius_deg > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "geo_radius_deg must be positive, got {}",
                self.geo_radius_deg
            )));
        }
        Ok(())
    }
}

/// Routing of every photo, frame and video in a gallery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryRouting {
    /// One decision per photo id (stills and frames), in gallery order.
    pub frames: Vec<RoutingDecision>,
    /// One decision per video, ordered by video id.
    pub videos: Vec<RoutingDecision>,
}

impl GalleryRouting {
    /// Still photos and whole videos, each decided once.
    pub fn items<'a>(&'a self, gallery: &'a Gallery) -> Vec<&'a RoutingDecision> {
        let stills: BTreeSet<&str> = primary_records(&gallery.records)
            .into_iter()
            .filter(|r| r.video_id().is_none())
            .map(|r| r.photo_id.as_str())
            .collect();
        self.frames
            .iter()
            .filter(|d| stills.contains(d.photo_id.as_str()))
            .chain(&self.videos)
            .collect()
    }
}

/// Demography followed by per-photo and per-video routing.
pub fn route_gallery(
    gallery: &Gallery,
    config: &ProfileConfig,
    text_model: &TextSensitivityModel,
) -> Result<(DemographyReport, GalleryRouting)> {
    config.validate()?;
    let demography = analyze_demography(&gallery.header, &gallery.records, &config.clustering)?;
    let mut frames = Vec::new();
    let mut by_video: BTreeMap<&str, Vec<RoutingDecision>> = BTreeMap::new();
    for record in primary_records(&gallery.records) {
        let decision = route_photo(
            record,
            &demography,
            &demography.face_labels,
            &config.privacy,
            text_model,
        )?;
        if let Some(v) = record.video_id() {
            by_video.entry(v).or_default().push(decision.clone());
        }
        frames.push(decision);
    }
    let videos = by_video
        .iter()
        .map(|(v, ds)| route_video(v, ds))
        .collect::<Result<_>>()?;
    Ok((demography, GalleryRouting { frames, videos }))
}

/// Number of (private, public) items; a video counts once.
pub fn routing_stats(items: &[&RoutingDecision]) -> (usize, usize) {
    let private = items.iter().filter(|d| d.is_private()).count();
    (private, items.len() - private)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoCluster {
    pub label: i32,
    pub latitude: f64,
    pub longitude: f64,
    pub count: usize,
}

/// Dense groups of geotagged photos by descending size, then label.
/// Coordinates are the cluster centroids; noise points are dropped.
pub fn geo_locations(gallery: &Gallery, radius_deg: f64) -> Result<Vec<GeoCluster>> {
    let points: Vec<[f64; 2]> = primary_records(&gallery.records)
        .into_iter()
        .filter_map(|r| r.exif.geo.map(|g| [g.latitude, g.longitude]))
        .collect();
    let labels = dbscan(&points, &ClusteringParams::new(radius_deg, 2)?)?;
    let mut sums: BTreeMap<i32, (f64, f64, usize)> = BTreeMap::new();
    for (p, &l) in points.iter().zip(&labels) {
        if l != NOISE {
            let e = sums.entry(l).or_default();
            e.0 += p[0];
            e.1 += p[1];
            e.2 += 1;
        }
    }
    let mut out: Vec<GeoCluster> = sums
        .into_iter()
        .map(|(label, (lat, lon, count))| GeoCluster {
            label,
            latitude: lat / count as f64,
            longitude: lon / count as f64,
            count,
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then(a.label.cmp(&b.label)));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    /// Category id to the number of items showing it.
    pub category_counters: BTreeMap<String, usize>,
    /// Group name to the summed counters of its categories.
    pub group_histogram: BTreeMap<String, usize>,
    pub top_locations: Vec<GeoCluster>,
    pub demography: DemographyReport,
    /// (private, public) item counts.
    pub routing_stats: (usize, usize),
}

impl UserProfile {
    /// Category counters normalized to sum to one; empty when nothing counted.
    pub fn category_distribution(&self) -> BTreeMap<String, f64> {
        let total: usize = self.category_counters.values().sum();
        if total == 0 {
            return BTreeMap::new();
        }
        self.category_counters
            .iter()
            .map(|(c, &n)| (c.clone(), n as f64 / total as f64))
            .collect()
    }

    /// The `n` most frequent categories, ties broken by name.
    pub fn top_categories(&self, n: usize) -> Vec<(&str, usize)> {
        let mut all: Vec<(&str, usize)> = self
            .category_counters
            .iter()
            .map(|(c, &k)| (c.as_str(), k))
            .collect();
        all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        all.truncate(n);
        all
    }

    /// Group with the largest count, ties broken by name.
    pub fn top_group(&self) -> Option<&str> {
        self.group_histogram
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(g, _)| g.as_str())
    }
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Item {
    Photo(String),
    Video(String),
}

/// Record used for categorization: the accurate tier for public items when
/// available, the fast tier otherwise.
fn choose_tier<'a>(
    primary: &'a ImageFeatureRecord,
    public: bool,
    accurate: &HashMap<&str, &'a ImageFeatureRecord>,
) -> &'a ImageFeatureRecord {
    if !public {
        return primary;
    }
    match accurate.get(primary.photo_id.as_str()) {
        Some(r) => r,
        None => {
            if primary.tier != Tier::Accurate {
                log::warn!(
                    "photo `{}` is public but has no accurate-tier record; using the fast tier",
                    primary.photo_id
                );
            }
            primary
        }
    }
}

pub fn build_profile(
    gallery: &Gallery,
    config: &ProfileConfig,
    map: &CategoryMap,
    text_model: &TextSensitivityModel,
) -> Result<UserProfile> {
    map.validate(&gallery.header)?;
    let (demography, routing) = route_gallery(gallery, config, text_model)?;
    let accurate: HashMap<&str, &ImageFeatureRecord> = gallery
        .records
        .iter()
        .filter(|r| r.tier == Tier::Accurate)
        .map(|r| (r.photo_id.as_str(), r))
        .collect();

    let frame_decisions: HashMap<&str, &RoutingDecision> = routing
        .frames
        .iter()
        .map(|d| (d.photo_id.as_str(), d))
        .collect();
    let video_decisions: HashMap<&str, &RoutingDecision> = routing
        .videos
        .iter()
        .map(|d| (d.photo_id.as_str(), d))
        .collect();

    let mut items: BTreeMap<Item, BTreeSet<String>> = BTreeMap::new();
    for primary in primary_records(&gallery.records) {
        let (item, decision) = match primary.video_id() {
            Some(v) => (Item::Video(v.to_string()), video_decisions[v]),
            None => (
                Item::Photo(primary.photo_id.clone()),
                frame_decisions[primary.photo_id.as_str()],
            ),
        };
        let record = choose_tier(primary, !decision.is_private(), &accurate);
        items
            .entry(item)
            .or_default()
            .extend(categorize_record(record, map, &config.categories));
    }

    let mut category_counters: BTreeMap<String, usize> = BTreeMap::new();
    for cats in items.values() {
        for c in cats {
            *category_counters.entry(c.clone()).or_default() += 1;
        }
    }
    let mut group_histogram: BTreeMap<String, usize> = BTreeMap::new();
    for (c, &n) in &category_counters {
        let group = map.group_of(c).expect("validated map");
        *group_histogram.entry(group.to_string()).or_default() += n;
    }

    Ok(UserProfile {
        category_counters,
        group_histogram,
        top_locations: geo_locations(gallery, config.geo_radius_deg)?,
        routing_stats: routing_stats(&routing.items(gallery)),
        demography,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_selection_examples() {
        let all: Vec<u64> = (0..12).collect();
        assert_eq!(select_video_frames(&all, 4).unwrap(), vec![0, 4, 8]);
        assert_eq!(select_video_frames(&[0, 1, 2], 5).unwrap(), vec![0]);
        assert!(select_video_frames(&[], 3).unwrap().is_empty());
        assert!(select_video_frames(&all, 2).is_err());
        assert!(select_video_frames(&all, 6).is_err());
    }

    #[test]
    fn positional_selection_keeps_order() {
        assert_eq!(
            select_video_frames(&[10, 3, 7, 1, 9], 3).unwrap(),
            vec![10, 1]
        );
    }
}
