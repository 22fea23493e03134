//! Per-photo extractor output and the line-delimited record file format.
//!
//! A gallery file starts with one header line that declares the vector
//! dimensions, followed by one JSON object per photo or video frame. Face
//! embeddings are written verbatim and L2-normalized when loaded.

mod io;

pub use io::{load_gallery, read_gallery, write_gallery, write_gallery_to};

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

/// Number of scene classes used by the reference scene models.
pub const DEFAULT_NUM_SCENES: usize = 337;
/// Number of object categories used by the reference detectors.
pub const DEFAULT_NUM_OBJECTS: usize = 145;
/// Record file format version written by this crate.
pub const FORMAT_VERSION: u32 = 1;

/// Absolute tolerance on probability vectors summing to one.
pub const SUM_TOLERANCE: f64 = 1e-4;

/// Index of the "male" entry in gender score vectors.
pub const GENDER_MALE: usize = 0;
/// Index of the "female" entry in gender score vectors.
pub const GENDER_FEMALE: usize = 1;

pub fn default_age_bins() -> Vec<f64> {
    (0..=20).map(|i| f64::from(i) * 5.0).collect()
}

pub fn default_ethnicity_labels() -> Vec<String> {
    ["white", "black", "asian", "indian", "other"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn default_num_scenes() -> usize {
    DEFAULT_NUM_SCENES
}

fn default_num_objects() -> usize {
    DEFAULT_NUM_OBJECTS
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

/// Dataset-level header: dimensions shared by every record of a gallery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryHeader {
    #[serde(default = "default_version")]
    pub version: u32,
    /// Scene embedding length.
    #[serde(rename = "D")]
    pub scene_embedding_dim: usize,
    /// Number of scene classes.
    #[serde(rename = "S", default = "default_num_scenes")]
    pub num_scenes: usize,
    /// Number of object categories.
    #[serde(rename = "O", default = "default_num_objects")]
    pub num_objects: usize,
    /// Face identity embedding length.
    #[serde(rename = "D_face")]
    pub face_embedding_dim: usize,
    /// Ascending age-bin edges in years; `age_bins.len() - 1` bins.
    #[serde(default = "default_age_bins")]
    pub age_bins: Vec<f64>,
    #[serde(default = "default_ethnicity_labels")]
    pub ethnicity_labels: Vec<String>,
}

impl GalleryHeader {
    pub fn new(scene_embedding_dim: usize, face_embedding_dim: usize) -> Self {
        Self {
            version: FORMAT_VERSION,
            scene_embedding_dim,
            num_scenes: DEFAULT_NUM_SCENES,
            num_objects: DEFAULT_NUM_OBJECTS,
            face_embedding_dim,
            age_bins: default_age_bins(),
            ethnicity_labels: default_ethnicity_labels(),
        }
    }

    pub fn num_age_bins(&self) -> usize {
        self.age_bins.len().saturating_sub(1)
    }

    /// Midpoint of every age bin, in years.
    pub fn age_bin_midpoints(&self) -> Vec<f64> {
        self.age_bins
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        if self.version != FORMAT_VERSION {
            return Err(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                self.version
            ));
        }
        if self.num_scenes == 0 || self.num_objects == 0 || self.face_embedding_dim == 0 {
            return Err("dimensions S, O and D_face must be positive".into());
        }
        if self.age_bins.len() < 2 {
            return Err("age_bins needs at least two edges".into());
        }
        if self
            .age_bins
            .windows(2)
            .any(|w| !(w[0].is_finite() && w[1].is_finite() && w[0] < w[1]))
        {
            return Err("age_bins must be finite and strictly ascending".into());
        }
        if self.ethnicity_labels.is_empty() {
            return Err("ethnicity_labels must not be empty".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MediaKind {
    Photo,
    VideoFrame { video_id: String, frame_index: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Fast,
    Accurate,
}

/// Axis-aligned face box in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    pub fn center_x(&self) -> f64 {
        self.x + 0.5 * self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceObservation {
    pub bbox: BoundingBox,
    /// Width and height of the source image in pixels.
    pub image_size: (u32, u32),
    pub identity_embedding: Vec<f64>,
    pub age_scores: Vec<f64>,
    pub gender_scores: Vec<f64>,
    pub ethnicity_scores: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExifMeta {
    pub timestamp: Option<DateTime<Utc>>,
    pub camera_model: Option<String>,
    pub focal_length_mm: Option<f64>,
    pub is_selfie: Option<bool>,
    pub geo: Option<GeoPoint>,
}

impl ExifMeta {
    pub fn date(&self) -> Option<NaiveDate> {
        self.timestamp.map(|t| t.date_naive())
    }

    pub fn year(&self) -> Option<i32> {
        self.timestamp.map(|t| t.year())
    }
}

/// Everything the extractors report about one photo or video frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeatureRecord {
    pub photo_id: String,
    pub media_kind: MediaKind,
    pub scene_embedding: Vec<f64>,
    pub scene_scores: Vec<f64>,
    pub object_confidences: Vec<f64>,
    pub faces: Vec<FaceObservation>,
    pub ocr_text: Option<String>,
    pub exif: ExifMeta,
    pub tier: Tier,
}

impl ImageFeatureRecord {
    pub fn video_id(&self) -> Option<&str> {
        match &self.media_kind {
            MediaKind::VideoFrame { video_id, .. } => Some(video_id),
            MediaKind::Photo => None,
        }
    }
}

/// A validated gallery: header plus records in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    pub header: GalleryHeader,
    pub records: Vec<ImageFeatureRecord>,
}

impl Gallery {
    pub fn new(header: GalleryHeader, records: Vec<ImageFeatureRecord>) -> Self {
        Self { header, records }
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// One record per photo id, in order of first appearance: the fast-tier
/// record when both tiers are present.
pub fn primary_records(records: &[ImageFeatureRecord]) -> Vec<&ImageFeatureRecord> {
    let mut position: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut out: Vec<&ImageFeatureRecord> = Vec::new();
    for r in records {
        match position.get(r.photo_id.as_str()) {
            Some(&i) => {
                if out[i].tier != Tier::Fast && r.tier == Tier::Fast {
                    out[i] = r;
                }
            }
            None => {
                position.insert(&r.photo_id, out.len());
                out.push(r);
            }
        }
    }
    out
}

/// A single violated invariant: the offending field path and a description.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldViolation {
    pub field: String,
    pub message: String,
}

impl FieldViolation {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

fn check_unit_interval(field: &str, values: &[f64]) -> Result<(), FieldViolation> {
    match values
        .iter()
        .position(|v| !(v.is_finite() && (0.0..=1.0).contains(v)))
    {
        Some(i) => Err(FieldViolation::new(
            format!("{field}[{i}]"),
            format!("value {} outside [0, 1]", values[i]),
        )),
        None => Ok(()),
    }
}

fn check_distribution(field: &str, values: &[f64]) -> Result<(), FieldViolation> {
    check_unit_interval(field, values)?;
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(FieldViolation::new(
            field,
            format!("scores sum to {sum}, expected 1 within {SUM_TOLERANCE}"),
        ));
    }
    Ok(())
}

fn check_len(field: &str, len: usize, expected: usize) -> Result<(), FieldViolation> {
    if len != expected {
        return Err(FieldViolation::new(
            field,
            format!("length {len} does not match header dimension {expected}"),
        ));
    }
    Ok(())
}

impl FaceObservation {
    fn validate(&self, header: &GalleryHeader, prefix: &str) -> Result<(), FieldViolation> {
        let b = &self.bbox;
        let (w, h) = (f64::from(self.image_size.0), f64::from(self.image_size.1));
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return Err(FieldViolation::new(
                format!("{prefix}.image_size"),
                "image size must be positive",
            ));
        }
        let finite = [b.x, b.y, b.width, b.height].iter().all(|v| v.is_finite());
        if !finite
            || b.x < 0.0
            || b.y < 0.0
            || b.width <= 0.0
            || b.height <= 0.0
            || b.x + b.width > w
            || b.y + b.height > h
        {
            return Err(FieldViolation::new(
                format!("{prefix}.bbox"),
                format!(
                    "box ({}, {}, {}, {}) not within image {}x{}",
                    b.x, b.y, b.width, b.height, self.image_size.0, self.image_size.1
                ),
            ));
        }
        check_len(
            &format!("{prefix}.x"),
            self.identity_embedding.len(),
            header.face_embedding_dim,
        )?;
        if let Some(i) = self.identity_embedding.iter().position(|v| !v.is_finite()) {
            return Err(FieldViolation::new(
                format!("{prefix}.x[{i}]"),
                "non-finite embedding value",
            ));
        }
        if self.identity_embedding.iter().all(|v| *v == 0.0) {
            return Err(FieldViolation::new(
                format!("{prefix}.x"),
                "zero embedding cannot be L2-normalized",
            ));
        }
        check_len(
            &format!("{prefix}.a"),
            self.age_scores.len(),
            header.num_age_bins(),
        )?;
        check_distribution(&format!("{prefix}.a"), &self.age_scores)?;
        check_len(&format!("{prefix}.g"), self.gender_scores.len(), 2)?;
        check_distribution(&format!("{prefix}.g"), &self.gender_scores)?;
        check_len(
            &format!("{prefix}.e"),
            self.ethnicity_scores.len(),
            header.ethnicity_labels.len(),
        )?;
        check_distribution(&format!("{prefix}.e"), &self.ethnicity_scores)?;
        Ok(())
    }
}

impl ImageFeatureRecord {
    /// Checks every record invariant against the gallery header.
    ///
    /// Face embedding norms are not checked; loading normalizes them.
    pub fn validate(&self, header: &GalleryHeader) -> Result<(), FieldViolation> {
        if self.photo_id.is_empty() {
            return Err(FieldViolation::new("photo_id", "empty photo id"));
        }
        if let MediaKind::VideoFrame { video_id, .. } = &self.media_kind {
            if video_id.is_empty() {
                return Err(FieldViolation::new("video_id", "empty video id"));
            }
        }
        check_len("f", self.scene_embedding.len(), header.scene_embedding_dim)?;
        if let Some(i) = self.scene_embedding.iter().position(|v| !v.is_finite()) {
            return Err(FieldViolation::new(format!("f[{i}]"), "non-finite value"));
        }
        check_len("p", self.scene_scores.len(), header.num_scenes)?;
        check_distribution("p", &self.scene_scores)?;
        check_len("o", self.object_confidences.len(), header.num_objects)?;
        check_unit_interval("o", &self.object_confidences)?;
        for (i, face) in self.faces.iter().enumerate() {
            face.validate(header, &format!("faces[{i}]"))?;
        }
        self.exif.validate()?;
        Ok(())
    }
}

impl ExifMeta {
    fn validate(&self) -> Result<(), FieldViolation> {
        if let Some(fl) = self.focal_length_mm {
            if !(fl.is_finite() && fl > 0.0) {
                return Err(FieldViolation::new(
                    "exif.focal_length_mm",
                    format!("focal length {fl} must be positive"),
                ));
            }
        }
        if let Some(geo) = self.geo {
            if !(-90.0..=90.0).contains(&geo.latitude) {
                return Err(FieldViolation::new(
                    "exif.lat",
                    format!("latitude {} outside [-90, 90]", geo.latitude),
                ));
            }
            if !(-180.0..=180.0).contains(&geo.longitude) {
                return Err(FieldViolation::new(
                    "exif.lon",
                    format!("longitude {} outside [-180, 180]", geo.longitude),
                ));
            }
        }
        Ok(())
    }
}

/// Scales `v` to unit Euclidean norm in place. Zero vectors are left unchanged.
pub fn l2_normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}
