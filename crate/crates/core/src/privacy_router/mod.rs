//! Private/public routing of photos and videos.
//!
//! A photo is private when it carries sensitive text, is a portrait, or shows
//! somebody from an important face cluster. Private photos are processed by
//! the fast on-device tier only; public ones may go to the accurate tier.

mod text_sensitivity;

pub use text_sensitivity::{
    classify_text_sensitivity, parse_corpus, reference_corpus, tokenize, TextModelConfig,
    TextSensitivityModel,
};

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::face_pipeline::{important_clusters, DemographyReport, FaceLabels};
use crate::feature_records::ImageFeatureRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Private,
    Public,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrivacyReason {
    SensitiveText,
    Portrait,
    ImportantPerson,
    ForcedPrivate,
}

impl fmt::Display for PrivacyReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrivacyReason::SensitiveText => "sensitive_text",
            PrivacyReason::Portrait => "portrait",
            PrivacyReason::ImportantPerson => "important_person",
            PrivacyReason::ForcedPrivate => "forced_private",
        })
    }
}

/// Routing outcome; the verdict is private exactly when `reasons` is nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingDecision {
    pub photo_id: String,
    pub verdict: Verdict,
    pub reasons: BTreeSet<PrivacyReason>,
}

impl RoutingDecision {
    pub fn from_reasons(photo_id: impl Into<String>, reasons: BTreeSet<PrivacyReason>) -> Self {
        let verdict = if reasons.is_empty() {
            Verdict::Public
        } else {
            Verdict::Private
        };
        Self {
            photo_id: photo_id.into(),
            verdict,
            reasons,
        }
    }

    pub fn is_private(&self) -> bool {
        self.verdict == Verdict::Private
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrivacyConfig {
    /// Minimal face width relative to the image width for a portrait.
    pub portrait_width_ratio_threshold: f64,
    /// Width fraction of the central band a portrait face must be centered in.
    pub central_fraction: f64,
    pub min_cluster_photos: usize,
    pub min_cluster_days: usize,
    /// Treat every photo as private; nothing leaves the device.
    pub force_all_private: bool,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self {
            portrait_width_ratio_threshold: 0.05,
            central_fraction: 2.0 / 3.0,
            min_cluster_photos: 5,
            min_cluster_days: 2,
            force_all_private: true,
        }
    }
}

impl PrivacyConfig {
    pub fn validate(&self) -> Result<()> {
        let t = self.portrait_width_ratio_threshold;
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "portrait_width_ratio_threshold must lie in (0, 1), got {t}"
            )));
        }
        let c = self.central_fraction;
        if !(c > 0.0 && c <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "central_fraction must lie in (0, 1], got {c}"
            )));
        }
        Ok(())
    }
}

/// True when a face centered in the central band is wide enough.
pub fn is_portrait(record: &ImageFeatureRecord, config: &PrivacyConfig) -> bool {
    let margin = 0.5 * (1.0 - config.central_fraction);
    record.faces.iter().any(|face| {
        let width = f64::from(face.image_size.0);
        let center = face.bbox.center_x();
        let centered = center >= margin * width && center <= (1.0 - margin) * width;
        centered && face.bbox.width / width >= config.portrait_width_ratio_threshold
    })
}

/// Routes one photo or frame. Every rule is evaluated (text, portrait,
/// important person) so `reasons` lists all that fired.
pub fn route_photo(
    record: &ImageFeatureRecord,
    demography: &DemographyReport,
    face_labels: &FaceLabels,
    config: &PrivacyConfig,
    text_model: &TextSensitivityModel,
) -> Result<RoutingDecision> {
    let labels: &[i32] = match face_labels.get(&record.photo_id) {
        Some(l) => l,
        None if record.faces.is_empty() => &[],
        None => {
            return Err(Error::InvalidInput(format!(
                "no face labels for photo `{}`; run demography on the same gallery first",
                record.photo_id
            )))
        }
    };
    if labels.len() != record.faces.len() {
        return Err(Error::InvalidInput(format!(
            "photo `{}` has {} faces but {} face labels",
            record.photo_id,
            record.faces.len(),
            labels.len()
        )));
    }

    let mut reasons = BTreeSet::new();
    if config.force_all_private {
        reasons.insert(PrivacyReason::ForcedPrivate);
    }
    if let Some(text) = &record.ocr_text {
        if classify_text_sensitivity(text, text_model).0 {
            reasons.insert(PrivacyReason::SensitiveText);
        }
    }
    if is_portrait(record, config) {
        reasons.insert(PrivacyReason::Portrait);
    }
    let important = important_clusters(
        demography,
        config.min_cluster_photos,
        config.min_cluster_days,
    );
    if labels.iter().any(|l| important.contains(l)) {
        reasons.insert(PrivacyReason::ImportantPerson);
    }
    Ok(RoutingDecision::from_reasons(&record.photo_id, reasons))
}

/// A video is public only when all of its frames are public.
pub fn route_video(video_id: &str, frame_decisions: &[RoutingDecision]) -> Result<RoutingDecision> {
    if frame_decisions.is_empty() {
        return Err(Error::InvalidInput(format!(
            "video `{video_id}` has no frame decisions"
        )));
    }
    let reasons = frame_decisions
        .iter()
        .flat_map(|d| d.reasons.iter().copied())
        .collect();
    Ok(RoutingDecision::from_reasons(video_id, reasons))
}

/// Writes one `photo_id<TAB>verdict<TAB>reasons` line per decision.
pub fn write_audit_log<W: Write + ?Sized>(
    decisions: &[RoutingDecision],
    out: &mut W,
) -> std::io::Result<()> {
    for d in decisions {
        let verdict = match d.verdict {
            Verdict::Private => "private",
            Verdict::Public => "public",
        };
        let reasons: Vec<String> = d.reasons.iter().map(ToString::to_string).collect();
        let reasons = if reasons.is_empty() {
            "-".to_string()
        } else {
            reasons.join(",")
        };
        writeln!(out, "{}\t{}\t{}", d.photo_id, verdict, reasons)?;
    }
    Ok(())
}
