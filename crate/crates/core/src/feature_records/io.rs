use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{
    l2_normalize, BoundingBox, ExifMeta, FaceObservation, Gallery, GalleryHeader, GeoPoint,
    ImageFeatureRecord, MediaKind, Tier,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum MediaKindTag {
    Photo,
    VideoFrame,
}

#[derive(Debug, Serialize, Deserialize)]
struct FaceLine {
    bbox: [f64; 4],
    image_size: [u32; 2],
    x: Vec<f64>,
    a: Vec<f64>,
    g: Vec<f64>,
    e: Vec<f64>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct ExifLine {
    #[serde(default)]
    timestamp: Option<DateTime<Utc>>,
    #[serde(default)]
    camera_model: Option<String>,
    #[serde(default)]
    focal_length_mm: Option<f64>,
    #[serde(default)]
    is_selfie: Option<bool>,
    #[serde(default)]
    lat: Option<f64>,
    #[serde(default)]
    lon: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordLine {
    photo_id: String,
    media_kind: MediaKindTag,
    #[serde(default)]
    video_id: Option<String>,
    #[serde(default)]
    frame_index: Option<u64>,
    f: Vec<f64>,
    p: Vec<f64>,
    o: Vec<f64>,
    #[serde(default)]
    faces: Vec<FaceLine>,
    #[serde(default)]
    ocr_text: Option<String>,
    #[serde(default)]
    exif: ExifLine,
    tier: Tier,
}

impl From<&ImageFeatureRecord> for RecordLine {
    fn from(r: &ImageFeatureRecord) -> Self {
        let (media_kind, video_id, frame_index) = match &r.media_kind {
            MediaKind::Photo => (MediaKindTag::Photo, None, None),
            MediaKind::VideoFrame {
                video_id,
                frame_index,
            } => (
                MediaKindTag::VideoFrame,
                Some(video_id.clone()),
                Some(*frame_index),
            ),
        };
        RecordLine {
            photo_id: r.photo_id.clone(),
            media_kind,
            video_id,
            frame_index,
            f: r.scene_embedding.clone(),
            p: r.scene_scores.clone(),
            o: r.object_confidences.clone(),
            faces: r
                .faces
                .iter()
                .map(|face| FaceLine {
                    bbox: [face.bbox.x, face.bbox.y, face.bbox.width, face.bbox.height],
                    image_size: [face.image_size.0, face.image_size.1],
                    x: face.identity_embedding.clone(),
                    a: face.age_scores.clone(),
                    g: face.gender_scores.clone(),
                    e: face.ethnicity_scores.clone(),
                })
                .collect(),
            ocr_text: r.ocr_text.clone(),
            exif: ExifLine {
                timestamp: r.exif.timestamp,
                camera_model: r.exif.camera_model.clone(),
                focal_length_mm: r.exif.focal_length_mm,
                is_selfie: r.exif.is_selfie,
                lat: r.exif.geo.map(|g| g.latitude),
                lon: r.exif.geo.map(|g| g.longitude),
            },
            tier: r.tier,
        }
    }
}

impl RecordLine {
    fn into_record(self) -> std::result::Result<ImageFeatureRecord, (String, String)> {
        let media_kind = match (self.media_kind, self.video_id, self.frame_index) {
            (MediaKindTag::Photo, None, None) => MediaKind::Photo,
            (MediaKindTag::Photo, _, _) => {
                return Err((
                    "media_kind".into(),
                    "photo records must not carry video_id or frame_index".into(),
                ))
            }
            (MediaKindTag::VideoFrame, Some(video_id), Some(frame_index)) => {
                MediaKind::VideoFrame {
                    video_id,
                    frame_index,
                }
            }
            (MediaKindTag::VideoFrame, None, _) => {
                return Err(("video_id".into(), "video frame without video_id".into()))
            }
            (MediaKindTag::VideoFrame, _, None) => {
                return Err((
                    "frame_index".into(),
                    "video frame without frame_index".into(),
                ))
            }
        };
        let geo = match (self.exif.lat, self.exif.lon) {
            (Some(latitude), Some(longitude)) => Some(GeoPoint {
                latitude,
                longitude,
            }),
            (None, None) => None,
            _ => {
                return Err((
                    "exif.lat".into(),
                    "latitude and longitude must both be present or both null".into(),
                ))
            }
        };
        Ok(ImageFeatureRecord {
            photo_id: self.photo_id,
            media_kind,
            scene_embedding: self.f,
            scene_scores: self.p,
            object_confidences: self.o,
            faces: self
                .faces
                .into_iter()
                .map(|face| FaceObservation {
                    bbox: BoundingBox {
                        x: face.bbox[0],
                        y: face.bbox[1],
                        width: face.bbox[2],
                        height: face.bbox[3],
                    },
                    image_size: (face.image_size[0], face.image_size[1]),
                    identity_embedding: face.x,
                    age_scores: face.a,
                    gender_scores: face.g,
                    ethnicity_scores: face.e,
                })
                .collect(),
            ocr_text: self.ocr_text,
            exif: ExifMeta {
                timestamp: self.exif.timestamp,
                camera_model: self.exif.camera_model,
                focal_length_mm: self.exif.focal_length_mm,
                is_selfie: self.exif.is_selfie,
                geo,
            },
            tier: self.tier,
        })
    }
}

/// Loads and validates a gallery record file.
pub fn load_gallery(path: impl AsRef<Path>) -> Result<Gallery> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_gallery(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

struct FirstDims {
    photo_id: String,
    f: usize,
    p: usize,
    o: usize,
}

/// Parses a gallery from any buffered reader. See [`load_gallery`].
pub fn read_gallery(reader: impl BufRead) -> Result<Gallery> {
    let mut header: Option<GalleryHeader> = None;
    let mut records = Vec::new();
    let mut first: Option<FirstDims> = None;
    let mut seen = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io("<gallery>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let Some(header) = header.as_ref() else {
            let parsed: GalleryHeader = parse_line(trimmed, line_no)?;
            parsed.check().map_err(|message| Error::Malformed {
                line: line_no,
                message: format!("invalid header: {message}"),
            })?;
            header = Some(parsed);
            continue;
        };

        let raw: RecordLine = parse_line(trimmed, line_no)?;
        let photo_id = raw.photo_id.clone();
        let invalid = |field: String, message: String| Error::InvalidRecord {
            line: line_no,
            photo_id: photo_id.clone(),
            field,
            message,
        };
        let mut record = raw
            .into_record()
            .map_err(|(field, message)| invalid(field, message))?;

        match &first {
            None => {
                first = Some(FirstDims {
                    photo_id: record.photo_id.clone(),
                    f: record.scene_embedding.len(),
                    p: record.scene_scores.len(),
                    o: record.object_confidences.len(),
                })
            }
            Some(dims) => {
                for (field, expected, found) in [
                    ("f", dims.f, record.scene_embedding.len()),
                    ("p", dims.p, record.scene_scores.len()),
                    ("o", dims.o, record.object_confidences.len()),
                ] {
                    if expected != found {
                        return Err(Error::DimensionMismatch {
                            field: field.into(),
                            first: dims.photo_id.clone(),
                            first_len: expected,
                            second: record.photo_id.clone(),
                            second_len: found,
                        });
                    }
                }
            }
        }

        record
            .validate(header)
            .map_err(|v| invalid(v.field, v.message))?;
        if !seen.insert((record.photo_id.clone(), record.tier)) {
            return Err(invalid(
                "photo_id".into(),
                format!("duplicate photo id for tier {:?}", record.tier),
            ));
        }
        for face in &mut record.faces {
            l2_normalize(&mut face.identity_embedding);
        }
        records.push(record);
    }

    let header = header.ok_or_else(|| Error::Malformed {
        line: 1,
        message: "missing header line".into(),
    })?;
    Ok(Gallery { header, records })
}

fn parse_line<T: for<'de> Deserialize<'de>>(text: &str, line: usize) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = if path.is_empty() || path == "." {
            inner.to_string()
        } else {
            format!("field `{path}`: {inner}")
        };
        Error::Malformed { line, message }
    })
}

/// Writes header and records, one JSON object per line.
///
/// Records are validated first; floats are written with shortest
/// round-trip precision.
pub fn write_gallery(
    header: &GalleryHeader,
    records: &[ImageFeatureRecord],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_gallery_to(header, records, &mut out).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_gallery_to(
    header: &GalleryHeader,
    records: &[ImageFeatureRecord],
    out: &mut impl Write,
) -> Result<()> {
    header
        .check()
        .map_err(|m| Error::InvalidInput(format!("invalid header: {m}")))?;
    for (i, record) in records.iter().enumerate() {
        record.validate(header).map_err(|v| Error::InvalidRecord {
            line: i + 2,
            photo_id: record.photo_id.clone(),
            field: v.field,
            message: v.message,
        })?;
    }
    let io_err = |e: std::io::Error| Error::io("<gallery>", e);
    let to_json = |e: serde_json::Error| Error::InvalidInput(e.to_string());
    serde_json::to_writer(&mut *out, header).map_err(to_json)?;
    out.write_all(b"\n").map_err(io_err)?;
    for record in records {
        serde_json::to_writer(&mut *out, &RecordLine::from(record)).map_err(to_json)?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> GalleryHeader {
        GalleryHeader {
            num_scenes: 3,
            num_objects: 2,
            age_bins: vec![0.0, 20.0, 40.0],
            ethnicity_labels: vec!["a".into(), "b".into()],
            ..GalleryHeader::new(2, 2)
        }
    }

    fn record(id: &str) -> ImageFeatureRecord {
        ImageFeatureRecord {
            photo_id: id.into(),
            media_kind: MediaKind::Photo,
            scene_embedding: vec![0.25, -1.5],
            scene_scores: vec![0.2, 0.3, 0.5],
            object_confidences: vec![0.0, 0.9],
            faces: vec![FaceObservation {
                bbox: BoundingBox {
                    x: 10.0,
                    y: 10.0,
                    width: 20.0,
                    height: 20.0,
                },
                image_size: (100, 80),
                identity_embedding: vec![0.6, 0.8],
                age_scores: vec![0.5, 0.5],
                gender_scores: vec![0.9, 0.1],
                ethnicity_scores: vec![1.0, 0.0],
            }],
            ocr_text: None,
            exif: ExifMeta::default(),
            tier: Tier::Fast,
        }
    }

    fn to_text(records: &[ImageFeatureRecord]) -> String {
        let mut buf = Vec::new();
        write_gallery_to(&header(), records, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn header_only_file_is_empty_gallery() {
        let text = to_text(&[]);
        assert_eq!(text.lines().count(), 1);
        let g = read_gallery(text.as_bytes()).unwrap();
        assert!(g.records.is_empty());
        assert_eq!(g.header, header());
    }

    #[test]
    fn missing_header_is_error() {
        assert!(matches!(
            read_gallery("".as_bytes()),
            Err(Error::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn optional_exif_fields_are_explicit_nulls() {
        let text = to_text(&[record("a")]);
        let line = text.lines().nth(1).unwrap();
        assert!(line.contains(r#""focal_length_mm":null"#));
        assert!(line.contains(r#""lat":null"#));
        assert!(line.contains(r#""ocr_text":null"#));
    }

    #[test]
    fn scene_sum_violation_names_line_and_field() {
        let mut r = record("bad");
        r.scene_scores = vec![0.1, 0.2, 0.2];
        let mut text = to_text(&[record("ok")]);
        text.push_str(&serde_json::to_string(&RecordLine::from(&r)).unwrap());
        text.push('\n');
        match read_gallery(text.as_bytes()) {
            Err(Error::InvalidRecord {
                line,
                photo_id,
                field,
                message,
            }) => {
                assert_eq!(line, 3);
                assert_eq!(photo_id, "bad");
                assert_eq!(field, "p");
                assert!(message.contains("sum"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_names_line_and_field() {
        let mut text = to_text(&[]);
        text.push_str(
            r#"{"photo_id":"x","media_kind":"photo","f":[1,"a"],"p":[],"o":[],"tier":"fast"}"#,
        );
        match read_gallery(text.as_bytes()) {
            Err(Error::Malformed { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("f[1]"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_names_both_photos() {
        let mut r = record("second");
        r.scene_embedding = vec![1.0, 2.0, 3.0];
        let mut text = to_text(&[record("first")]);
        text.push_str(&serde_json::to_string(&RecordLine::from(&r)).unwrap());
        match read_gallery(text.as_bytes()) {
            Err(Error::DimensionMismatch {
                field,
                first,
                second,
                ..
            }) => {
                assert_eq!(field, "f");
                assert_eq!(first, "first");
                assert_eq!(second, "second");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn face_embedding_normalized_on_load() {
        let mut r = record("a");
        r.faces[0].identity_embedding = vec![2.0, 0.0];
        let text = to_text(&[r]);
        // file keeps the raw extractor output
        assert!(text.contains(r#""x":[2.0,0.0]"#));
        let g = read_gallery(text.as_bytes()).unwrap();
        assert_eq!(g.records[0].faces[0].identity_embedding, vec![1.0, 0.0]);
    }

    #[test]
    fn bbox_outside_image_rejected() {
        let mut r = record("a");
        r.faces[0].bbox.x = 90.0;
        let mut buf = Vec::new();
        let err = write_gallery_to(&header(), &[r], &mut buf).unwrap_err();
        assert!(matches!(err, Error::InvalidRecord { ref field, .. } if field == "faces[0].bbox"));
    }

    #[test]
    fn duplicate_photo_id_within_tier_rejected() {
        let mut accurate = record("a");
        accurate.tier = Tier::Accurate;
        assert!(read_gallery(to_text(&[record("a"), accurate]).as_bytes()).is_ok());

        let mut text = to_text(&[record("a")]);
        text.push_str(&serde_json::to_string(&RecordLine::from(&record("a"))).unwrap());
        assert!(matches!(
            read_gallery(text.as_bytes()),
            Err(Error::InvalidRecord { ref field, .. }) if field == "photo_id"
        ));
    }

    #[test]
    fn video_frame_requires_video_id() {
        let mut text = to_text(&[]);
        text.push_str(
            r#"{"photo_id":"x","media_kind":"video_frame","frame_index":3,"f":[0,0],"p":[1,0,0],"o":[0,0],"tier":"fast"}"#,
        );
        assert!(matches!(
            read_gallery(text.as_bytes()),
            Err(Error::InvalidRecord { ref field, .. }) if field == "video_id"
        ));
    }

    #[test]
    fn latitude_out_of_range_rejected() {
        let mut r = record("a");
        r.exif.geo = Some(GeoPoint {
            latitude: 91.0,
            longitude: 0.0,
        });
        let mut buf = Vec::new();
        let err = write_gallery_to(&header(), &[r], &mut buf).unwrap_err();
        assert!(matches!(err, Error::InvalidRecord { ref field, .. } if field == "exif.lat"));
    }
}
