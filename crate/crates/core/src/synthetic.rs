//! Seeded generators for galleries, labeled views and user photo sets.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, TimeZone, Utc};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::aggregation::UserExample;
use crate::error::Result;
use crate::feature_records::{
    l2_normalize, BoundingBox, ExifMeta, FaceObservation, Gallery, GalleryHeader, GeoPoint,
    ImageFeatureRecord, MediaKind, Tier,
};
use crate::profiler::{select_video_frames, CategoryMap};

fn distribution(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

fn one_hot(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn unit_vector(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("valid");
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| normal.sample(rng)).collect();
        if v.iter().any(|x| *x != 0.0) {
            l2_normalize(&mut v);
            return v;
        }
    }
}

fn random_face(rng: &mut impl Rng, header: &GalleryHeader) -> FaceObservation {
    let (w, h) = (
        rng.random_range(200..4000u32),
        rng.random_range(200..4000u32),
    );
    let fw = rng.random_range(1.0..f64::from(w) / 2.0);
    let fh = rng.random_range(1.0..f64::from(h) / 2.0);
    FaceObservation {
        bbox: BoundingBox {
            x: rng.random_range(0.0..f64::from(w) - fw),
            y: rng.random_range(0.0..f64::from(h) - fh),
            width: fw,
            height: fh,
        },
        image_size: (w, h),
        identity_embedding: unit_vector(rng, header.face_embedding_dim),
        age_scores: distribution(rng, header.num_age_bins()),
        gender_scores: distribution(rng, 2),
        ethnicity_scores: distribution(rng, header.ethnicity_labels.len()),
    }
}

fn random_exif(rng: &mut impl Rng) -> ExifMeta {
    let base = Utc.with_ymd_and_hms(2015, 1, 1, 0, 0, 0).unwrap();
    ExifMeta {
        timestamp: rng
            .random_bool(0.8)
            .then(|| base + Duration::seconds(rng.random_range(0..300_000_000))),
        camera_model: rng.random_bool(0.6).then(|| {
            ["Pixel 7", "iPhone 13 front camera", "EOS 80D"][rng.random_range(0..3)].to_string()
        }),
        focal_length_mm: rng.random_bool(0.5).then(|| rng.random_range(1.5..120.0)),
        is_selfie: rng.random_bool(0.7).then(|| rng.random_bool(0.2)),
        geo: rng.random_bool(0.5).then(|| GeoPoint {
            latitude: rng.random_range(-90.0..=90.0),
            longitude: rng.random_range(-180.0..=180.0),
        }),
    }
}

/// A random record set that passes validation, mixing photos, video frames
/// and photos present at both tiers. Embeddings are unit length so the
/// gallery survives a write/load round trip unchanged.
pub fn random_gallery(seed: u64, num_records: usize, header: &GalleryHeader) -> Gallery {
    random_gallery_with_stride(seed, num_records, header, 4).expect("stride 4 is valid")
}

/// As [`random_gallery`], with video frames sampled at `stride` from each
/// clip's frame sequence.
pub fn random_gallery_with_stride(
    seed: u64,
    num_records: usize,
    header: &GalleryHeader,
    stride: usize,
) -> Result<Gallery> {
    let all_frames: Vec<u64> = (0..(num_records as u64 + 1) * 5).collect();
    let sampled = select_video_frames(&all_frames, stride)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let texts = [
        "",
        "menu of the day",
        "invoice number 2291",
        "ÿ unicode ✓ text\twith tab",
    ];
    let mut records = Vec::with_capacity(num_records);
    let mut video_frames: BTreeMap<String, usize> = BTreeMap::new();
    while records.len() < num_records {
        let id = records.len();
        let media_kind = if rng.random_bool(0.2) {
            let video_id = format!("video{}", rng.random_range(0..5));
            let next = video_frames.entry(video_id.clone()).or_insert(0);
            let frame_index = sampled[*next];
            *next += 1;
            MediaKind::VideoFrame {
                video_id,
                frame_index,
            }
        } else {
            MediaKind::Photo
        };
        let mut scene_embedding: Vec<f64> = (0..header.scene_embedding_dim)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        scene_embedding[0] += 2.0;
        let num_faces = rng.random_range(0..4);
        let record = ImageFeatureRecord {
            photo_id: format!("img{id:05}"),
            media_kind,
            scene_embedding,
            scene_scores: distribution(&mut rng, header.num_scenes),
            object_confidences: (0..header.num_objects)
                .map(|_| {
                    if rng.random_bool(0.9) {
                        0.0
                    } else {
                        rng.random_range(0.0..=1.0)
                    }
                })
                .collect(),
            faces: (0..num_faces)
                .map(|_| random_face(&mut rng, header))
                .collect(),
            ocr_text: rng
                .random_bool(0.3)
                .then(|| texts[rng.random_range(0..texts.len())].to_string()),
            exif: random_exif(&mut rng),
            tier: Tier::Fast,
        };
        let twin = rng.random_bool(0.1) && records.len() + 1 < num_records;
        if twin {
            let mut accurate = record.clone();
            accurate.tier = Tier::Accurate;
            accurate.scene_scores = distribution(&mut rng, header.num_scenes);
            records.push(record);
            records.push(accurate);
        } else {
            records.push(record);
        }
    }
    Ok(Gallery::new(header.clone(), records))
}

/// Identity vectors of the fixture: clusters A, B, C and four one-off faces.
const FIXTURE_FACE_DIM: usize = 8;
const FACE_A: usize = 0;
const FACE_B: usize = 1;
const FACE_C: usize = 2;

fn fixture_face(
    identity: usize,
    center_x: f64,
    width: f64,
    header: &GalleryHeader,
) -> FaceObservation {
    let mut age = vec![0.0; header.num_age_bins()];
    age[6] = 1.0;
    FaceObservation {
        bbox: BoundingBox {
            x: center_x - width / 2.0,
            y: 100.0,
            width,
            height: width,
        },
        image_size: (1000, 800),
        identity_embedding: one_hot(FIXTURE_FACE_DIM, identity),
        age_scores: age,
        gender_scores: vec![0.8, 0.2],
        ethnicity_scores: {
            let mut e = vec![0.1; header.ethnicity_labels.len()];
            e[0] = 1.0 - 0.1 * (e.len() - 1) as f64;
            e
        },
    }
}

/// Twelve hand-built records exercising every routing boundary.
///
/// | id  | kind    | day | faces                      | text      | expected          |
/// |-----|---------|-----|----------------------------|-----------|-------------------|
/// | r01 | photo   | 1   | A (selfie)                 |           | important_person  |
/// | r02 | photo   | 1   | A (selfie)                 |           | important_person  |
/// | r03 | photo   | 1   | A                          |           | important_person  |
/// | r04 | photo   | 2   | A                          |           | important_person  |
/// | r05 | photo   | 2   | A                          |           | important_person  |
/// | r06 | photo   | 3   | B, C                       | sensitive | sensitive_text    |
/// | r07 | photo   | 3   | B, C, wide off-center face | menu      | public            |
/// | r08 | v2 #0   | 4   | B                          |           | public            |
/// | r09 | v2 #4   | 4   | B                          |           | public            |
/// | r10 | v1 #0   | 3   | C, centered ratio 0.049    |           | public            |
/// | r11 | v1 #4   | 3   | C, centered ratio 0.050    |           | portrait          |
/// | r12 | photo   | 3   | C, centered ratio 0.051    |           | portrait          |
///
/// Cluster A has 5 photos over 2 days, B 4 photos over 2 days and C 5 photos
/// on a single day, so only A is important. Video v2 is public, v1 private.
pub fn fixture_gallery() -> Gallery {
    let header = GalleryHeader::new(8, FIXTURE_FACE_DIM);
    let map = CategoryMap::bundled();
    let day = |d: i64| Some(fixture_epoch() + Duration::days(d - 1));
    let scene = |category: &str| {
        let i = map.scenes_for(category)[0];
        one_hot(header.num_scenes, i)
    };
    let small = |id| fixture_face(id, 100.0, 20.0, &header);

    struct Spec {
        id: &'static str,
        kind: MediaKind,
        day: i64,
        faces: Vec<FaceObservation>,
        text: Option<&'static str>,
        selfie: bool,
        category: &'static str,
        object: Option<&'static str>,
    }
    let frame = |v: &str, i: u64| MediaKind::VideoFrame {
        video_id: v.to_string(),
        frame_index: i,
    };
    let specs = vec![
        Spec {
            id: "r01",
            kind: MediaKind::Photo,
            day: 1,
            faces: vec![small(FACE_A)],
            text: None,
            selfie: true,
            category: "beach",
            object: None,
        },
        Spec {
            id: "r02",
            kind: MediaKind::Photo,
            day: 1,
            faces: vec![small(FACE_A)],
            text: None,
            selfie: true,
            category: "beach",
            object: Some("football"),
        },
        Spec {
            id: "r03",
            kind: MediaKind::Photo,
            day: 1,
            faces: vec![small(FACE_A)],
            text: None,
            selfie: false,
            category: "park",
            object: Some("football"),
        },
        Spec {
            id: "r04",
            kind: MediaKind::Photo,
            day: 2,
            faces: vec![small(FACE_A)],
            text: None,
            selfie: false,
            category: "mountains",
            object: None,
        },
        Spec {
            id: "r05",
            kind: MediaKind::Photo,
            day: 2,
            faces: vec![small(FACE_A)],
            text: None,
            selfie: false,
            category: "restaurant",
            object: Some("pizza"),
        },
        Spec {
            id: "r06",
            kind: MediaKind::Photo,
            day: 3,
            faces: vec![small(FACE_B), small(FACE_C)],
            text: Some(
                "passport number XK7781 surname nationality date of birth signature of holder",
            ),
            selfie: false,
            category: "office",
            object: None,
        },
        Spec {
            id: "r07",
            kind: MediaKind::Photo,
            day: 3,
            faces: vec![
                small(FACE_B),
                small(FACE_C),
                fixture_face(3, 50.0, 100.0, &header),
            ],
            text: Some("lunch menu soup salad burger fries coffee tea dessert"),
            selfie: false,
            category: "cafe",
            object: Some("dessert"),
        },
        Spec {
            id: "r08",
            kind: frame("v2", 0),
            day: 4,
            faces: vec![small(FACE_B)],
            text: None,
            selfie: false,
            category: "football",
            object: Some("football"),
        },
        Spec {
            id: "r09",
            kind: frame("v2", 4),
            day: 4,
            faces: vec![small(FACE_B)],
            text: None,
            selfie: false,
            category: "football",
            object: None,
        },
        Spec {
            id: "r10",
            kind: frame("v1", 0),
            day: 3,
            faces: vec![small(FACE_C), fixture_face(4, 500.0, 49.0, &header)],
            text: None,
            selfie: false,
            category: "concert",
            object: Some("guitar"),
        },
        Spec {
            id: "r11",
            kind: frame("v1", 4),
            day: 3,
            faces: vec![small(FACE_C), fixture_face(5, 500.0, 50.0, &header)],
            text: None,
            selfie: false,
            category: "concert",
            object: None,
        },
        Spec {
            id: "r12",
            kind: MediaKind::Photo,
            day: 3,
            faces: vec![small(FACE_C), fixture_face(6, 500.0, 51.0, &header)],
            text: None,
            selfie: false,
            category: "party",
            object: None,
        },
    ];

    let records = specs
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut o = vec![0.0; header.num_objects];
            if let Some(obj) = s.object {
                o[map.objects_for(obj)[0]] = 0.8;
            }
            let mut f = vec![0.0; header.scene_embedding_dim];
            f[i % header.scene_embedding_dim] = 1.0;
            ImageFeatureRecord {
                photo_id: s.id.to_string(),
                media_kind: s.kind,
                scene_embedding: f,
                scene_scores: scene(s.category),
                object_confidences: o,
                faces: s.faces,
                ocr_text: s.text.map(str::to_string),
                exif: ExifMeta {
                    timestamp: day(s.day),
                    camera_model: Some("Pixel 7".into()),
                    focal_length_mm: Some(if s.selfie { 2.8 } else { 6.0 }),
                    is_selfie: Some(s.selfie),
                    geo: Some(if i < 6 {
                        GeoPoint {
                            latitude: 55.751 + 0.001 * i as f64,
                            longitude: 37.618,
                        }
                    } else {
                        GeoPoint {
                            latitude: 59.934 + 0.001 * i as f64,
                            longitude: 30.335,
                        }
                    }),
                },
                tier: Tier::Fast,
            }
        })
        .collect();
    Gallery::new(header, records)
}

/// Users whose interest photos lie near their categories' centers, mixed
/// with casual photos of other categories that share a common marker
/// direction. Mean pooling cannot separate the two kinds; attention can.
pub fn synthetic_users(
    seed: u64,
    num_users: usize,
    num_features: usize,
    num_classes: usize,
) -> Vec<UserExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let marker_dims = (num_features / 5).max(1);
    let content_dims = num_features - marker_dims;
    let centers: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| unit_vector(&mut rng, content_dims))
        .collect();
    let noise = Normal::new(0.0, 0.25).expect("valid");
    let photo = |rng: &mut ChaCha8Rng, class: usize, casual: bool| -> Vec<f64> {
        let mut x = vec![0.0; num_features];
        for (j, v) in x.iter_mut().enumerate() {
            let base = if j < content_dims {
                1.5 * centers[class][j]
            } else if casual {
                1.0
            } else {
                0.0
            };
            *v = base + noise.sample(rng);
        }
        x
    };

    (0..num_users)
        .map(|u| {
            let mut classes: Vec<usize> = (0..num_classes).collect();
            classes.shuffle(&mut rng);
            let count = rng.random_range(2..=5usize).min(num_classes - 1).max(1);
            let mut interests = classes[..count].to_vec();
            let others = classes[count..].to_vec();
            interests.sort_unstable();
            let m = rng.random_range(5..=20);
            let casual_share = rng.random_range(0.4..0.8);
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| {
                    if rng.random_bool(casual_share) {
                        let c = others[rng.random_range(0..others.len())];
                        photo(&mut rng, c, true)
                    } else {
                        let c = interests[rng.random_range(0..interests.len())];
                        photo(&mut rng, c, false)
                    }
                })
                .collect();
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            UserExample {
                user_id: format!("user{u:04}"),
                features: Array2::from_shape_vec((m, num_features), flat).expect("shape"),
                interests,
            }
        })
        .collect()
}

/// A labeled gallery for fusion training: the scene embedding separates the
/// classes cleanly, scene scores weakly and objects barely.
pub fn fusion_gallery(seed: u64, num_records: usize, num_classes: usize) -> (Gallery, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let header = GalleryHeader::new(16, 4);
    let centers: Vec<Vec<f64>> = (0..num_classes)
        .map(|_| unit_vector(&mut rng, header.scene_embedding_dim))
        .collect();
    let normal = Normal::new(0.0, 1.0).expect("valid");
    let mut labels = Vec::with_capacity(num_records);
    let records = (0..num_records)
        .map(|i| {
            let label = rng.random_range(0..num_classes);
            labels.push(label);
            let f: Vec<f64> = centers[label]
                .iter()
                .map(|c| 3.0 * c + 0.3 * normal.sample(&mut rng))
                .collect();
            let mut p: Vec<f64> = (0..header.num_scenes)
                .map(|_| rng.random_range(0.0..1.0))
                .collect();
            p[label] += 40.0 * rng.random_range(0.0..1.0);
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= total);
            let mut o: Vec<f64> = (0..header.num_objects)
                .map(|_| {
                    if rng.random_bool(0.05) {
                        rng.random_range(0.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect();
            if rng.random_bool(0.3) {
                o[label] = rng.random_range(0.5..1.0);
            }
            ImageFeatureRecord {
                photo_id: format!("f{i:05}"),
                media_kind: MediaKind::Photo,
                scene_embedding: f,
                scene_scores: p,
                object_confidences: o,
                faces: vec![],
                ocr_text: None,
                exif: ExifMeta::default(),
                tier: Tier::Fast,
            }
        })
        .collect();
    (Gallery::new(header, records), labels)
}

/// First timestamp of the fixture gallery.
pub fn fixture_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 6, 1, 10, 0, 0).unwrap()
}
