use photo_profile::feature_records::{
    load_gallery, read_gallery, write_gallery, write_gallery_to, GalleryHeader, ImageFeatureRecord,
};
use photo_profile::synthetic::{fixture_gallery, random_gallery};
use proptest::prelude::*;

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn record_diff(a: &ImageFeatureRecord, b: &ImageFeatureRecord) -> f64 {
    assert_eq!(a.photo_id, b.photo_id);
    assert_eq!(a.media_kind, b.media_kind);
    assert_eq!(a.tier, b.tier);
    assert_eq!(a.ocr_text, b.ocr_text);
    assert_eq!(a.exif.timestamp, b.exif.timestamp);
    assert_eq!(a.exif.camera_model, b.exif.camera_model);
    assert_eq!(a.exif.is_selfie, b.exif.is_selfie);
    assert_eq!(a.faces.len(), b.faces.len());
    let mut d = max_abs_diff(&a.scene_embedding, &b.scene_embedding)
        .max(max_abs_diff(&a.scene_scores, &b.scene_scores))
        .max(max_abs_diff(&a.object_confidences, &b.object_confidences));
    for (fa, fb) in a.faces.iter().zip(&b.faces) {
        assert_eq!(fa.image_size, fb.image_size);
        d = d
            .max(max_abs_diff(&fa.identity_embedding, &fb.identity_embedding))
            .max(max_abs_diff(&fa.age_scores, &fb.age_scores))
            .max(max_abs_diff(&fa.gender_scores, &fb.gender_scores))
            .max(max_abs_diff(&fa.ethnicity_scores, &fb.ethnicity_scores))
            .max((fa.bbox.x - fb.bbox.x).abs())
            .max((fa.bbox.width - fb.bbox.width).abs());
    }
    d
}

#[test]
fn thousand_records_round_trip() {
    let header = GalleryHeader::new(64, 32);
    let gallery = random_gallery(2024, 1000, &header);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gallery.jsonl");
    write_gallery(&gallery.header, &gallery.records, &path).unwrap();
    let back = load_gallery(&path).unwrap();
    assert_eq!(back.header, gallery.header);
    assert_eq!(back.records.len(), 1000);
    let worst = gallery
        .records
        .iter()
        .zip(&back.records)
        .map(|(a, b)| record_diff(a, b))
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "max deviation {worst:e}");
}

#[test]
fn fixture_round_trips_exactly() {
    let g = fixture_gallery();
    let mut buf = Vec::new();
    write_gallery_to(&g.header, &g.records, &mut buf).unwrap();
    let back = read_gallery(buf.as_slice()).unwrap();
    assert_eq!(back, g);
}

#[test]
fn writing_is_byte_stable() {
    let header = GalleryHeader::new(8, 4);
    let g = random_gallery(1, 50, &header);
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_gallery_to(&g.header, &g.records, &mut a).unwrap();
    write_gallery_to(&g.header, &g.records, &mut b).unwrap();
    assert_eq!(a, b);

    // one-hot face embeddings are fixed points of normalization
    let fixture = fixture_gallery();
    let mut first = Vec::new();
    write_gallery_to(&fixture.header, &fixture.records, &mut first).unwrap();
    let back = read_gallery(first.as_slice()).unwrap();
    let mut second = Vec::new();
    write_gallery_to(&back.header, &back.records, &mut second).unwrap();
    assert_eq!(first, second);
}

#[test]
fn invalid_record_is_not_written() {
    let header = GalleryHeader::new(4, 4);
    let mut g = random_gallery(3, 5, &header);
    g.records[2].scene_scores[0] += 0.5;
    let mut buf = Vec::new();
    assert!(write_gallery_to(&g.header, &g.records, &mut buf).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_galleries_round_trip(
        seed in any::<u64>(),
        n in 0usize..40,
        d in 1usize..12,
        d_face in 1usize..8,
    ) {
        let header = GalleryHeader::new(d, d_face);
        let g = random_gallery(seed, n, &header);
        let mut buf = Vec::new();
        write_gallery_to(&g.header, &g.records, &mut buf).unwrap();
        let back = read_gallery(buf.as_slice()).unwrap();
        prop_assert_eq!(back.records.len(), g.records.len());
        for (a, b) in g.records.iter().zip(&back.records) {
            prop_assert!(record_diff(a, b) < 1e-9);
        }
    }
}
