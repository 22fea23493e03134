//! Face clustering across a gallery and per-identity demography fusion.

mod dbscan;
mod demography;

pub use dbscan::{dbscan, ClusteringParams, NOISE};
pub use demography::{
    analyze_demography, decade_label, expected_age, important_clusters, render_summary,
    ClusterMember, DemographyReport, FaceCluster, FaceLabels, FusedEthnicity, FusedGender, Gender,
    HistogramEntry, AGE_DECADES, NOT_ENOUGH_PHOTOS,
};
