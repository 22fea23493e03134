//! Privacy-aware profiling of a user's photo gallery.
//!
//! The crate consumes per-photo extractor output (scene embeddings and
//! scores, object confidences, faces, EXIF) and produces a user interest
//! profile. Faces are clustered into identities, each photo is routed to the
//! on-device or the remote tier, scene and object views are fused into
//! per-image predictions, and a set of photos is pooled into one user
//! descriptor by a squeezed attention block.

pub mod aggregation;
pub mod config;
pub mod error;
pub mod face_pipeline;
pub mod feature_records;
pub mod privacy_router;
pub mod profiler;
pub mod representation;
pub mod synthetic;
pub mod util;

pub use error::{Error, Result};
