//! Synthetic perception: landmark worlds, a planar pinhole camera, binary
//! descriptors with controllable corruption, Hamming matching and the
//! histogram vote that turns matches into a heading correction.

mod camera;
mod corruption;
mod descriptor;
mod histogram;
mod matching;
mod world;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use camera::{project, visible_depths, CameraModel};
pub use corruption::{corrupt, CorruptionModel, Corruptor, CLUTTER_ID};
pub use descriptor::{Descriptor, DEFAULT_BITS};
pub use histogram::{histogram_vote, HistogramResult};
pub use matching::{match_features, MatchPair, MatchSet};
pub use world::{Landmark, World};

#[derive(Debug, Error)]
pub enum VisionError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("format error: {0}")]
    Format(String),
}

/// One detected feature in a camera frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Horizontal image coordinate, pixels, in `[0, image_width)`.
    pub u: f64,
    pub descriptor: Descriptor,
    /// Ground-truth landmark id, or [`CLUTTER_ID`]. Never read by the
    /// navigator.
    pub landmark_id: i64,
}
