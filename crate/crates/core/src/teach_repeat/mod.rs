//! The navigation method: teaching records a path profile and
//! distance-indexed local maps; repeating replays the profile by odometric
//! distance and corrects only the heading from histogram-voted image shifts.

mod navigator;
mod plan;
mod route_file;
mod teach;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use navigator::{repeat_step, select_map, NavigatorState};
pub use plan::{DrivePlan, FnPlan, PlanSegment, SegmentPlan};
pub use route_file::{decode_route, encode_route, load_route, save_route, RouteFileError, MAGIC, VERSION};
pub use teach::{teach, TeachParams};

use crate::types::{NavigatorConfig, PathProfile, Pose, TypesError};
use crate::vision::{CameraModel, Observation, VisionError};

#[derive(Debug, Error)]
pub enum TeachRepeatError {
    #[error("teaching failed: {0}")]
    Teach(String),
    #[error("drive plan commands non-positive forward velocity {v} at d = {d}")]
    NonPositiveVelocity { d: f64, v: f64 },
    #[error("repeat step: {0}")]
    Repeat(String),
    #[error(transparent)]
    Types(#[from] TypesError),
    #[error(transparent)]
    Vision(#[from] VisionError),
}

/// Features seen at one distance mark while teaching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMap {
    pub d: f64,
    pub observations: Vec<Observation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteMetadata {
    pub start: Pose,
    pub camera: CameraModel,
    pub config: NavigatorConfig,
    pub world_seed: Option<u64>,
    pub descriptor_bits: u32,
    pub plan_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaughtRoute {
    pub profile: PathProfile,
    pub maps: Vec<LocalMap>,
    pub metadata: RouteMetadata,
}

impl TaughtRoute {
    pub fn start_pose(&self) -> Pose {
        self.metadata.start
    }

    /// Ground-truth taught pose at distance `d`, reconstructed from the
    /// profile. Exact because teaching is noise-free.
    pub fn taught_pose_at(&self, d: f64) -> Pose {
        self.profile.pose_at(self.metadata.start, d)
    }

    pub fn end_pose(&self) -> Pose {
        self.taught_pose_at(self.profile.total_length())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Distance from a ground-truth pose to the route start, meters.
pub fn measure_loop_error(ground_truth: &Pose, route: &TaughtRoute) -> f64 {
    ground_truth.distance_to(&route.metadata.start)
}
