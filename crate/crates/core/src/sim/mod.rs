//! Closed-loop simulation: unicycle kinematics with imperfect odometry,
//! ground-truth tracking and full repeat traversals through a synthetic
//! world.

mod compare;
mod kinematics;
mod scenario;
mod traversal;

pub mod experiments;

use thiserror::Error;

pub use compare::{compare_to_model, ModelComparison, SectionDecay};
pub use kinematics::{step_kinematics, NoiseModel, Robot, RobotState};
pub use scenario::{polyline, PlanSpec, RouteBundle, Scenario, StartOffset, WorldSpec};
pub use traversal::{
    run_multi_loop, run_traversal, Completion, Simulator, TraversalConfig, TraversalLog, TraversalSample,
};

use crate::error_model::{FeatureDistance, ModelError};
use crate::teach_repeat::TeachRepeatError;
use crate::types::Pose;
use crate::vision::{visible_depths, CameraModel, VisionError, World};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("no landmark is visible from ({x:.3}, {y:.3}, {theta:.3})")]
    NoVisibleLandmarks { x: f64, y: f64, theta: f64 },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    TeachRepeat(#[from] TeachRepeatError),
    #[error(transparent)]
    Vision(#[from] VisionError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("csv export: {0}")]
    Csv(#[from] csv::Error),
}

/// Mean depth along the heading of the landmarks visible from `pose`.
pub fn estimate_l(world: &World, pose: &Pose, camera: &CameraModel) -> Result<FeatureDistance, SimError> {
    let depths = visible_depths(pose, camera, world.landmarks());
    if depths.is_empty() {
        return Err(SimError::NoVisibleLandmarks {
            x: pose.x,
            y: pose.y,
            theta: pose.theta,
        });
    }
    let mean = depths.iter().sum::<f64>() / depths.len() as f64;
    Ok(FeatureDistance::new(mean)?)
}

/// Average of [`estimate_l`] over poses sampled every `step` meters along the
/// taught path, skipping poses that see nothing.
pub fn estimate_route_l(
    world: &World,
    route: &crate::teach_repeat::TaughtRoute,
    step: f64,
) -> Result<FeatureDistance, SimError> {
    if !(step > 0.0) {
        return Err(SimError::Argument(format!("step must be positive, got {step}")));
    }
    let total = route.profile.total_length();
    let n = (total / step).floor() as usize;
    let (sum, count) = (0..=n)
        .filter_map(|i| estimate_l(world, &route.taught_pose_at(i as f64 * step), &route.metadata.camera).ok())
        .fold((0.0, 0usize), |(s, c), l| (s + l.meters(), c + 1));
    if count == 0 {
        let p = route.start_pose();
        return Err(SimError::NoVisibleLandmarks {
            x: p.x,
            y: p.y,
            theta: p.theta,
        });
    }
    Ok(FeatureDistance::new(sum / count as f64)?)
}
