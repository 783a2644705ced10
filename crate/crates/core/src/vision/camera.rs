use serde::{Deserialize, Serialize};

use super::{Landmark, Observation, VisionError};
use crate::types::Pose;

/// Planar pinhole camera looking along the robot heading.
///
/// Image coordinates follow `u = focal_px * tan(bearing) + width / 2` with
/// the bearing measured counter-clockwise from the heading, so a camera
/// rotation by `delta` moves every feature by about `-focal_px * delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub h_fov: f64,
    pub image_width: u32,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            h_fov: 45f64.to_radians(),
            image_width: 320,
        }
    }
}

impl CameraModel {
    pub fn new(h_fov: f64, image_width: u32) -> Result<Self, VisionError> {
        let c = Self { h_fov, image_width };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        if !(self.h_fov > 0.0 && self.h_fov < std::f64::consts::PI) {
            return Err(VisionError::Argument(format!(
                "h_fov must be in (0, pi), got {}",
                self.h_fov
            )));
        }
        if self.image_width < 2 {
            return Err(VisionError::Argument(format!(
                "image_width must be at least 2, got {}",
                self.image_width
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.image_width as f64
    }

    pub fn focal_px(&self) -> f64 {
        self.width() / 2.0 / (self.h_fov / 2.0).tan()
    }

    /// Image coordinate of a point given in the camera frame (x forward,
    /// y left), or `None` when it is behind the camera or outside the image.
    pub fn image_u(&self, forward: f64, left: f64) -> Option<f64> {
        if forward <= 0.0 {
            return None;
        }
        let u = self.focal_px() * (left / forward) + self.width() / 2.0;
        (u >= 0.0 && u < self.width()).then_some(u)
    }
}

/// Observations of every landmark inside the field of view.
pub fn project(pose: &Pose, camera: &CameraModel, world: &[Landmark]) -> Vec<Observation> {
    let (s, c) = pose.theta.sin_cos();
    let focal = camera.focal_px();
    let half = camera.width() / 2.0;
    let width = camera.width();
    world
        .iter()
        .filter_map(|lm| {
            let dx = lm.position[0] - pose.x;
            let dy = lm.position[1] - pose.y;
            let forward = c * dx + s * dy;
            if forward <= 0.0 {
                return None;
            }
            let left = -s * dx + c * dy;
            let u = focal * (left / forward) + half;
            (u >= 0.0 && u < width).then(|| Observation {
                u,
                descriptor: lm.descriptor.clone(),
                landmark_id: lm.id,
            })
        })
        .collect()
}

/// Depth along the heading of every visible landmark.
pub fn visible_depths(pose: &Pose, camera: &CameraModel, world: &[Landmark]) -> Vec<f64> {
    let (s, c) = pose.theta.sin_cos();
    world
        .iter()
        .filter_map(|lm| {
            let dx = lm.position[0] - pose.x;
            let dy = lm.position[1] - pose.y;
            let forward = c * dx + s * dy;
            let left = -s * dx + c * dy;
            camera.image_u(forward, left).map(|_| forward)
        })
        .collect()
}
