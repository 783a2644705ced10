use serde::{Deserialize, Serialize};

use super::{DrivePlan, LocalMap, RouteMetadata, TaughtRoute, TeachRepeatError};
use crate::types::{NavigatorConfig, PathProfile, Pose, ProfileEntry, Velocity};
use crate::vision::{project, CameraModel, CorruptionModel, Corruptor, World, DEFAULT_BITS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeachParams {
    /// Pose where teaching starts; becomes the route start.
    pub start: Pose,
    /// Longest distance integrated in one step when the plan has no
    /// breakpoints, meters.
    pub max_step: f64,
    /// Appearance degradation on mapping day, if any.
    pub corruption: Option<CorruptionModel>,
    pub world_seed: Option<u64>,
    pub plan_name: String,
}

impl Default for TeachParams {
    fn default() -> Self {
        Self {
            start: Pose::default(),
            max_step: 0.01,
            corruption: None,
            world_seed: None,
            plan_name: String::new(),
        }
    }
}

/// Drives `plan` through `world`, recording the path profile and a local map
/// every `config.map_spacing` meters.
///
/// Teaching is noise-free: travelled distance is exact and the pose follows
/// the commanded arcs. A profile entry is written whenever the commanded
/// velocity changes.
pub fn teach(
    plan: &dyn DrivePlan,
    world: &World,
    camera: &CameraModel,
    config: &NavigatorConfig,
    params: &TeachParams,
) -> Result<TaughtRoute, TeachRepeatError> {
    config.validate()?;
    camera.validate()?;
    let total = plan.total_length();
    if !(total > 0.0 && total.is_finite()) {
        return Err(TeachRepeatError::Teach(format!(
            "plan length must be positive, got {total}"
        )));
    }
    let bits = world.descriptor_bits().unwrap_or(DEFAULT_BITS);
    let mut corruptor = params.corruption.map(Corruptor::new).transpose()?;

    let spacing = config.map_spacing;
    let map_count = (total / spacing + 1e-9).floor() as usize + 1;
    let mark = |k: usize| k as f64 * spacing;

    let mut events: Vec<f64> = (0..map_count).map(mark).collect();
    events.extend(plan.breakpoints().into_iter().filter(|&b| b > 0.0 && b < total));
    events.push(total);
    events.sort_by(f64::total_cmp);
    events.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut entries: Vec<ProfileEntry> = Vec::new();
    let mut maps = Vec::with_capacity(map_count);
    let mut pose = params.start;
    let mut next_map = 0usize;

    let capture = |pose: &Pose, k: usize, corruptor: &mut Option<Corruptor>| {
        let obs = project(pose, camera, world.landmarks());
        let observations = match corruptor {
            Some(c) => c.apply(obs, camera, bits),
            None => obs,
        };
        LocalMap {
            d: mark(k),
            observations,
        }
    };

    let record = |d: f64, vel: Velocity, entries: &mut Vec<ProfileEntry>| -> Result<(), TeachRepeatError> {
        if !(vel.v > 0.0) || !vel.omega.is_finite() {
            return Err(TeachRepeatError::NonPositiveVelocity { d, v: vel.v });
        }
        if entries.last().is_none_or(|e| e.velocity != vel) {
            entries.push(ProfileEntry { d, velocity: vel });
        }
        Ok(())
    };

    for w in events.windows(2) {
        let (start, end) = (w[0], w[1]);
        if next_map < map_count && (mark(next_map) - start).abs() < 1e-9 {
            maps.push(capture(&pose, next_map, &mut corruptor));
            next_map += 1;
        }
        let mut d = start;
        while d < end {
            let h = (end - d).min(params.max_step.max(1e-6));
            // Landing exactly on an event avoids drift from repeated sums.
            let step_end = if end - (d + h) < 1e-12 { end } else { d + h };
            let vel = plan.velocity_at(d);
            record(d, vel, &mut entries)?;
            pose = pose.advance(vel.v, vel.omega, (step_end - d) / vel.v);
            d = step_end;
        }
    }
    if next_map < map_count {
        maps.push(capture(&pose, next_map, &mut corruptor));
    }

    let profile = PathProfile::new(entries, total)?;
    Ok(TaughtRoute {
        profile,
        maps,
        metadata: RouteMetadata {
            start: params.start,
            camera: *camera,
            config: *config,
            world_seed: params.world_seed,
            descriptor_bits: bits as u32,
            plan_name: params.plan_name.clone(),
        },
    })
}
