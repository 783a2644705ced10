use serde::{Deserialize, Serialize};

use super::{TaughtRoute, TeachRepeatError};
use crate::types::{DistanceIndex, MapSelection, NavigatorConfig, SteeringMode, Velocity};
use crate::vision::{histogram_vote, match_features, HistogramResult, Observation};

/// Navigator state threaded through [`repeat_step`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NavigatorState {
    /// Odometric distance travelled in this traversal.
    pub d_est: DistanceIndex,
    pub active_map_index: usize,
    /// `None` when vision was not consulted (profile-only steering).
    pub last_vote: Option<HistogramResult>,
    pub finished: bool,
}

impl NavigatorState {
    pub fn start() -> Self {
        Self::default()
    }

    pub fn kappa(&self) -> Option<f64> {
        self.last_vote.as_ref().and_then(|v| v.kappa)
    }
}

/// Index of the local map used at odometric distance `d`.
pub fn select_map(route: &TaughtRoute, d: f64, selection: MapSelection) -> usize {
    let maps = &route.maps;
    let below = maps.partition_point(|m| m.d <= d).saturating_sub(1);
    match selection {
        MapSelection::AtOrBelow => below,
        MapSelection::Nearest => match maps.get(below + 1) {
            Some(next) if next.d - d < d - maps[below].d => below + 1,
            _ => below,
        },
    }
}

/// One repeat-phase control step.
///
/// Advances the odometric distance by `delta_d`, looks up the taught
/// velocities and the local map for that distance, and corrects the taught
/// angular velocity by `-alpha * kappa` when the histogram vote over
/// `current_obs` is conclusive. The correction is limited to
/// `max_angular_rate`. Forward velocity always comes from the profile; once
/// the route length is reached the robot is stopped.
pub fn repeat_step(
    state: &NavigatorState,
    route: &TaughtRoute,
    current_obs: &[Observation],
    delta_d: f64,
    config: &NavigatorConfig,
) -> Result<(Velocity, NavigatorState), TeachRepeatError> {
    if state.finished {
        return Err(TeachRepeatError::Repeat("navigator already finished".into()));
    }
    if !(delta_d >= 0.0 && delta_d.is_finite()) {
        return Err(TeachRepeatError::Repeat(format!(
            "odometry increment must be non-negative, got {delta_d}"
        )));
    }
    let d_est = state.d_est.0 + delta_d;
    let total = route.profile.total_length();
    let active_map_index = select_map(route, d_est, config.map_selection);

    if d_est >= total {
        return Ok((
            Velocity::STOP,
            NavigatorState {
                d_est: DistanceIndex(d_est),
                active_map_index,
                last_vote: None,
                finished: true,
            },
        ));
    }

    let taught = route.profile.velocity_at_clamped(d_est);
    let base_omega = match config.steering {
        SteeringMode::VisionOnly => 0.0,
        _ => taught.omega,
    };
    let use_vision = config.steering != SteeringMode::ProfileOnly && config.alpha > 0.0;

    let mut last_vote = None;
    let mut omega = base_omega;
    if use_vision {
        let map = &route.maps[active_map_index];
        let matches = match_features(&map.observations, current_obs, config.max_hamming)?;
        let vote = histogram_vote(&matches, config, route.metadata.camera.image_width);
        if let Some(kappa) = vote.kappa {
            let correction = (config.alpha * kappa).clamp(-config.max_angular_rate, config.max_angular_rate);
            omega = base_omega - correction;
        }
        last_vote = Some(vote);
    }

    Ok((
        Velocity::new(taught.v, omega),
        NavigatorState {
            d_est: DistanceIndex(d_est),
            active_map_index,
            last_vote,
            finished: false,
        },
    ))
}
