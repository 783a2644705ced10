use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::types::{DistanceIndex, Pose, Velocity};

/// Actuation and odometry imperfections of the simulated robot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Systematic odometer scale (1.0 is perfect).
    pub odometry_scale_error: f64,
    /// Odometer noise as a fraction of each increment.
    pub odometry_noise_sigma: f64,
    /// Heading random walk, rad/sqrt(s).
    pub heading_actuation_sigma: f64,
    /// Probability of a wheel-slip event per step.
    pub slip_prob: f64,
    /// Forward travel lost in one slip event, meters.
    pub slip_magnitude: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        odometry_scale_error: 1.0,
        odometry_noise_sigma: 0.0,
        heading_actuation_sigma: 0.0,
        slip_prob: 0.0,
        slip_magnitude: 0.0,
        seed: 0,
    };

    /// Defaults used by the experiments: 2 % odometer over-count, 1 %
    /// odometer noise, a mild heading random walk and rare slips.
    pub fn nominal(seed: u64) -> Self {
        Self {
            odometry_scale_error: 1.02,
            odometry_noise_sigma: 0.01,
            heading_actuation_sigma: 0.01,
            slip_prob: 0.002,
            slip_magnitude: 0.02,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.odometry_scale_error > 0.0) {
            return Err(SimError::Argument(format!(
                "odometry_scale_error must be positive, got {}",
                self.odometry_scale_error
            )));
        }
        for (name, v) in [
            ("odometry_noise_sigma", self.odometry_noise_sigma),
            ("heading_actuation_sigma", self.heading_actuation_sigma),
            ("slip_magnitude", self.slip_magnitude),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::Argument(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.slip_prob) {
            return Err(SimError::Argument(format!(
                "slip_prob must be in [0, 1], got {}",
                self.slip_prob
            )));
        }
        Ok(())
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::NONE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RobotState {
    /// Ground truth.
    pub pose: Pose,
    /// Odometric travelled distance.
    pub odometer: DistanceIndex,
}

/// Advances the robot by `dt` seconds under command `cmd`.
///
/// The pose follows the exact unicycle arc for `(v_true, omega + noise)`.
/// The odometer counts the commanded distance scaled by the systematic error
/// and multiplicative noise; a slip removes true travel without odometer
/// credit.
pub fn step_kinematics<R: Rng + ?Sized>(
    state: &RobotState,
    cmd: Velocity,
    dt: f64,
    noise: &NoiseModel,
    rng: &mut R,
) -> RobotState {
    let mut omega = cmd.omega;
    if noise.heading_actuation_sigma > 0.0 {
        let n: f64 = StandardNormal.sample(rng);
        omega += noise.heading_actuation_sigma * n / dt.sqrt();
    }
    let commanded = cmd.v * dt;
    let mut travelled = commanded;
    if noise.slip_prob > 0.0 && rng.random_bool(noise.slip_prob) {
        travelled = (commanded - noise.slip_magnitude).max(0.0);
    }
    let mut odo = commanded * noise.odometry_scale_error;
    if noise.odometry_noise_sigma > 0.0 {
        let n: f64 = StandardNormal.sample(rng);
        odo *= 1.0 + noise.odometry_noise_sigma * n;
    }
    let pose = if travelled > 0.0 {
        state.pose.advance(travelled / dt, omega, dt)
    } else {
        state.pose.advance(0.0, omega, dt)
    };
    RobotState {
        pose,
        odometer: DistanceIndex(state.odometer.0 + odo.max(0.0)),
    }
}

/// Robot with its own noise generator.
#[derive(Debug, Clone)]
pub struct Robot {
    pub state: RobotState,
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl Robot {
    pub fn new(pose: Pose, noise: NoiseModel) -> Result<Self, SimError> {
        noise.validate()?;
        Ok(Self {
            state: RobotState {
                pose,
                odometer: DistanceIndex(0.0),
            },
            rng: ChaCha8Rng::seed_from_u64(noise.seed),
            noise,
        })
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn step(&mut self, cmd: Velocity, dt: f64) -> &RobotState {
        self.state = step_kinematics(&self.state, cmd, dt, &self.noise, &mut self.rng);
        &self.state
    }
}
