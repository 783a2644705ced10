use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Robot, SimError};
use crate::teach_repeat::{measure_loop_error, repeat_step, NavigatorState, TaughtRoute};
use crate::types::{NavigatorConfig, Pose, Velocity};
use crate::vision::{project, CameraModel, CorruptionModel, Corruptor, World};

use super::NoiseModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraversalConfig {
    /// Control period, seconds.
    pub dt: f64,
    /// Step budget as a multiple of the taught duration.
    pub budget_factor: f64,
    /// Abort when the robot is farther than this from the taught path.
    pub max_deviation: Option<f64>,
}

impl Default for TraversalConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            budget_factor: 10.0,
            max_deviation: Some(5.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraversalSample {
    pub t: f64,
    pub pose: Pose,
    pub d_est: f64,
    pub kappa: Option<f64>,
    /// Votes in the winning histogram bin (0 when vision was not used).
    pub support: u32,
    pub matches: u32,
    pub v_cmd: f64,
    pub omega_cmd: f64,
    /// Profile velocities at `d_est`, for auditing the heading-only contract.
    pub v_profile: f64,
    pub omega_profile: f64,
    pub active_map: usize,
    pub finished: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Completion {
    Finished,
    BudgetExhausted,
    /// Robot left the corridor around the taught path.
    Diverged {
        distance: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalLog {
    pub samples: Vec<TraversalSample>,
    pub start_pose: Pose,
    pub end_pose: Pose,
    pub loop_end_error: f64,
    pub completion: Completion,
}

impl TraversalLog {
    pub fn completed(&self) -> bool {
        self.completion == Completion::Finished
    }

    /// `t,x_true,y_true,theta_true,d_est,kappa,omega_cmd,conclusive`; an
    /// inconclusive vote leaves `kappa` empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), SimError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record([
            "t",
            "x_true",
            "y_true",
            "theta_true",
            "d_est",
            "kappa",
            "omega_cmd",
            "conclusive",
        ])?;
        for s in &self.samples {
            wr.write_record([
                s.t.to_string(),
                s.pose.x.to_string(),
                s.pose.y.to_string(),
                s.pose.theta.to_string(),
                s.d_est.to_string(),
                s.kappa.map(|k| k.to_string()).unwrap_or_default(),
                s.omega_cmd.to_string(),
                s.kappa.is_some().to_string(),
            ])?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// True when every moving command used the profile forward velocity
    /// unchanged.
    pub fn forward_velocity_untouched(&self) -> bool {
        self.samples
            .iter()
            .filter(|s| !s.finished)
            .all(|s| s.v_cmd.to_bits() == s.v_profile.to_bits())
    }
}

/// Closed-loop repeat simulation of one robot on one taught route.
///
/// Vision corruption and robot noise draw from separate generators, so
/// runs that differ only in how vision is used see identical actuation
/// noise.
pub struct Simulator<'a> {
    pub route: &'a TaughtRoute,
    pub world: &'a World,
    pub camera: CameraModel,
    pub nav_config: NavigatorConfig,
    pub traversal: TraversalConfig,
    corruptor: Corruptor,
    noise: NoiseModel,
    robot: Option<Robot>,
    path: Vec<(f64, f64)>,
}

impl<'a> Simulator<'a> {
    pub fn new(
        route: &'a TaughtRoute,
        world: &'a World,
        corruption: CorruptionModel,
        noise: NoiseModel,
        traversal: TraversalConfig,
    ) -> Result<Self, SimError> {
        noise.validate()?;
        if !(traversal.dt > 0.0) {
            return Err(SimError::Argument(format!("dt must be positive, got {}", traversal.dt)));
        }
        let n = (route.profile.total_length() / 0.05).ceil().max(1.0) as usize;
        let path = (0..=n)
            .map(|i| {
                let p = route.taught_pose_at(route.profile.total_length() * i as f64 / n as f64);
                (p.x, p.y)
            })
            .collect();
        Ok(Self {
            route,
            world,
            camera: route.metadata.camera,
            nav_config: route.metadata.config,
            traversal,
            corruptor: Corruptor::new(corruption)?,
            noise,
            robot: None,
            path,
        })
    }

    pub fn with_nav_config(mut self, config: NavigatorConfig) -> Self {
        self.nav_config = config;
        self
    }

    /// Distance from `pose` to the nearest point of the taught path.
    pub fn deviation(&self, pose: &Pose) -> f64 {
        self.path
            .iter()
            .map(|&(x, y)| (x - pose.x).hypot(y - pose.y))
            .fold(f64::INFINITY, f64::min)
    }

    /// Runs one traversal from `start`. The robot keeps its noise generator
    /// between calls; odometry restarts from zero.
    pub fn traverse(&mut self, start: Pose) -> Result<TraversalLog, SimError> {
        let robot = match self.robot.take() {
            Some(mut r) => {
                r.state.pose = start;
                r.state.odometer.0 = 0.0;
                r
            }
            None => Robot::new(start, self.noise)?,
        };
        let result = self.run(robot, start);
        let (log, robot) = result?;
        self.robot = Some(robot);
        Ok(log)
    }

    fn run(&mut self, mut robot: Robot, start: Pose) -> Result<(TraversalLog, Robot), SimError> {
        let route = self.route;
        let cfg = self.nav_config;
        let dt = self.traversal.dt;
        let total = route.profile.total_length();
        let budget = ((self.traversal.budget_factor * route.profile.duration() / dt).ceil() as usize).max(1);
        let bits = route.metadata.descriptor_bits as usize;
        let breakpoints: Vec<f64> = route
            .profile
            .entries()
            .iter()
            .map(|e| e.d)
            .filter(|&d| d > 0.0)
            .collect();

        let mut nav = NavigatorState::start();
        let mut samples = Vec::with_capacity(budget.min(1 << 20));
        let mut t = 0.0;
        let mut last_odometer = 0.0;
        let mut completion = Completion::BudgetExhausted;

        for _ in 0..budget {
            let delta_d = robot.state.odometer.0 - last_odometer;
            last_odometer = robot.state.odometer.0;
            let obs = if cfg.alpha > 0.0 && cfg.steering != crate::types::SteeringMode::ProfileOnly {
                let raw = project(&robot.state.pose, &self.camera, self.world.landmarks());
                self.corruptor.apply(raw, &self.camera, bits)
            } else {
                Vec::new()
            };
            let (cmd, next) = repeat_step(&nav, route, &obs, delta_d, &cfg)?;
            let taught = route.profile.velocity_at_clamped(next.d_est.0);
            let vote = next.last_vote.as_ref();
            samples.push(TraversalSample {
                t,
                pose: robot.state.pose,
                d_est: next.d_est.0,
                kappa: next.kappa(),
                support: vote.map_or(0, |v| v.support),
                matches: vote.map_or(0, |v| v.bin_counts.iter().sum()),
                v_cmd: cmd.v,
                omega_cmd: cmd.omega,
                v_profile: taught.v,
                omega_profile: taught.omega,
                active_map: next.active_map_index,
                finished: next.finished,
            });
            nav = next;
            if nav.finished {
                completion = Completion::Finished;
                break;
            }
            if let Some(limit) = self.traversal.max_deviation {
                let dev = self.deviation(&robot.state.pose);
                if dev > limit {
                    completion = Completion::Diverged { distance: dev };
                    break;
                }
            }
            // Commands also change exactly at profile breakpoints and at the
            // route end, so a held command never straddles a segment boundary.
            let next_event = breakpoints
                .iter()
                .copied()
                .find(|&b| b > nav.d_est.0 + 1e-9)
                .unwrap_or(total);
            let remaining = next_event - nav.d_est.0;
            let h = if cmd.v > 0.0 && remaining < cmd.v * dt {
                (remaining / cmd.v * (1.0 + 1e-9)).max(1e-9)
            } else {
                dt
            };
            robot.step(Velocity::new(cmd.v, cmd.omega), h);
            t += h;
        }

        let end_pose = robot.state.pose;
        Ok((
            TraversalLog {
                samples,
                start_pose: start,
                end_pose,
                loop_end_error: measure_loop_error(&end_pose, route),
                completion,
            },
            robot,
        ))
    }
}

/// Single traversal with fresh generators.
pub fn run_traversal(
    route: &TaughtRoute,
    start_pose: Pose,
    world: &World,
    corruption: CorruptionModel,
    noise: NoiseModel,
    traversal: TraversalConfig,
) -> Result<TraversalLog, SimError> {
    Simulator::new(route, world, corruption, noise, traversal)?.traverse(start_pose)
}

/// Chains `n_loops` traversals, each starting where the previous one ended.
/// Stops after the first traversal that does not complete.
pub fn run_multi_loop(
    sim: &mut Simulator<'_>,
    start_pose: Pose,
    n_loops: usize,
) -> Result<Vec<TraversalLog>, SimError> {
    if n_loops == 0 {
        return Err(SimError::Argument("n_loops must be at least 1".into()));
    }
    let mut logs = Vec::with_capacity(n_loops);
    let mut pose = start_pose;
    for _ in 0..n_loops {
        let log = sim.traverse(pose)?;
        pose = log.end_pose;
        let done = log.completed();
        logs.push(log);
        if !done {
            break;
        }
    }
    Ok(logs)
}
