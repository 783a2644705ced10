//! Shared value types: poses, velocities, distance-indexed path profiles and
//! the navigator configuration.
//!
//! Units are fixed crate-wide: distances in meters, angles in radians
//! (counter-clockwise positive), times in seconds and image shifts in pixels.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this angular rate a motion step is integrated as a straight line.
pub const STRAIGHT_LINE_OMEGA: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TypesError {
    #[error("distance {d} outside the valid interval [{min}, {max}]")]
    OutOfRange { d: f64, min: f64, max: f64 },
    #[error("non-finite value: {0}")]
    NonFinite(f64),
    #[error("invalid path profile: {0}")]
    InvalidProfile(String),
    #[error("invalid navigator config: {0}")]
    InvalidConfig(String),
    #[error("profile csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> Result<f64, TypesError> {
    if !theta.is_finite() {
        return Err(TypesError::NonFinite(theta));
    }
    Ok(wrap_finite(theta))
}

pub(crate) fn wrap_finite(theta: f64) -> f64 {
    let two_pi = 2.0 * PI;
    // rem_euclid lands in [0, 2pi); shift so the result is in [-pi, pi).
    let mut w = (theta + PI).rem_euclid(two_pi) - PI;
    if w <= -PI {
        w += two_pi;
    }
    // rem_euclid can return exactly 2pi for tiny negative inputs.
    if w > PI {
        w -= two_pi;
    }
    w
}

/// Planar pose in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading, kept in `(-pi, pi]`.
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap_finite(theta),
        }
    }

    /// Exact unicycle motion over `dt` seconds at constant `(v, omega)`.
    ///
    /// Uses the circular-arc solution; below [`STRAIGHT_LINE_OMEGA`] the
    /// straight-line limit is taken instead.
    pub fn advance(&self, v: f64, omega: f64, dt: f64) -> Pose {
        let dtheta = omega * dt;
        let (dx, dy) = if omega.abs() < STRAIGHT_LINE_OMEGA {
            let s = v * dt;
            (s * self.theta.cos(), s * self.theta.sin())
        } else {
            let r = v / omega;
            let th1 = self.theta + dtheta;
            (r * (th1.sin() - self.theta.sin()), -r * (th1.cos() - self.theta.cos()))
        };
        Pose::new(self.x + dx, self.y + dy, self.theta + dtheta)
    }

    /// Expresses `other` in this pose's local frame (x forward, y left).
    pub fn relative(&self, other: &Pose) -> Pose {
        let (s, c) = self.theta.sin_cos();
        let dx = other.x - self.x;
        let dy = other.y - self.y;
        Pose::new(c * dx + s * dy, -s * dx + c * dy, other.theta - self.theta)
    }

    /// Composes a local-frame offset onto this pose.
    pub fn compose(&self, local: &Pose) -> Pose {
        let (s, c) = self.theta.sin_cos();
        Pose::new(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
            self.theta + local.theta,
        )
    }

    pub fn distance_to(&self, other: &Pose) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Forward and angular velocity command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Velocity {
    pub v: f64,
    pub omega: f64,
}

impl Velocity {
    pub const STOP: Velocity = Velocity { v: 0.0, omega: 0.0 };

    pub fn new(v: f64, omega: f64) -> Self {
        Self { v, omega }
    }
}

/// Travelled distance along one traversal, in meters.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct DistanceIndex(pub f64);

impl DistanceIndex {
    pub fn meters(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub d: f64,
    pub velocity: Velocity,
}

/// Distance-indexed velocity record of a taught route.
///
/// Velocities are held piecewise-constant: the entry with the largest
/// `d <= query` applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathProfile {
    entries: Vec<ProfileEntry>,
    total_length: f64,
}

impl PathProfile {
    pub fn new(entries: Vec<ProfileEntry>, total_length: f64) -> Result<Self, TypesError> {
        let first = entries
            .first()
            .ok_or_else(|| TypesError::InvalidProfile("no entries".into()))?;
        if first.d != 0.0 {
            return Err(TypesError::InvalidProfile(format!(
                "first entry at d = {}, expected 0",
                first.d
            )));
        }
        for w in entries.windows(2) {
            if !(w[1].d > w[0].d) {
                return Err(TypesError::InvalidProfile(format!(
                    "distances not strictly increasing at d = {}",
                    w[1].d
                )));
            }
        }
        for e in &entries {
            if !(e.d.is_finite() && e.velocity.v.is_finite() && e.velocity.omega.is_finite()) {
                return Err(TypesError::InvalidProfile(format!("non-finite entry at d = {}", e.d)));
            }
            if e.velocity.v < 0.0 {
                return Err(TypesError::InvalidProfile(format!(
                    "negative forward velocity {} at d = {}",
                    e.velocity.v, e.d
                )));
            }
        }
        let last = entries[entries.len() - 1].d;
        if !(total_length.is_finite() && total_length >= last) {
            return Err(TypesError::InvalidProfile(format!(
                "total length {total_length} shorter than last entry at {last}"
            )));
        }
        Ok(Self { entries, total_length })
    }

    pub fn entries(&self) -> &[ProfileEntry] {
        &self.entries
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    /// Velocity held at distance `d`.
    pub fn velocity_at(&self, d: DistanceIndex) -> Result<Velocity, TypesError> {
        let d = d.0;
        if !(0.0..=self.total_length).contains(&d) {
            return Err(TypesError::OutOfRange {
                d,
                min: 0.0,
                max: self.total_length,
            });
        }
        let idx = self.entries.partition_point(|e| e.d <= d);
        Ok(self.entries[idx - 1].velocity)
    }

    /// Same as [`velocity_at`](Self::velocity_at) but clamps `d` into range.
    pub fn velocity_at_clamped(&self, d: f64) -> Velocity {
        let idx = self.entries.partition_point(|e| e.d <= d).max(1);
        self.entries[idx - 1].velocity
    }

    /// Pose reached after driving the profile for `d` meters from `start`.
    ///
    /// Entries with `v == 0` carry no distance and are skipped.
    pub fn pose_at(&self, start: Pose, d: f64) -> Pose {
        let d = d.clamp(0.0, self.total_length);
        let mut pose = start;
        for (i, e) in self.entries.iter().enumerate() {
            if e.d >= d {
                break;
            }
            let end = self.entries.get(i + 1).map_or(self.total_length, |n| n.d).min(d);
            let len = end - e.d;
            if len > 0.0 && e.velocity.v > 0.0 {
                pose = pose.advance(e.velocity.v, e.velocity.omega, len / e.velocity.v);
            }
        }
        pose
    }

    /// Distance reached after driving the profile for `t` seconds, clamped to
    /// the total length. Stationary entries are skipped.
    pub fn distance_at_time(&self, t: f64) -> f64 {
        let mut elapsed = 0.0;
        for (i, e) in self.entries.iter().enumerate() {
            let end = self.entries.get(i + 1).map_or(self.total_length, |n| n.d);
            if e.velocity.v <= 0.0 {
                continue;
            }
            let span = (end - e.d) / e.velocity.v;
            if t <= elapsed + span {
                return e.d + (t - elapsed).max(0.0) * e.velocity.v;
            }
            elapsed += span;
        }
        self.total_length
    }

    /// Time needed to drive the whole profile.
    pub fn duration(&self) -> f64 {
        let mut t = 0.0;
        for (i, e) in self.entries.iter().enumerate() {
            let end = self.entries.get(i + 1).map_or(self.total_length, |n| n.d);
            if e.velocity.v > 0.0 {
                t += (end - e.d) / e.velocity.v;
            }
        }
        t
    }

    /// Writes the entries as `d,v,omega` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), TypesError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["d", "v", "omega"])?;
        for e in &self.entries {
            wr.write_record([e.d.to_string(), e.velocity.v.to_string(), e.velocity.omega.to_string()])?;
        }
        wr.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads `d,v,omega` rows; the CSV carries no total length, so the
    /// caller supplies it.
    pub fn read_csv<R: Read>(r: R, total_length: f64) -> Result<Self, TypesError> {
        #[derive(Deserialize)]
        struct Row {
            d: f64,
            v: f64,
            omega: f64,
        }
        let mut rd = csv::Reader::from_reader(r);
        let mut entries = Vec::new();
        for row in rd.deserialize() {
            let row: Row = row?;
            entries.push(ProfileEntry {
                d: row.d,
                velocity: Velocity::new(row.v, row.omega),
            });
        }
        Self::new(entries, total_length)
    }
}

/// How the navigator combines the taught angular velocity with the visual
/// correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SteeringMode {
    /// Profile angular velocity plus visual correction.
    #[default]
    Combined,
    /// Profile velocities only; vision is ignored.
    ProfileOnly,
    /// Constant forward speed, heading from vision alone.
    VisionOnly,
}

/// Which local map is used at a given odometric distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSelection {
    /// Last map captured at or before the current distance.
    AtOrBelow,
    /// Map whose capture distance is closest to the current distance. Halves
    /// the heading lag of the reference image on curves.
    #[default]
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavigatorConfig {
    /// Steering gain, rad/s per pixel of voted shift.
    pub alpha: f64,
    pub map_spacing: f64,
    pub histogram_bin_width: f64,
    /// Votes the winning histogram bin needs for a conclusive result.
    pub min_matches: usize,
    pub max_angular_rate: f64,
    /// Matches farther apart than this many bits are rejected.
    pub max_hamming: u32,
    pub steering: SteeringMode,
    pub map_selection: MapSelection,
}

impl Default for NavigatorConfig {
    fn default() -> Self {
        Self {
            alpha: 0.005,
            map_spacing: 0.2,
            histogram_bin_width: 4.0,
            min_matches: 5,
            max_angular_rate: 1.0,
            max_hamming: 64,
            steering: SteeringMode::Combined,
            map_selection: MapSelection::Nearest,
        }
    }
}

impl NavigatorConfig {
    pub fn validate(&self) -> Result<(), TypesError> {
        let bad = |m: &str| Err(TypesError::InvalidConfig(m.to_string()));
        // alpha = 0 is the profile-only ablation and is accepted.
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be non-negative and finite");
        }
        if !(self.map_spacing > 0.0 && self.map_spacing.is_finite()) {
            return bad("map_spacing must be positive");
        }
        if !(self.histogram_bin_width >= 1.0 && self.histogram_bin_width.is_finite()) {
            return bad("histogram_bin_width must be at least 1 pixel");
        }
        if self.min_matches < 1 {
            return bad("min_matches must be at least 1");
        }
        if !(self.max_angular_rate > 0.0) {
            return bad("max_angular_rate must be positive");
        }
        Ok(())
    }
}
