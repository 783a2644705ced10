use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::types::Velocity;

/// Scripted stand-in for the human operator: the velocity to command at each
/// travelled distance.
pub trait DrivePlan {
    fn velocity_at(&self, d: f64) -> Velocity;

    fn total_length(&self) -> f64;

    /// Distances where the commanded velocity may change. Teaching steps
    /// land on these exactly; plans without them are sampled finely.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Plan backed by an arbitrary function of distance.
pub struct FnPlan<F> {
    pub f: F,
    pub total_length: f64,
}

impl<F: Fn(f64) -> Velocity> DrivePlan for FnPlan<F> {
    fn velocity_at(&self, d: f64) -> Velocity {
        (self.f)(d)
    }

    fn total_length(&self) -> f64 {
        self.total_length
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanSegment {
    Straight {
        length: f64,
        speed: f64,
    },
    /// Circular arc; positive `angle` turns left.
    Arc {
        radius: f64,
        angle: f64,
        speed: f64,
    },
}

impl PlanSegment {
    pub fn length(&self) -> f64 {
        match *self {
            Self::Straight { length, .. } => length,
            Self::Arc { radius, angle, .. } => radius * angle.abs(),
        }
    }

    pub fn velocity(&self) -> Velocity {
        match *self {
            Self::Straight { speed, .. } => Velocity::new(speed, 0.0),
            Self::Arc { radius, angle, speed } => Velocity::new(speed, angle.signum() * speed / radius),
        }
    }

    pub fn is_curved(&self) -> bool {
        matches!(self, Self::Arc { .. })
    }
}

/// Route built from straight lines and circular arcs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub segments: Vec<PlanSegment>,
}

impl SegmentPlan {
    pub fn new(segments: Vec<PlanSegment>) -> Self {
        Self { segments }
    }

    /// Closed stadium: half-circle, straight, half-circle, straight. Starts at
    /// the beginning of the first half-circle, turning left.
    pub fn oval(length: f64, radius: f64, speed: f64) -> Self {
        let straight = ((length - 2.0 * PI * radius) / 2.0).max(0.0);
        let arc = PlanSegment::Arc {
            radius,
            angle: PI,
            speed,
        };
        let line = PlanSegment::Straight {
            length: straight,
            speed,
        };
        Self::new(vec![arc, line, arc, line])
    }

    /// Closed figure-eight of four half-circles joined by three straights;
    /// the middle straight is twice as long as the other two.
    pub fn lemniscate(length: f64, radius: f64, speed: f64) -> Self {
        let s = ((length - 4.0 * PI * radius) / 4.0).max(0.0);
        let left = PlanSegment::Arc {
            radius,
            angle: PI,
            speed,
        };
        let right = PlanSegment::Arc {
            radius,
            angle: -PI,
            speed,
        };
        Self::new(vec![
            left,
            PlanSegment::Straight { length: s, speed },
            left,
            PlanSegment::Straight { length: 2.0 * s, speed },
            right,
            PlanSegment::Straight { length: s, speed },
            right,
        ])
    }

    /// Drops the last `gap` meters so the route no longer closes.
    pub fn shortened(mut self, gap: f64) -> Self {
        let mut remaining = gap;
        while remaining > 0.0 {
            let Some(last) = self.segments.pop() else { break };
            let len = last.length();
            if len > remaining {
                let keep = len - remaining;
                self.segments.push(match last {
                    PlanSegment::Straight { speed, .. } => PlanSegment::Straight { length: keep, speed },
                    PlanSegment::Arc { radius, angle, speed } => PlanSegment::Arc {
                        radius,
                        angle: angle.signum() * keep / radius,
                        speed,
                    },
                });
                break;
            }
            remaining -= len;
        }
        self
    }

    /// Segment boundaries as cumulative distances, starting with 0.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut d = 0.0;
        out.push(d);
        for s in &self.segments {
            d += s.length();
            out.push(d);
        }
        out
    }

    /// Segment containing distance `d` (the last one past the end).
    pub fn segment_at(&self, d: f64) -> Option<&PlanSegment> {
        let b = self.boundaries();
        let idx = b[1..].partition_point(|&e| e <= d);
        self.segments.get(idx.min(self.segments.len().saturating_sub(1)))
    }
}

impl DrivePlan for SegmentPlan {
    fn velocity_at(&self, d: f64) -> Velocity {
        self.segment_at(d).map_or(Velocity::STOP, PlanSegment::velocity)
    }

    fn total_length(&self) -> f64 {
        self.segments.iter().map(PlanSegment::length).sum()
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.boundaries()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oval_geometry() {
        let p = SegmentPlan::oval(10.0, 1.0, 0.5);
        assert!((p.total_length() - 10.0).abs() < 1e-12);
        assert_eq!(p.velocity_at(0.0), Velocity::new(0.5, 0.5));
        assert_eq!(p.velocity_at(PI + 0.1), Velocity::new(0.5, 0.0));
    }

    #[test]
    fn lemniscate_length() {
        let p = SegmentPlan::lemniscate(17.0, 1.0, 0.5);
        assert!((p.total_length() - 17.0).abs() < 1e-12);
        assert_eq!(p.segments.iter().filter(|s| s.is_curved()).count(), 4);
    }

    #[test]
    fn shortened_trims_tail() {
        let p = SegmentPlan::oval(10.0, 1.0, 0.5).shortened(0.15);
        assert!((p.total_length() - 9.85).abs() < 1e-12);
    }
}
