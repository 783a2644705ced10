use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{NoiseModel, SimError, TraversalConfig};
use crate::teach_repeat::{teach, DrivePlan, PlanSegment, SegmentPlan, TaughtRoute, TeachParams};
use crate::types::{NavigatorConfig, Pose};
use crate::vision::{CameraModel, CorruptionModel, World, DEFAULT_BITS};

/// Landmark layout of the simulated environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WorldSpec {
    /// Landmarks 2-4 m from the route.
    SmallRoom {
        #[serde(default = "default_density")]
        density: f64,
    },
    /// Landmarks 6-12 m from the route.
    LargeHall {
        #[serde(default = "default_density")]
        density: f64,
    },
    /// Landmarks in a custom band around the route; `density` is landmarks
    /// per meter of route.
    AroundPath {
        standoff_min: f64,
        standoff_max: f64,
        density: f64,
    },
    Corridor {
        length: f64,
        width: f64,
        per_wall: usize,
    },
    UniformBox {
        count: usize,
        min: [f64; 3],
        max: [f64; 3],
    },
    /// Landmark JSON file.
    File {
        path: PathBuf,
    },
}

fn default_density() -> f64 {
    30.0
}

impl WorldSpec {
    pub fn small_room() -> Self {
        Self::SmallRoom {
            density: default_density(),
        }
    }

    pub fn large_hall() -> Self {
        Self::LargeHall {
            density: default_density(),
        }
    }

    /// Builds the world around `path`, a dense polyline of the taught route.
    pub fn build(&self, seed: u64, path: &[(f64, f64)], route_length: f64, bits: usize) -> Result<World, SimError> {
        let band = |lo: f64, hi: f64, density: f64| -> Result<World, SimError> {
            let count = (density * route_length).round().max(1.0) as usize;
            Ok(World::around_path(seed, path, (lo, hi), count, bits)?)
        };
        match self {
            Self::SmallRoom { density } => band(2.0, 4.0, *density),
            Self::LargeHall { density } => band(6.0, 12.0, *density),
            Self::AroundPath {
                standoff_min,
                standoff_max,
                density,
            } => band(*standoff_min, *standoff_max, *density),
            Self::Corridor {
                length,
                width,
                per_wall,
            } => Ok(World::corridor(seed, *length, *width, *per_wall, bits)?),
            Self::UniformBox { count, min, max } => Ok(World::uniform_box(seed, *count, *min, *max, bits)?),
            Self::File { path } => {
                let f = std::fs::File::open(path)
                    .map_err(|e| SimError::Scenario(format!("cannot open world file {}: {e}", path.display())))?;
                Ok(World::read_json(std::io::BufReader::new(f))?)
            }
        }
    }
}

/// Route the operator drives while teaching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PlanSpec {
    Oval {
        length: f64,
        radius: f64,
        speed: f64,
        /// Meters dropped from the end so start and end do not coincide.
        #[serde(default)]
        gap: f64,
    },
    Lemniscate {
        length: f64,
        radius: f64,
        speed: f64,
        #[serde(default)]
        gap: f64,
    },
    Segments {
        segments: Vec<PlanSegment>,
    },
}

impl PlanSpec {
    pub fn to_plan(&self) -> SegmentPlan {
        match self {
            Self::Oval {
                length,
                radius,
                speed,
                gap,
            } => SegmentPlan::oval(*length, *radius, *speed).shortened(*gap),
            Self::Lemniscate {
                length,
                radius,
                speed,
                gap,
            } => SegmentPlan::lemniscate(*length, *radius, *speed).shortened(*gap),
            Self::Segments { segments } => SegmentPlan::new(segments.clone()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Oval { .. } => "oval",
            Self::Lemniscate { .. } => "lemniscate",
            Self::Segments { .. } => "segments",
        }
    }
}

/// Offset of the repeat start from the taught start, in the taught start
/// frame (forward, left, heading).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct StartOffset {
    pub forward: f64,
    pub left: f64,
    pub heading: f64,
}

impl StartOffset {
    pub fn norm(&self) -> f64 {
        self.forward.hypot(self.left)
    }
}

/// Everything needed to teach a route and repeat it, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub world: WorldSpec,
    pub plan: PlanSpec,
    #[serde(default)]
    pub start_offset: StartOffset,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub corruption: CorruptionModel,
    /// Appearance degradation while teaching.
    #[serde(default)]
    pub teach_corruption: Option<CorruptionModel>,
    #[serde(default)]
    pub navigator: NavigatorConfig,
    #[serde(default)]
    pub camera: CameraModel,
    #[serde(default)]
    pub traversal: TraversalConfig,
    #[serde(default = "one")]
    pub loops: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_bits")]
    pub descriptor_bits: usize,
}

fn one() -> usize {
    1
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_bits() -> usize {
    DEFAULT_BITS
}

/// A taught route together with the world it was taught in.
#[derive(Debug, Clone)]
pub struct RouteBundle {
    pub world: World,
    pub route: TaughtRoute,
}

/// Independent sub-seeds of one run seed.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const WORLD_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const CORRUPTION_STREAM: u64 = 3;
const TEACH_STREAM: u64 = 4;

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.navigator
            .validate()
            .map_err(|e| SimError::Scenario(e.to_string()))?;
        self.camera.validate()?;
        self.noise.validate()?;
        self.corruption.validate()?;
        if let Some(c) = &self.teach_corruption {
            c.validate()?;
        }
        if self.loops == 0 {
            return Err(SimError::Scenario("loops must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(SimError::Scenario("seed list is empty".into()));
        }
        Ok(())
    }

    /// Ground-truth start pose of the repeat phase for a route taught from
    /// `taught_start`.
    pub fn repeat_start(&self, taught_start: Pose) -> Pose {
        let o = self.start_offset;
        taught_start.compose(&Pose::new(o.forward, o.left, o.heading))
    }

    /// Noise model with the run's own seed.
    pub fn noise_for(&self, seed: u64) -> NoiseModel {
        NoiseModel {
            seed: derive_seed(seed, NOISE_STREAM),
            ..self.noise
        }
    }

    pub fn corruption_for(&self, seed: u64) -> CorruptionModel {
        CorruptionModel {
            seed: derive_seed(seed, CORRUPTION_STREAM),
            ..self.corruption
        }
    }

    pub fn world_seed(&self, seed: u64) -> u64 {
        derive_seed(seed, WORLD_STREAM)
    }

    /// Generates the world for `seed` and teaches the route in it.
    pub fn build(&self, seed: u64) -> Result<RouteBundle, SimError> {
        self.validate()?;
        let plan = self.plan.to_plan();
        let total = plan.total_length();
        let path = polyline(&plan, 0.05);
        let world_seed = self.world_seed(seed);
        let world = self.world.build(world_seed, &path, total, self.descriptor_bits)?;
        let route = self.teach_in(&world, world_seed, seed)?;
        Ok(RouteBundle { world, route })
    }

    /// Teaches the scenario's plan in an existing world.
    pub fn teach_in(&self, world: &World, world_seed: u64, seed: u64) -> Result<TaughtRoute, SimError> {
        let params = TeachParams {
            corruption: self.teach_corruption.map(|c| CorruptionModel {
                seed: derive_seed(seed, TEACH_STREAM),
                ..c
            }),
            world_seed: Some(world_seed),
            plan_name: self.plan.name().to_string(),
            ..TeachParams::default()
        };
        Ok(teach(
            &self.plan.to_plan(),
            world,
            &self.camera,
            &self.navigator,
            &params,
        )?)
    }
}

/// Points along the plan every `step` meters, starting at the origin.
pub fn polyline(plan: &SegmentPlan, step: f64) -> Vec<(f64, f64)> {
    let mut pose = Pose::default();
    let mut out = vec![(0.0, 0.0)];
    for seg in &plan.segments {
        let len = seg.length();
        let vel = seg.velocity();
        let n = (len / step).ceil().max(1.0) as usize;
        let h = len / n as f64;
        for _ in 0..n {
            pose = pose.advance(1.0, vel.omega / vel.v, h);
            out.push((pose.x, pose.y));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json() {
        let s = Scenario::from_json(
            r#"{"world": {"kind": "small_room"}, "plan": {"kind": "oval", "length": 10, "radius": 1, "speed": 0.5}}"#,
        )
        .unwrap();
        assert_eq!(s.loops, 1);
        assert_eq!(s.seeds, vec![0]);
        assert_eq!(s.world, WorldSpec::small_room());
    }

    #[test]
    fn oval_polyline_closes() {
        let plan = SegmentPlan::oval(10.0, 1.0, 0.5);
        let p = polyline(&plan, 0.05);
        let (x, y) = p[p.len() - 1];
        assert!(x.hypot(y) < 1e-9);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(7, 1), derive_seed(7, 2));
        assert_ne!(derive_seed(7, 1), derive_seed(8, 1));
    }
}
