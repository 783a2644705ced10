use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Descriptor, VisionError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "LandmarkRecord", try_from = "LandmarkRecord")]
pub struct Landmark {
    pub id: i64,
    /// World-frame position; `z` is carried but unused by the planar camera.
    pub position: [f64; 3],
    pub descriptor: Descriptor,
}

#[derive(Serialize, Deserialize)]
struct LandmarkRecord {
    id: i64,
    x: f64,
    y: f64,
    z: f64,
    descriptor_hex: String,
}

impl From<Landmark> for LandmarkRecord {
    fn from(l: Landmark) -> Self {
        Self {
            id: l.id,
            x: l.position[0],
            y: l.position[1],
            z: l.position[2],
            descriptor_hex: l.descriptor.to_hex(),
        }
    }
}

impl TryFrom<LandmarkRecord> for Landmark {
    type Error = VisionError;

    fn try_from(r: LandmarkRecord) -> Result<Self, Self::Error> {
        Ok(Self {
            id: r.id,
            position: [r.x, r.y, r.z],
            descriptor: Descriptor::from_hex(&r.descriptor_hex)?,
        })
    }
}

/// A set of landmarks with unique ids and equal descriptor lengths.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct World {
    landmarks: Vec<Landmark>,
}

impl World {
    pub fn new(landmarks: Vec<Landmark>) -> Result<Self, VisionError> {
        let mut ids: Vec<i64> = landmarks.iter().map(|l| l.id).collect();
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(VisionError::Argument(format!("duplicate landmark id {}", w[0])));
        }
        if let Some(first) = landmarks.first() {
            let bits = first.descriptor.bits();
            if let Some(bad) = landmarks.iter().find(|l| l.descriptor.bits() != bits) {
                return Err(VisionError::Argument(format!(
                    "landmark {} has a {}-bit descriptor, expected {bits}",
                    bad.id,
                    bad.descriptor.bits()
                )));
            }
        }
        Ok(Self { landmarks })
    }

    pub fn landmarks(&self) -> &[Landmark] {
        &self.landmarks
    }

    pub fn len(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    pub fn descriptor_bits(&self) -> Option<usize> {
        self.landmarks.first().map(|l| l.descriptor.bits())
    }

    /// Landmarks drawn uniformly inside an axis-aligned box.
    pub fn uniform_box(
        seed: u64,
        count: usize,
        min: [f64; 3],
        max: [f64; 3],
        bits: usize,
    ) -> Result<Self, VisionError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        for id in 0..count {
            let mut p = [0.0; 3];
            for k in 0..3 {
                p[k] = if max[k] > min[k] {
                    rng.random_range(min[k]..max[k])
                } else {
                    min[k]
                };
            }
            out.push(Landmark {
                id: id as i64,
                position: p,
                descriptor: Descriptor::random(bits, &mut rng)?,
            });
        }
        Self::new(out)
    }

    /// Two parallel walls `y = +-width/2` along `x in [0, length]`.
    pub fn corridor(seed: u64, length: f64, width: f64, per_wall: usize, bits: usize) -> Result<Self, VisionError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(2 * per_wall);
        for side in [1.0, -1.0] {
            for _ in 0..per_wall {
                let x = rng.random_range(0.0..length);
                let z = rng.random_range(0.0..2.0);
                out.push(Landmark {
                    id: out.len() as i64,
                    position: [x, side * width / 2.0, z],
                    descriptor: Descriptor::random(bits, &mut rng)?,
                });
            }
        }
        Self::new(out)
    }

    /// Landmarks scattered in a band `standoff.0..standoff.1` meters away from
    /// a path given as a dense polyline. Models a room whose walls and
    /// furniture sit at a characteristic distance from the route.
    pub fn around_path(
        seed: u64,
        path: &[(f64, f64)],
        standoff: (f64, f64),
        count: usize,
        bits: usize,
    ) -> Result<Self, VisionError> {
        if path.is_empty() {
            return Err(VisionError::Argument("empty path".into()));
        }
        if !(standoff.0 > 0.0 && standoff.1 > standoff.0) {
            return Err(VisionError::Argument(format!("invalid standoff band {standoff:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count {
            attempts += 1;
            if attempts > count * 1000 {
                return Err(VisionError::Argument(
                    "could not place landmarks in the standoff band".into(),
                ));
            }
            let (px, py) = path[rng.random_range(0..path.len())];
            let ang = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            let r = rng.random_range(standoff.0..standoff.1);
            let (x, y) = (px + r * ang.cos(), py + r * ang.sin());
            let nearest = path
                .iter()
                .map(|&(qx, qy)| (qx - x).hypot(qy - y))
                .fold(f64::INFINITY, f64::min);
            if nearest < standoff.0 {
                continue;
            }
            let z = rng.random_range(0.0..2.0);
            out.push(Landmark {
                id: out.len() as i64,
                position: [x, y, z],
                descriptor: Descriptor::random(bits, &mut rng)?,
            });
        }
        Self::new(out)
    }

    /// JSON array of `{id, x, y, z, descriptor_hex}`.
    pub fn write_json<W: Write>(&self, w: W) -> Result<(), VisionError> {
        serde_json::to_writer_pretty(w, &self.landmarks).map_err(|e| VisionError::Format(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, VisionError> {
        let landmarks: Vec<Landmark> = serde_json::from_reader(r).map_err(|e| VisionError::Format(e.to_string()))?;
        Self::new(landmarks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let w = World::uniform_box(5, 20, [-5.0, -5.0, 0.0], [5.0, 5.0, 2.0], 256).unwrap();
        let mut buf = Vec::new();
        w.write_json(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("descriptor_hex"));
        assert_eq!(World::read_json(buf.as_slice()).unwrap(), w);
    }

    #[test]
    fn generators_are_seeded() {
        let a = World::corridor(1, 10.0, 3.0, 30, 256).unwrap();
        let b = World::corridor(1, 10.0, 3.0, 30, 256).unwrap();
        let c = World::corridor(2, 10.0, 3.0, 30, 256).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.landmarks().iter().all(|l| l.position[1].abs() == 1.5));
    }

    #[test]
    fn around_path_respects_band() {
        let path: Vec<(f64, f64)> = (0..=100).map(|i| (i as f64 * 0.1, 0.0)).collect();
        let w = World::around_path(3, &path, (2.0, 4.0), 200, 256).unwrap();
        for l in w.landmarks() {
            let d = path
                .iter()
                .map(|&(x, y)| (x - l.position[0]).hypot(y - l.position[1]))
                .fold(f64::INFINITY, f64::min);
            assert!((2.0..4.0 + 1e-9).contains(&d), "{d}");
        }
    }

    #[test]
    fn rejects_duplicate_ids_and_mixed_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let lm = |id, bits, rng: &mut ChaCha8Rng| Landmark {
            id,
            position: [0.0; 3],
            descriptor: Descriptor::random(bits, rng).unwrap(),
        };
        assert!(World::new(vec![lm(1, 256, &mut rng), lm(1, 256, &mut rng)]).is_err());
        assert!(World::new(vec![lm(1, 256, &mut rng), lm(2, 128, &mut rng)]).is_err());
    }
}
