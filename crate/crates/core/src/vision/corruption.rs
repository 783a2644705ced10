use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{CameraModel, Descriptor, Observation, VisionError};

/// Landmark id given to spurious observations.
pub const CLUTTER_ID: i64 = -1;

/// Appearance degradation applied to each camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CorruptionModel {
    /// Independent per-bit descriptor flip probability.
    pub bit_flip_prob: f64,
    /// Per-landmark detection failure probability.
    pub dropout_prob: f64,
    /// Expected number of spurious observations per frame.
    pub clutter_rate: f64,
    pub pixel_noise_sigma: f64,
    pub seed: u64,
}

impl CorruptionModel {
    pub const NONE: CorruptionModel = CorruptionModel {
        bit_flip_prob: 0.0,
        dropout_prob: 0.0,
        clutter_rate: 0.0,
        pixel_noise_sigma: 0.0,
        seed: 0,
    };

    /// Everyday degradation: a few flipped bits, occasional missed
    /// detections, light clutter and one pixel of localisation noise.
    pub fn nominal(seed: u64) -> Self {
        Self {
            bit_flip_prob: 0.02,
            dropout_prob: 0.1,
            clutter_rate: 2.0,
            pixel_noise_sigma: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), VisionError> {
        for (name, p) in [
            ("bit_flip_prob", self.bit_flip_prob),
            ("dropout_prob", self.dropout_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(VisionError::Argument(format!("{name} must be in [0, 1], got {p}")));
            }
        }
        if !(self.clutter_rate >= 0.0 && self.clutter_rate.is_finite()) {
            return Err(VisionError::Argument(format!(
                "clutter_rate must be non-negative, got {}",
                self.clutter_rate
            )));
        }
        if !(self.pixel_noise_sigma >= 0.0 && self.pixel_noise_sigma.is_finite()) {
            return Err(VisionError::Argument(format!(
                "pixel_noise_sigma must be non-negative, got {}",
                self.pixel_noise_sigma
            )));
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        self.bit_flip_prob == 0.0
            && self.dropout_prob == 0.0
            && self.clutter_rate == 0.0
            && self.pixel_noise_sigma == 0.0
    }
}

/// Stateful frame corruptor; one generator per simulated camera.
#[derive(Debug, Clone)]
pub struct Corruptor {
    model: CorruptionModel,
    rng: ChaCha8Rng,
}

impl Corruptor {
    pub fn new(model: CorruptionModel) -> Result<Self, VisionError> {
        model.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(model.seed),
            model,
        })
    }

    pub fn model(&self) -> &CorruptionModel {
        &self.model
    }

    /// Applies dropout, descriptor bit flips, pixel noise and clutter.
    ///
    /// `descriptor_bits` sizes the clutter descriptors.
    pub fn apply(
        &mut self,
        observations: Vec<Observation>,
        camera: &CameraModel,
        descriptor_bits: usize,
    ) -> Vec<Observation> {
        if self.model.is_identity() {
            return observations;
        }
        let m = self.model;
        let rng = &mut self.rng;
        let width = camera.width();
        let max_u = width.next_down();
        let pixel = (m.pixel_noise_sigma > 0.0).then(|| Normal::new(0.0, m.pixel_noise_sigma).expect("sigma >= 0"));

        let mut out = Vec::with_capacity(observations.len());
        for mut obs in observations {
            if m.dropout_prob > 0.0 && rng.random_bool(m.dropout_prob) {
                continue;
            }
            if m.bit_flip_prob > 0.0 {
                flip_bits(&mut obs.descriptor, m.bit_flip_prob, rng);
            }
            if let Some(n) = &pixel {
                obs.u = (obs.u + n.sample(rng)).clamp(0.0, max_u);
            }
            out.push(obs);
        }
        if m.clutter_rate > 0.0 {
            let count = Poisson::new(m.clutter_rate).expect("rate > 0").sample(rng) as usize;
            for _ in 0..count {
                let descriptor = Descriptor::random(descriptor_bits, rng).expect("valid descriptor length");
                out.push(Observation {
                    u: rng.random_range(0.0..width),
                    descriptor,
                    landmark_id: CLUTTER_ID,
                });
            }
        }
        out
    }
}

/// Independent per-bit flips, drawn as a binomial count of distinct positions.
fn flip_bits<R: Rng>(d: &mut Descriptor, p: f64, rng: &mut R) {
    let bits = d.bits();
    let count = Binomial::new(bits as u64, p).expect("p in [0, 1]").sample(rng) as usize;
    for i in index::sample(rng, bits, count) {
        d.flip(i);
    }
}

/// One-shot corruption with a generator seeded from `model.seed`.
pub fn corrupt(
    observations: Vec<Observation>,
    model: &CorruptionModel,
    camera: &CameraModel,
    descriptor_bits: usize,
) -> Result<Vec<Observation>, VisionError> {
    Ok(Corruptor::new(*model)?.apply(observations, camera, descriptor_bits))
}
