use serde::{Deserialize, Serialize};

use super::{Observation, VisionError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchPair {
    pub map_index: usize,
    pub current_index: usize,
    pub u_map: f64,
    pub u_current: f64,
    pub hamming: u32,
}

impl MatchPair {
    /// Horizontal displacement `u_map - u_current`, pixels.
    pub fn displacement(&self) -> f64 {
        self.u_map - self.u_current
    }
}

/// One-to-one correspondences between a local map and the current frame.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MatchSet {
    pub pairs: Vec<MatchPair>,
}

impl MatchSet {
    pub fn from_displacements(displacements: &[f64]) -> Self {
        Self {
            pairs: displacements
                .iter()
                .enumerate()
                .map(|(i, &d)| MatchPair {
                    map_index: i,
                    current_index: i,
                    u_map: d,
                    u_current: 0.0,
                    hamming: 0,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn displacements(&self) -> impl Iterator<Item = f64> + '_ {
        self.pairs.iter().map(MatchPair::displacement)
    }
}

/// Mutual nearest-neighbour matching under Hamming distance.
///
/// A pair is kept when each descriptor is the other's closest (ties go to
/// the lower index) and their distance is at most `max_hamming`.
pub fn match_features(
    map_obs: &[Observation],
    current_obs: &[Observation],
    max_hamming: u32,
) -> Result<MatchSet, VisionError> {
    let Some(first) = map_obs.first().or(current_obs.first()) else {
        return Ok(MatchSet::default());
    };
    let bits = first.descriptor.bits();
    if let Some(bad) = map_obs.iter().chain(current_obs).find(|o| o.descriptor.bits() != bits) {
        return Err(VisionError::Argument(format!(
            "descriptor length mismatch: {} vs {bits} bits",
            bad.descriptor.bits()
        )));
    }
    if map_obs.is_empty() || current_obs.is_empty() {
        return Ok(MatchSet::default());
    }

    let n = current_obs.len();
    let mut dist = vec![0u32; map_obs.len() * n];
    for (i, m) in map_obs.iter().enumerate() {
        for (j, c) in current_obs.iter().enumerate() {
            dist[i * n + j] = m.descriptor.hamming(&c.descriptor);
        }
    }
    let best_for_map: Vec<usize> = (0..map_obs.len())
        .map(|i| argmin((0..n).map(|j| dist[i * n + j])))
        .collect();
    let best_for_current: Vec<usize> = (0..n)
        .map(|j| argmin((0..map_obs.len()).map(|i| dist[i * n + j])))
        .collect();

    let pairs = best_for_map
        .iter()
        .enumerate()
        .filter(|&(i, &j)| best_for_current[j] == i && dist[i * n + j] <= max_hamming)
        .map(|(i, &j)| MatchPair {
            map_index: i,
            current_index: j,
            u_map: map_obs[i].u,
            u_current: current_obs[j].u,
            hamming: dist[i * n + j],
        })
        .collect();
    Ok(MatchSet { pairs })
}

fn argmin(it: impl Iterator<Item = u32>) -> usize {
    let mut best = (u32::MAX, 0);
    for (k, d) in it.enumerate() {
        if d < best.0 {
            best = (d, k);
        }
    }
    best.1
}
