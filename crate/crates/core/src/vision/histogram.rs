use serde::{Deserialize, Serialize};

use super::MatchSet;
use crate::types::NavigatorConfig;

/// Outcome of voting over match displacements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramResult {
    /// Centre of the winning bin in pixels; `None` when inconclusive.
    pub kappa: Option<f64>,
    pub bin_width: f64,
    /// Counts for bins centred at `k * bin_width`, `k = -max_bin..=max_bin`.
    pub bin_counts: Vec<u32>,
    pub support: u32,
}

impl HistogramResult {
    pub fn inconclusive(bin_width: f64, bin_counts: Vec<u32>, support: u32) -> Self {
        Self {
            kappa: None,
            bin_width,
            bin_counts,
            support,
        }
    }

    pub fn is_conclusive(&self) -> bool {
        self.kappa.is_some()
    }

    pub fn bin_center(&self, index: usize) -> f64 {
        let max_bin = (self.bin_counts.len() / 2) as f64;
        (index as f64 - max_bin) * self.bin_width
    }
}

/// Mode of the displacement histogram.
///
/// Bins are centred on multiples of the bin width and span
/// `[-image_width, image_width]`; displacements outside are dropped. Ties go
/// to the bin closest to zero, then to the positive side. A winning bin with
/// fewer than `min_matches` votes makes the result inconclusive.
pub fn histogram_vote(matches: &MatchSet, config: &NavigatorConfig, image_width: u32) -> HistogramResult {
    let bw = config.histogram_bin_width;
    let max_bin = (image_width as f64 / bw).floor() as i64;
    let mut counts = vec![0u32; (2 * max_bin + 1) as usize];
    for d in matches.displacements() {
        let k = (d / bw).round();
        if k.is_finite() && k.abs() <= max_bin as f64 {
            counts[(k as i64 + max_bin) as usize] += 1;
        }
    }

    let mut best: Option<(u32, i64)> = None;
    for (idx, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let k = idx as i64 - max_bin;
        let better = match best {
            None => true,
            Some((bc, bk)) => c > bc || (c == bc && (k.abs() < bk.abs() || (k.abs() == bk.abs() && k > bk))),
        };
        if better {
            best = Some((c, k));
        }
    }

    match best {
        Some((support, k)) if support as usize >= config.min_matches => HistogramResult {
            kappa: Some(k as f64 * bw),
            bin_width: bw,
            bin_counts: counts,
            support,
        },
        Some((support, _)) => HistogramResult::inconclusive(bw, counts, support),
        None => HistogramResult::inconclusive(bw, counts, 0),
    }
}
