use serde::{Deserialize, Serialize};

use super::{SimError, TraversalLog};
use crate::error_model::{integrate_error, ErrorState, FeatureDistance, Perturbation};
use crate::teach_repeat::TaughtRoute;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub t: f64,
    pub simulated: ErrorState,
    pub predicted: ErrorState,
}

/// Mean decay rate of the error norm, `-d ln|e| / dt`, over the straight and
/// the curved parts of a traversal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionDecay {
    pub straight: f64,
    pub curved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub rows: Vec<ComparisonRow>,
    pub l: f64,
    /// Largest `| |predicted| - |simulated| |` divided by the initial error norm.
    pub max_norm_deviation: f64,
    /// Pearson correlation between the two error-norm series.
    pub norm_correlation: f64,
    pub simulated_decay: SectionDecay,
    pub predicted_decay: SectionDecay,
}

/// Compares a traversal with the error model.
///
/// The simulated error at each sample is the ground-truth pose expressed in
/// the frame of the taught pose at the robot's odometric distance. The
/// prediction integrates the model with the route's taught velocities and
/// feature distance `l`, starting from the first simulated error.
pub fn compare_to_model(
    log: &TraversalLog,
    route: &TaughtRoute,
    l: FeatureDistance,
) -> Result<ModelComparison, SimError> {
    let samples: Vec<_> = log.samples.iter().filter(|s| !s.finished).collect();
    if samples.len() < 2 {
        return Err(SimError::Argument(
            "traversal log has fewer than two moving samples".into(),
        ));
    }
    let profile = &route.profile;
    let simulated: Vec<ErrorState> = samples
        .iter()
        .map(|s| {
            let local = route.taught_pose_at(s.d_est).relative(&s.pose);
            ErrorState::new(local.x, local.y)
        })
        .collect();

    let t_end = samples[samples.len() - 1].t;
    let dt = 1e-3;
    let traj = integrate_error(
        simulated[0],
        |t| profile.velocity_at_clamped(profile.distance_at_time(t)),
        l,
        &Perturbation::Zero,
        t_end,
        dt,
    )?;
    let predicted: Vec<ErrorState> = samples
        .iter()
        .map(|s| {
            let i = ((s.t / dt).round() as usize).min(traj.len() - 1);
            traj[i].state
        })
        .collect();

    let e0 = simulated[0].norm().max(f64::MIN_POSITIVE);
    let rows: Vec<ComparisonRow> = samples
        .iter()
        .zip(simulated.iter().zip(&predicted))
        .map(|(s, (&sim, &pred))| ComparisonRow {
            t: s.t,
            simulated: sim,
            predicted: pred,
        })
        .collect();
    let max_norm_deviation = rows
        .iter()
        .map(|r| (r.predicted.norm() - r.simulated.norm()).abs() / e0)
        .fold(0.0, f64::max);

    let a: Vec<f64> = simulated.iter().map(ErrorState::norm).collect();
    let b: Vec<f64> = predicted.iter().map(ErrorState::norm).collect();
    let curved: Vec<bool> = samples
        .iter()
        .map(|s| profile.velocity_at_clamped(s.d_est).omega != 0.0)
        .collect();
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();

    Ok(ModelComparison {
        rows,
        l: l.meters(),
        max_norm_deviation,
        norm_correlation: pearson(&a, &b),
        simulated_decay: section_decay(&times, &a, &curved),
        predicted_decay: section_decay(&times, &b, &curved),
    })
}

fn section_decay(t: &[f64], norm: &[f64], curved: &[bool]) -> SectionDecay {
    let mut drop = [0.0; 2];
    let mut time = [0.0; 2];
    for i in 1..t.len() {
        if norm[i] <= 0.0 || norm[i - 1] <= 0.0 {
            continue;
        }
        let k = curved[i - 1] as usize;
        drop[k] += norm[i - 1].ln() - norm[i].ln();
        time[k] += t[i] - t[i - 1];
    }
    let rate = |k: usize| if time[k] > 0.0 { drop[k] / time[k] } else { 0.0 };
    SectionDecay {
        straight: rate(0),
        curved: rate(1),
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}
