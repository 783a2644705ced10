//! Continuous-time model of the repeat-phase position error.
//!
//! The error `(x, y)` is the robot position expressed in the frame of the
//! local map it is currently using. With the taught velocities `(v, omega)`
//! and the feature distance `l` it evolves as
//!
//! ```text
//! d/dt [x]   [  0      omega ] [x]   [s_x]
//!      [y] = [ -omega  -v/l  ] [y] + [s_y]
//! ```
//!
//! Eigenvalues of the system matrix have negative real parts whenever
//! `omega != 0`, so curved path sections contract the error while straight
//! sections only contract the lateral component. Segment transitions turn
//! this into a discrete system over whole path sections.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::Velocity;

/// Default RK4 step, seconds.
pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model undefined for v = {v}, l = {l} (both must be positive)")]
    Domain { v: f64, l: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("error state diverged at t = {t}")]
    Divergence { t: f64 },
    #[error("segment has zero angular velocity throughout; use a straight segment transition")]
    StraightSegment,
    #[error("no fixed point: spectral radius {0} is not below one")]
    NoFixedPoint(f64),
    #[error("csv export: {0}")]
    Csv(#[from] csv::Error),
}

/// Position error in the local map frame, meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorState {
    /// Longitudinal component.
    pub x: f64,
    /// Lateral component.
    pub y: f64,
}

impl ErrorState {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Row-major 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);

    pub fn mul(&self, rhs: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }

    pub fn apply(&self, e: ErrorState) -> ErrorState {
        let m = &self.0;
        ErrorState::new(m[0][0] * e.x + m[0][1] * e.y, m[1][0] * e.x + m[1][1] * e.y)
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// Both eigenvalues from the characteristic polynomial.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let half_tr = 0.5 * self.trace();
        let det = self.det();
        let disc = half_tr * half_tr - det;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // Larger-magnitude root first, the other from the product.
            let big = if half_tr >= 0.0 { half_tr + sq } else { half_tr - sq };
            let small = if big != 0.0 { det / big } else { 0.0 };
            [Complex64::new(big, 0.0), Complex64::new(small, 0.0)]
        } else {
            let im = (-disc).sqrt();
            [Complex64::new(half_tr, im), Complex64::new(half_tr, -im)]
        }
    }

    pub fn spectral_radius(&self) -> f64 {
        let [a, b] = self.eigenvalues();
        a.norm().max(b.norm())
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]))
    }
}

/// Distance at which the current heading meets the taught-path tangent.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FeatureDistance(f64);

impl FeatureDistance {
    pub fn new(l: f64) -> Result<Self, ModelError> {
        if l > 0.0 && l.is_finite() {
            Ok(Self(l))
        } else {
            Err(ModelError::Argument(format!(
                "feature distance must be positive and finite, got {l}"
            )))
        }
    }

    pub fn meters(self) -> f64 {
        self.0
    }
}

/// The error-dynamics matrix `[[0, omega], [-omega, -v/l]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemMatrix {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
}

impl SystemMatrix {
    pub fn as_mat2(&self) -> Mat2 {
        Mat2([[self.a11, self.a12], [self.a21, self.a22]])
    }

    fn rate(&self, e: ErrorState, s: [f64; 2]) -> ErrorState {
        ErrorState::new(
            self.a11 * e.x + self.a12 * e.y + s[0],
            self.a21 * e.x + self.a22 * e.y + s[1],
        )
    }
}

/// Takes `l` as a raw number so the domain check covers it too.
pub fn system_matrix(v: f64, omega: f64, l: f64) -> Result<SystemMatrix, ModelError> {
    if !(v > 0.0 && l > 0.0) || !v.is_finite() || !l.is_finite() || !omega.is_finite() {
        return Err(ModelError::Domain { v, l });
    }
    Ok(SystemMatrix {
        a11: 0.0,
        a12: omega,
        a21: -omega,
        a22: -v / l,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

impl EigenPair {
    pub fn max_real(&self) -> f64 {
        self.lambda1.re.max(self.lambda2.re)
    }

    pub fn is_complex(&self) -> bool {
        self.lambda1.im != 0.0
    }
}

/// Closed-form eigenvalues of the system matrix.
///
/// `lambda1` is the root with the larger real part; it is exactly zero on a
/// straight line. In the real branch it is recovered from the product of the
/// roots (`omega^2`) to avoid cancellation when `omega` is small.
pub fn eigenvalues(v: f64, omega: f64, l: f64) -> Result<EigenPair, ModelError> {
    system_matrix(v, omega, l)?;
    let a = v / l;
    let disc = a * a - 4.0 * omega * omega;
    if disc >= 0.0 {
        let lambda2 = (-a - disc.sqrt()) / 2.0;
        let lambda1 = if omega == 0.0 { 0.0 } else { omega * omega / lambda2 };
        Ok(EigenPair {
            lambda1: Complex64::new(lambda1, 0.0),
            lambda2: Complex64::new(lambda2, 0.0),
        })
    } else {
        let re = -a / 2.0;
        let im = (-disc).sqrt() / 2.0;
        Ok(EigenPair {
            lambda1: Complex64::new(re, im),
            lambda2: Complex64::new(re, -im),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityVerdict {
    /// Both eigenvalues have negative real part.
    Stable,
    /// One eigenvalue is exactly zero (straight-line motion).
    Marginal,
}

impl EigenPair {
    pub fn verdict(&self) -> StabilityVerdict {
        if self.max_real() < 0.0 {
            StabilityVerdict::Stable
        } else {
            StabilityVerdict::Marginal
        }
    }
}

/// Additive disturbance velocities `(s_x, s_y)`.
#[derive(Clone, Default)]
pub enum Perturbation {
    #[default]
    Zero,
    /// Systematic bias such as odometry miscalibration.
    Constant { s_x: f64, s_y: f64 },
    /// Zero-mean Gaussian noise, held constant over each integration step and
    /// clipped to `max_sigmas` standard deviations.
    WhiteNoise { sigma: f64, max_sigmas: f64, seed: u64 },
    /// Arbitrary disturbance as a function of time, clipped to `s_max`.
    Custom {
        s_max: f64,
        f: Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>,
    },
}

impl std::fmt::Debug for Perturbation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant { s_x, s_y } => write!(f, "Constant({s_x}, {s_y})"),
            Self::WhiteNoise { sigma, seed, .. } => write!(f, "WhiteNoise(sigma={sigma}, seed={seed})"),
            Self::Custom { s_max, .. } => write!(f, "Custom(s_max={s_max})"),
        }
    }
}

impl Perturbation {
    pub fn white_noise(sigma: f64, seed: u64) -> Self {
        Self::WhiteNoise {
            sigma,
            max_sigmas: 4.0,
            seed,
        }
    }

    /// Upper bound on the disturbance magnitude (per component for noise).
    pub fn bound(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { s_x, s_y } => s_x.hypot(*s_y),
            Self::WhiteNoise { sigma, max_sigmas, .. } => sigma * max_sigmas * std::f64::consts::SQRT_2,
            Self::Custom { s_max, .. } => *s_max,
        }
    }

    /// Disturbance at time `t` during integration step `step`.
    ///
    /// Noise samples are keyed by the step index, so re-evaluating a step
    /// gives the same value regardless of call order.
    pub fn value(&self, t: f64, step: u64) -> [f64; 2] {
        match self {
            Self::Zero => [0.0, 0.0],
            Self::Constant { s_x, s_y } => [*s_x, *s_y],
            Self::WhiteNoise {
                sigma,
                max_sigmas,
                seed,
            } => {
                if *sigma <= 0.0 {
                    return [0.0, 0.0];
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(step);
                let n = Normal::new(0.0, *sigma).expect("sigma is positive");
                let lim = sigma * max_sigmas;
                [n.sample(&mut rng).clamp(-lim, lim), n.sample(&mut rng).clamp(-lim, lim)]
            }
            Self::Custom { s_max, f } => {
                let (sx, sy) = f(t);
                let m = sx.hypot(sy);
                if m > *s_max && m > 0.0 {
                    let k = s_max / m;
                    [sx * k, sy * k]
                } else {
                    [sx, sy]
                }
            }
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub state: ErrorState,
}

/// Fixed-step RK4 integration of the error dynamics from `t = 0` to `t_end`.
///
/// `controls(t)` supplies the taught `(v, omega)` at time `t`. The last step
/// is shortened so the trajectory ends exactly at `t_end`; noise samples are
/// held over each step.
pub fn integrate_error<C>(
    x0: ErrorState,
    controls: C,
    l: FeatureDistance,
    s: &Perturbation,
    t_end: f64,
    dt: f64,
) -> Result<Vec<TrajectoryPoint>, ModelError>
where
    C: Fn(f64) -> Velocity,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(ModelError::Argument(format!("dt must be positive, got {dt}")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(ModelError::Argument(format!("t_end must be non-negative, got {t_end}")));
    }
    let steps = step_count(t_end, dt);
    let mut out = Vec::with_capacity(steps as usize + 1);
    out.push(TrajectoryPoint { t: 0.0, state: x0 });
    let mut x = x0;
    for k in 0..steps {
        let t = k as f64 * dt;
        let h = if k + 1 == steps { t_end - t } else { dt };
        x = rk4_step(x, t, h, k, &controls, l, s)?;
        let t1 = if k + 1 == steps { t_end } else { t + h };
        if !x.is_finite() {
            return Err(ModelError::Divergence { t: t1 });
        }
        out.push(TrajectoryPoint { t: t1, state: x });
    }
    Ok(out)
}

fn step_count(t_end: f64, dt: f64) -> u64 {
    let n = (t_end / dt - 1e-9).ceil();
    if n <= 0.0 {
        0
    } else {
        n as u64
    }
}

fn rk4_step<C>(
    x: ErrorState,
    t: f64,
    h: f64,
    step: u64,
    controls: &C,
    l: FeatureDistance,
    s: &Perturbation,
) -> Result<ErrorState, ModelError>
where
    C: Fn(f64) -> Velocity,
{
    let hold = matches!(s, Perturbation::WhiteNoise { .. });
    let s0 = s.value(t, step);
    let pert = |tt: f64| if hold { s0 } else { s.value(tt, step) };
    let mat = |tt: f64| {
        let c = controls(tt);
        system_matrix(c.v, c.omega, l.meters())
    };
    let add = |a: ErrorState, k: ErrorState, f: f64| ErrorState::new(a.x + f * k.x, a.y + f * k.y);

    // Step-end control samples are one-sided limits taken inside the step.
    let inset = h * 1e-9;
    let k1 = mat(t + inset)?.rate(x, pert(t));
    let a_mid = mat(t + 0.5 * h)?;
    let s_mid = pert(t + 0.5 * h);
    let k2 = a_mid.rate(add(x, k1, 0.5 * h), s_mid);
    let k3 = a_mid.rate(add(x, k2, 0.5 * h), s_mid);
    let k4 = mat(t + h - inset)?.rate(add(x, k3, h), pert(t + h));
    Ok(ErrorState::new(
        x.x + h / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x),
        x.y + h / 6.0 * (k1.y + 2.0 * k2.y + 2.0 * k3.y + k4.y),
    ))
}

fn integrate_final<C>(
    x0: ErrorState,
    controls: &C,
    l: FeatureDistance,
    s: &Perturbation,
    duration: f64,
    dt: f64,
) -> Result<ErrorState, ModelError>
where
    C: Fn(f64) -> Velocity,
{
    let steps = step_count(duration, dt);
    let mut x = x0;
    for k in 0..steps {
        let t = k as f64 * dt;
        let h = if k + 1 == steps { duration - t } else { dt };
        x = rk4_step(x, t, h, k, controls, l, s)?;
        if !x.is_finite() {
            return Err(ModelError::Divergence { t: t + h });
        }
    }
    Ok(x)
}

/// Affine map of the error across one path segment: `x1 = N x0 + b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentTransition {
    pub n: Mat2,
    pub b: ErrorState,
}

impl SegmentTransition {
    pub const IDENTITY: SegmentTransition = SegmentTransition {
        n: Mat2::IDENTITY,
        b: ErrorState { x: 0.0, y: 0.0 },
    };

    pub fn apply(&self, e: ErrorState) -> ErrorState {
        let m = self.n.apply(e);
        ErrorState::new(m.x + self.b.x, m.y + self.b.y)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.n.spectral_radius()
    }
}

/// Transition across a straight segment without disturbance.
pub fn straight_segment_transition(v: f64, l: FeatureDistance, duration: f64) -> Result<SegmentTransition, ModelError> {
    straight_segment_transition_biased(v, l, duration, 0.0, 0.0)
}

/// Straight segment under a constant bias `(s_x, s_y)`, in closed form.
pub fn straight_segment_transition_biased(
    v: f64,
    l: FeatureDistance,
    duration: f64,
    s_x: f64,
    s_y: f64,
) -> Result<SegmentTransition, ModelError> {
    system_matrix(v, 0.0, l.meters())?;
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(ModelError::Argument(format!(
            "segment duration must be non-negative, got {duration}"
        )));
    }
    let a = v / l.meters();
    let decay = (-a * duration).exp();
    // (1 - e^{-aT}) / a, written to stay accurate for small aT.
    let lateral_gain = -(-a * duration).exp_m1() / a;
    Ok(SegmentTransition {
        n: Mat2([[1.0, 0.0], [0.0, decay]]),
        b: ErrorState::new(s_x * duration, s_y * lateral_gain),
    })
}

/// State-transition matrix of a curved segment, computed by integrating the
/// homogeneous system from the unit vectors. `b` is the response to `s`
/// from a zero initial error.
pub fn curved_segment_transition<C>(
    controls: C,
    l: FeatureDistance,
    s: &Perturbation,
    duration: f64,
    dt: f64,
) -> Result<SegmentTransition, ModelError>
where
    C: Fn(f64) -> Velocity,
{
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(ModelError::Argument(format!(
            "segment duration must be non-negative, got {duration}"
        )));
    }
    if !(dt > 0.0) {
        return Err(ModelError::Argument(format!("dt must be positive, got {dt}")));
    }
    let steps = step_count(duration, dt);
    let curved = (0..steps.max(1)).any(|k| {
        let t = (k as f64 * dt).min(duration);
        let h = dt.min(duration - t);
        [t, t + 0.5 * h, t + h].iter().any(|&tt| controls(tt).omega != 0.0)
    });
    if !curved {
        return Err(ModelError::StraightSegment);
    }
    let zero = Perturbation::Zero;
    let c0 = integrate_final(ErrorState::new(1.0, 0.0), &controls, l, &zero, duration, dt)?;
    let c1 = integrate_final(ErrorState::new(0.0, 1.0), &controls, l, &zero, duration, dt)?;
    let b = if s.is_zero() {
        ErrorState::default()
    } else {
        integrate_final(ErrorState::default(), &controls, l, s, duration, dt)?
    };
    Ok(SegmentTransition {
        n: Mat2([[c0.x, c1.x], [c0.y, c1.y]]),
        b,
    })
}

/// Chains segments in traversal order: the result maps the error before the
/// first segment to the error after the last.
pub fn compose_transitions(segments: &[SegmentTransition]) -> Result<SegmentTransition, ModelError> {
    let (first, rest) = segments
        .split_first()
        .ok_or_else(|| ModelError::Argument("no segments to compose".into()))?;
    Ok(rest.iter().fold(*first, |acc, seg| SegmentTransition {
        n: seg.n.mul(&acc.n),
        b: {
            let nb = seg.n.apply(acc.b);
            ErrorState::new(nb.x + seg.b.x, nb.y + seg.b.y)
        },
    }))
}

/// Fixed point `x* = N x* + b` of a contracting loop transition.
pub fn steady_loop_error(loop_transition: &SegmentTransition) -> Result<ErrorState, ModelError> {
    let rho = loop_transition.spectral_radius();
    if !(rho < 1.0) {
        return Err(ModelError::NoFixedPoint(rho));
    }
    let n = &loop_transition.n.0;
    let i_minus_n = Mat2([[1.0 - n[0][0], -n[0][1]], [-n[1][0], 1.0 - n[1][1]]]);
    let inv = i_minus_n.inverse().ok_or(ModelError::NoFixedPoint(rho))?;
    Ok(inv.apply(loop_transition.b))
}

pub fn write_trajectory_csv<W: Write>(w: W, traj: &[TrajectoryPoint]) -> Result<(), ModelError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "x", "y"])?;
    for p in traj {
        wr.write_record([p.t.to_string(), p.state.x.to_string(), p.state.y.to_string()])?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Inclusive linear range with `steps` samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn new(min: f64, max: f64, steps: usize) -> Self {
        Self { min, max, steps }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => vec![],
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub v: f64,
    pub omega: f64,
    pub l: f64,
    pub re_lambda1: f64,
    pub re_lambda2: f64,
}

/// Eigenvalue real parts over a `v x omega x l` grid.
pub fn stability_sweep(v: SweepRange, omega: SweepRange, l: SweepRange) -> Result<Vec<SweepRow>, ModelError> {
    let mut rows = Vec::with_capacity(v.steps * omega.steps * l.steps);
    for &vv in &v.values() {
        for &ww in &omega.values() {
            for &ll in &l.values() {
                let e = eigenvalues(vv, ww, ll)?;
                rows.push(SweepRow {
                    v: vv,
                    omega: ww,
                    l: ll,
                    re_lambda1: e.lambda1.re,
                    re_lambda2: e.lambda2.re,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<(), ModelError> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    if rows.is_empty() {
        wr.write_record(["v", "omega", "l", "re_lambda1", "re_lambda2"])?;
    }
    wr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(x: f64) -> FeatureDistance {
        FeatureDistance::new(x).unwrap()
    }

    #[test]
    fn system_matrix_examples() {
        let a = system_matrix(1.0, 0.0, 1.0).unwrap();
        assert_eq!(a.as_mat2(), Mat2([[0.0, 0.0], [0.0, -1.0]]));
        let b = system_matrix(2.0, 0.5, 4.0).unwrap();
        assert_eq!(b.as_mat2(), Mat2([[0.0, 0.5], [-0.5, -0.5]]));
        assert!(matches!(system_matrix(1.0, 0.0, 0.0), Err(ModelError::Domain { .. })));
        assert!(matches!(system_matrix(0.0, 0.0, 1.0), Err(ModelError::Domain { .. })));
    }

    #[test]
    fn eigen_examples() {
        let e = eigenvalues(1.0, 0.0, 1.0).unwrap();
        assert_eq!(e.lambda1, Complex64::new(0.0, 0.0));
        assert_eq!(e.lambda2, Complex64::new(-1.0, 0.0));
        assert_eq!(e.verdict(), StabilityVerdict::Marginal);

        let e = eigenvalues(1.0, 1.0, 1.0).unwrap();
        assert!((e.lambda1.re + 0.5).abs() < 1e-15);
        assert!((e.lambda1.im - 3f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(e.lambda2, e.lambda1.conj());
        assert_eq!(e.verdict(), StabilityVerdict::Stable);
    }

    #[test]
    fn eigen_residual_small_omega() {
        // Real branch with omega tiny: naive formula would cancel to zero.
        let (v, w, ll) = (2.0, 1e-6, 0.5);
        let e = eigenvalues(v, w, ll).unwrap();
        for lam in [e.lambda1, e.lambda2] {
            let res = lam * (lam + v / ll) + w * w;
            assert!(res.norm() <= 1e-12 * (v / ll) * (v / ll));
        }
        assert!(e.lambda1.re < 0.0);
    }

    #[test]
    fn straight_transition_examples() {
        let t = straight_segment_transition(1.0, l(1.0), 0.0).unwrap();
        assert_eq!(t.n, Mat2::IDENTITY);
        let t = straight_segment_transition(1.0, l(1.0), 2f64.ln()).unwrap();
        assert!((t.n.0[1][1] - 0.5).abs() < 1e-15);
        assert_eq!(t.spectral_radius(), 1.0);
        assert!(straight_segment_transition(1.0, l(1.0), -1.0).is_err());
    }

    #[test]
    fn curved_refuses_straight_controls() {
        let r = curved_segment_transition(|_| Velocity::new(1.0, 0.0), l(1.0), &Perturbation::Zero, 1.0, 1e-2);
        assert!(matches!(r, Err(ModelError::StraightSegment)));
    }

    #[test]
    fn compose_and_fixed_point() {
        assert!(compose_transitions(&[]).is_err());
        let id = compose_transitions(&[SegmentTransition::IDENTITY, SegmentTransition::IDENTITY]).unwrap();
        assert_eq!(id, SegmentTransition::IDENTITY);

        let half = SegmentTransition {
            n: Mat2([[0.5, 0.0], [0.0, 0.5]]),
            b: ErrorState::new(1.0, 1.0),
        };
        assert_eq!(steady_loop_error(&half).unwrap(), ErrorState::new(2.0, 2.0));
        let homog = SegmentTransition {
            b: ErrorState::default(),
            ..half
        };
        assert_eq!(steady_loop_error(&homog).unwrap(), ErrorState::new(0.0, 0.0));
        assert!(matches!(
            steady_loop_error(&SegmentTransition::IDENTITY),
            Err(ModelError::NoFixedPoint(_))
        ));
    }

    #[test]
    fn integrate_argument_errors() {
        let c = |_| Velocity::new(1.0, 0.0);
        assert!(integrate_error(ErrorState::default(), c, l(1.0), &Perturbation::Zero, 1.0, 0.0).is_err());
        assert!(integrate_error(ErrorState::default(), c, l(1.0), &Perturbation::Zero, -1.0, 0.1).is_err());
        let tr = integrate_error(ErrorState::default(), c, l(1.0), &Perturbation::Zero, 0.0, 0.1).unwrap();
        assert_eq!(tr.len(), 1);
    }

    #[test]
    fn divergence_reports_time() {
        let blowup = Perturbation::Custom {
            s_max: f64::INFINITY,
            f: Arc::new(|t| if t > 0.5 { (f64::INFINITY, 0.0) } else { (0.0, 0.0) }),
        };
        let r = integrate_error(
            ErrorState::default(),
            |_| Velocity::new(1.0, 0.0),
            l(1.0),
            &blowup,
            1.0,
            0.1,
        );
        match r {
            Err(ModelError::Divergence { t }) => assert!(t > 0.5 && t <= 0.7, "{t}"),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn noise_is_deterministic_and_bounded() {
        let p = Perturbation::white_noise(0.1, 9);
        assert_eq!(p.value(0.0, 17), p.value(3.0, 17));
        assert_ne!(p.value(0.0, 17), p.value(0.0, 18));
        for k in 0..1000 {
            let [a, b] = p.value(0.0, k);
            assert!(a.abs() <= 0.4 && b.abs() <= 0.4);
        }
    }

    #[test]
    fn sweep_counts_rows() {
        let rows = stability_sweep(
            SweepRange::new(0.1, 1.0, 10),
            SweepRange::new(-1.0, 1.0, 10),
            SweepRange::new(0.5, 5.0, 10),
        )
        .unwrap();
        assert_eq!(rows.len(), 1000);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("v,omega,l,re_lambda1,re_lambda2\n"));
        assert_eq!(text.lines().count(), 1001);
    }
}
