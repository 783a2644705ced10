#![allow(dead_code)]

use bearnav::error_model::{
    compose_transitions, curved_segment_transition, eigenvalues, integrate_error, straight_segment_transition,
    ErrorState, FeatureDistance, Perturbation,
};
use bearnav::types::Velocity;
use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Error-dynamics matrix built independently of the library.
pub fn a_matrix(v: f64, omega: f64, l: f64) -> Matrix2<f64> {
    Matrix2::new(0.0, omega, -omega, -v / l)
}

/// Eigenvalues from nalgebra's general complex eigen-solver, sorted by
/// descending real part, then descending imaginary part.
pub fn numeric_eigenvalues(v: f64, omega: f64, l: f64) -> [Complex64; 2] {
    let ev = a_matrix(v, omega, l).complex_eigenvalues();
    let mut out = [Complex64::new(ev[0].re, ev[0].im), Complex64::new(ev[1].re, ev[1].im)];
    out.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    out
}

/// Exact solution of `e' = A e + s` for constant `A` and `s`, through the
/// exponential of the augmented 3x3 matrix `[[A, s], [0, 0]]`.
pub fn expm_solution(v: f64, omega: f64, l: f64, s: [f64; 2], e0: ErrorState, t: f64) -> ErrorState {
    let a = a_matrix(v, omega, l);
    let aug = Matrix3::new(a[(0, 0)], a[(0, 1)], s[0], a[(1, 0)], a[(1, 1)], s[1], 0.0, 0.0, 0.0) * t;
    let r = aug.exp() * Vector3::new(e0.x, e0.y, 1.0);
    ErrorState::new(r[0], r[1])
}

/// `exp(A t)` as a row-major array.
pub fn expm(v: f64, omega: f64, l: f64, t: f64) -> [[f64; 2]; 2] {
    let m = (a_matrix(v, omega, l) * t).exp();
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

pub fn dist(a: ErrorState, b: ErrorState) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

pub struct EigenCheck {
    pub max_rel_err: f64,
    pub curved_all_stable: bool,
    pub straight_zero_exact: bool,
}

/// Closed-form eigenvalues against the numeric solver over `n` random
/// triples; every tenth triple has `omega = 0`.
pub fn eigen_check(n: usize, seed: u64) -> EigenCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = EigenCheck {
        max_rel_err: 0.0,
        curved_all_stable: true,
        straight_zero_exact: true,
    };
    for i in 0..n {
        let v = rng.random_range(0.01..5.0);
        let l = rng.random_range(0.1..20.0);
        let omega = if i % 10 == 0 { 0.0 } else { rng.random_range(-3.0..3.0) };
        let e = eigenvalues(v, omega, l).unwrap();
        let num = numeric_eigenvalues(v, omega, l);
        let mut closed = [e.lambda1, e.lambda2];
        closed.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        let scale = num[0].norm().max(num[1].norm());
        for k in 0..2 {
            out.max_rel_err = out.max_rel_err.max((closed[k] - num[k]).norm() / scale);
        }
        if omega != 0.0 && !(e.lambda1.re < 0.0 && e.lambda2.re < 0.0) {
            out.curved_all_stable = false;
        }
        if omega == 0.0 && !(e.lambda1.re == 0.0 && e.lambda1.im == 0.0) {
            out.straight_zero_exact = false;
        }
    }
    out
}

/// Largest RK4 deviation from the exact solution over `n` random
/// constant-coefficient cases, sampled once per second over 10 s.
pub fn rk4_expm_max_error(n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let v = rng.random_range(0.2..2.0);
        let l = rng.random_range(0.5..10.0);
        let omega = rng.random_range(-1.5..1.5);
        let s = [rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05)];
        let e0 = ErrorState::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let traj = integrate_error(
            e0,
            |_| Velocity::new(v, omega),
            FeatureDistance::new(l).unwrap(),
            &Perturbation::Constant { s_x: s[0], s_y: s[1] },
            10.0,
            1e-3,
        )
        .unwrap();
        for p in traj.iter().step_by(1000) {
            worst = worst.max(dist(p.state, expm_solution(v, omega, l, s, e0, p.t)));
        }
        worst = worst.max(dist(
            traj.last().unwrap().state,
            expm_solution(v, omega, l, s, e0, 10.0),
        ));
    }
    worst
}

/// Global RK4 error at `t = 10` for each step size.
pub fn rk4_global_errors(steps: &[f64]) -> Vec<f64> {
    let (v, omega, l) = (1.0, 1.0, 1.0);
    let e0 = ErrorState::new(1.0, 1.0);
    let exact = expm_solution(v, omega, l, [0.0, 0.0], e0, 10.0);
    steps
        .iter()
        .map(|&dt| {
            let traj = integrate_error(
                e0,
                |_| Velocity::new(v, omega),
                FeatureDistance::new(l).unwrap(),
                &Perturbation::Zero,
                10.0,
                dt,
            )
            .unwrap();
            dist(traj.last().unwrap().state, exact)
        })
        .collect()
}

pub struct CompositionCheck {
    pub max_spectral_radius: f64,
    pub max_map_error: f64,
}

/// Random straight-then-curved segment pairs: composed transition against
/// direct integration across both segments.
pub fn composition_check(pairs: usize, seed: u64) -> CompositionCheck {
    let dt = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CompositionCheck {
        max_spectral_radius: 0.0,
        max_map_error: 0.0,
    };
    for _ in 0..pairs {
        let v = rng.random_range(0.2..2.0);
        let l = FeatureDistance::new(rng.random_range(0.5..10.0)).unwrap();
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let omega = sign * rng.random_range(0.1..1.5);
        let n0 = rng.random_range(500..5000u32);
        let n1 = rng.random_range(500..5000u32);
        let t0 = n0 as f64 * dt;
        let t1 = n1 as f64 * dt;
        let straight = straight_segment_transition(v, l, t0).unwrap();
        let curved = curved_segment_transition(|_| Velocity::new(v, omega), l, &Perturbation::Zero, t1, dt).unwrap();
        let composed = compose_transitions(&[straight, curved]).unwrap();
        out.max_spectral_radius = out.max_spectral_radius.max(composed.spectral_radius());
        let controls = |t: f64| Velocity::new(v, if t < t0 { 0.0 } else { omega });
        for _ in 0..10 {
            let e0 = ErrorState::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let traj = integrate_error(e0, controls, l, &Perturbation::Zero, (n0 + n1) as f64 * dt, dt).unwrap();
            let direct = traj.last().unwrap().state;
            out.max_map_error = out.max_map_error.max(dist(composed.apply(e0), direct));
        }
    }
    out
}
