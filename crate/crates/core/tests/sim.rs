use bearnav::error_model::FeatureDistance;
use bearnav::sim::experiments::{oval_scenario, run_series};
use bearnav::sim::{
    compare_to_model, estimate_l, run_multi_loop, run_traversal, step_kinematics, NoiseModel, PlanSpec, RobotState,
    Scenario, Simulator, StartOffset, WorldSpec,
};
use bearnav::teach_repeat::PlanSegment;
use bearnav::types::{DistanceIndex, Pose, SteeringMode, Velocity};
use bearnav::vision::{CameraModel, CorruptionModel, World};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn quiet(base: Scenario) -> Scenario {
    Scenario {
        noise: NoiseModel::NONE,
        corruption: CorruptionModel::NONE,
        ..base
    }
}

fn straight_scenario(length: f64) -> Scenario {
    Scenario {
        plan: PlanSpec::Segments {
            segments: vec![PlanSegment::Straight { length, speed: 0.5 }],
        },
        start_offset: StartOffset::default(),
        loops: 1,
        ..quiet(oval_scenario())
    }
}

#[test]
fn commanded_circle_closes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut s = RobotState::default();
    let omega = 2.0 * std::f64::consts::PI / 10.0;
    for _ in 0..100 {
        s = step_kinematics(&s, Velocity::new(0.5, omega), 0.1, &NoiseModel::NONE, &mut rng);
    }
    assert!(s.pose.x.hypot(s.pose.y) < 1e-9, "{:?}", s.pose);
    assert!(s.pose.theta.abs() < 1e-9 || (s.pose.theta.abs() - 2.0 * std::f64::consts::PI).abs() < 1e-9);
}

#[test]
fn odometry_scale_error_accumulates() {
    let noise = NoiseModel {
        odometry_scale_error: 1.02,
        odometry_noise_sigma: 0.01,
        ..NoiseModel::NONE
    };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut s = RobotState::default();
    for _ in 0..100 {
        s = step_kinematics(&s, Velocity::new(1.0, 0.0), 0.1, &noise, &mut rng);
    }
    assert!((s.pose.x - 10.0).abs() < 1e-9);
    let drift = s.odometer.0 - s.pose.x;
    // Per-step noise is 1 % of 0.102 m, so the sum has sigma of about 0.01 m.
    assert!((drift - 0.2).abs() < 0.05, "drift {drift}");
}

#[test]
fn perfect_replay_of_straight_route() {
    let sc = straight_scenario(8.0);
    let series = run_series(&sc, 1, true).unwrap();
    assert!(series.completed);
    let route = sc.build(1).unwrap().route;
    let miss = series.logs[0].end_pose.distance_to(&route.end_pose());
    assert!(miss < 0.01, "end pose misses the taught end by {miss}");
}

#[test]
fn identical_seeds_are_bit_identical() {
    let sc = Scenario {
        loops: 2,
        ..oval_scenario()
    };
    let a = run_series(&sc, 9, true).unwrap();
    let b = run_series(&sc, 9, true).unwrap();
    assert_eq!(a.logs, b.logs);
    let c = run_series(&sc, 10, true).unwrap();
    assert_ne!(a.logs, c.logs);
}

#[test]
fn curved_route_reduces_lateral_error() {
    let sc = Scenario {
        start_offset: StartOffset {
            forward: 0.0,
            left: 0.4,
            heading: 0.0,
        },
        loops: 1,
        ..quiet(oval_scenario())
    };
    let series = run_series(&sc, 2, false).unwrap();
    assert!(series.errors[0] < 0.4, "loop end error {}", series.errors[0]);
}

#[test]
fn start_end_gap_bounds_steady_error() {
    let sc = Scenario {
        plan: PlanSpec::Oval {
            length: 10.0,
            radius: 1.0,
            speed: 0.5,
            gap: 0.15,
        },
        loops: 10,
        ..oval_scenario()
    };
    for seed in 0..5 {
        let series = run_series(&sc, seed, false).unwrap();
        let tail = &series.errors[5..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!(mean >= 0.9 * 0.15, "seed {seed}: steady error {mean} below the gap");
        assert!(
            tail.iter().all(|&e| e < series.initial_error),
            "seed {seed}: {:?}",
            series.errors
        );
    }
}

#[test]
fn single_loop_equals_run_traversal() {
    let sc = oval_scenario();
    let bundle = sc.build(4).unwrap();
    let start = sc.repeat_start(bundle.route.start_pose());
    let direct = run_traversal(
        &bundle.route,
        start,
        &bundle.world,
        sc.corruption_for(4),
        sc.noise_for(4),
        sc.traversal,
    )
    .unwrap();
    let mut sim = Simulator::new(
        &bundle.route,
        &bundle.world,
        sc.corruption_for(4),
        sc.noise_for(4),
        sc.traversal,
    )
    .unwrap();
    let logs = run_multi_loop(&mut sim, start, 1).unwrap();
    assert_eq!(logs, vec![direct]);
    assert!(run_multi_loop(&mut sim, start, 0).is_err());
}

#[test]
fn loops_chain_end_to_start() {
    let sc = oval_scenario();
    let bundle = sc.build(5).unwrap();
    let mut sim = Simulator::new(
        &bundle.route,
        &bundle.world,
        sc.corruption_for(5),
        sc.noise_for(5),
        sc.traversal,
    )
    .unwrap();
    let logs = run_multi_loop(&mut sim, sc.repeat_start(bundle.route.start_pose()), 3).unwrap();
    assert_eq!(logs.len(), 3);
    for w in logs.windows(2) {
        assert_eq!(w[1].start_pose, w[0].end_pose);
        assert_eq!(w[1].samples[0].d_est, 0.0);
    }
    for log in &logs {
        assert!(log.samples.windows(2).all(|p| p[1].t > p[0].t));
    }
}

#[test]
fn corridor_feature_distance_matches_enumeration() {
    let camera = CameraModel::default();
    let world = World::corridor(12, 30.0, 4.0, 150, 256).unwrap();
    let pose = Pose::new(15.0, 0.3, 0.1);
    let l = estimate_l(&world, &pose, &camera).unwrap();
    let f = camera.focal_px();
    let (s, c) = pose.theta.sin_cos();
    let depths: Vec<f64> = world
        .landmarks()
        .iter()
        .filter_map(|lm| {
            let (dx, dy) = (lm.position[0] - pose.x, lm.position[1] - pose.y);
            let fwd = c * dx + s * dy;
            let left = -s * dx + c * dy;
            let u = f * left / fwd + 160.0;
            (fwd > 0.0 && (0.0..320.0).contains(&u)).then_some(fwd)
        })
        .collect();
    assert!(!depths.is_empty());
    let mean = depths.iter().sum::<f64>() / depths.len() as f64;
    assert!((l.meters() - mean).abs() < 1e-12);
}

#[test]
fn straight_route_keeps_longitudinal_error() {
    let mut sc = Scenario {
        start_offset: StartOffset {
            forward: -0.3,
            left: 0.0,
            heading: 0.0,
        },
        ..straight_scenario(8.0)
    };
    sc.navigator.steering = SteeringMode::ProfileOnly;
    sc.navigator.alpha = 0.0;
    let series = run_series(&sc, 0, true).unwrap();
    let bundle = sc.build(0).unwrap();
    let cmp = compare_to_model(&series.logs[0], &bundle.route, FeatureDistance::new(3.0).unwrap()).unwrap();
    for r in &cmp.rows {
        assert!((r.simulated.x + 0.3).abs() < 1e-9, "{}", r.simulated.x);
        assert!((r.predicted.x + 0.3).abs() < 1e-9, "{}", r.predicted.x);
    }
}

#[test]
fn vision_never_changes_forward_velocity() {
    let series = run_series(
        &Scenario {
            loops: 3,
            ..oval_scenario()
        },
        6,
        true,
    )
    .unwrap();
    assert!(series.logs.iter().all(|l| l.forward_velocity_untouched()));
    assert!(series
        .logs
        .iter()
        .flat_map(|l| &l.samples)
        .any(|s| s.omega_cmd != s.omega_profile));
}

proptest! {
    #[test]
    fn odometer_never_decreases(v in 0.0f64..2.0, w in -2.0f64..2.0, dt in 0.01f64..0.5, seed in any::<u64>()) {
        let noise = NoiseModel::nominal(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = RobotState { pose: Pose::default(), odometer: DistanceIndex(0.0) };
        for _ in 0..20 {
            let next = step_kinematics(&s, Velocity::new(v, w), dt, &noise, &mut rng);
            prop_assert!(next.odometer.0 >= s.odometer.0);
            s = next;
        }
    }

    #[test]
    fn zero_noise_step_matches_arc_formula(v in 0.0f64..2.0, w in -3.0f64..3.0, dt in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = step_kinematics(&RobotState::default(), Velocity::new(v, w), dt, &NoiseModel::NONE, &mut rng);
        let (x, y) = if w.abs() < 1e-9 {
            (v * dt, 0.0)
        } else {
            let r = v / w;
            (r * (w * dt).sin(), r * (1.0 - (w * dt).cos()))
        };
        prop_assert!((s.pose.x - x).abs() < 1e-9 && (s.pose.y - y).abs() < 1e-9);
        prop_assert!((s.odometer.0 - v * dt).abs() < 1e-12);
    }
}

#[test]
fn world_generators_accept_named_layouts() {
    for spec in [WorldSpec::small_room(), WorldSpec::large_hall()] {
        let sc = Scenario {
            world: spec,
            loops: 1,
            ..oval_scenario()
        };
        let bundle = sc.build(0).unwrap();
        assert!(!bundle.world.is_empty());
    }
}
