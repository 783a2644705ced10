use bearnav::teach_repeat::{
    decode_route, encode_route, load_route, measure_loop_error, repeat_step, save_route, teach, NavigatorState,
    PlanSegment, RouteFileError, SegmentPlan, TaughtRoute, TeachParams,
};
use bearnav::types::{NavigatorConfig, Pose};
use bearnav::vision::{project, CameraModel, World};

fn straight(length: f64, speed: f64) -> PlanSegment {
    PlanSegment::Straight { length, speed }
}

fn teach_plan(plan: &SegmentPlan, world: &World) -> TaughtRoute {
    teach(
        plan,
        world,
        &CameraModel::default(),
        &NavigatorConfig::default(),
        &TeachParams::default(),
    )
    .unwrap()
}

fn box_world(seed: u64) -> World {
    World::uniform_box(seed, 80, [4.5, -2.0, 0.0], [5.5, 2.0, 2.0], 256).unwrap()
}

#[test]
fn one_meter_straight_gives_six_maps() {
    let route = teach_plan(&SegmentPlan::new(vec![straight(1.0, 0.5)]), &box_world(1));
    let d: Vec<f64> = route.maps.iter().map(|m| m.d).collect();
    assert_eq!(d.len(), 6);
    for (k, &dk) in d.iter().enumerate() {
        assert!((dk - 0.2 * k as f64).abs() < 1e-12);
    }
    assert_eq!(route.profile.entries().len(), 1);
}

#[test]
fn ten_meter_oval_gives_fifty_one_maps() {
    let world = World::uniform_box(2, 400, [-8.0, -8.0, 0.0], [8.0, 8.0, 2.0], 256).unwrap();
    let route = teach_plan(&SegmentPlan::oval(10.0, 1.0, 0.5), &world);
    assert_eq!(route.maps.len(), 51);
    assert!((route.profile.total_length() - 10.0).abs() < 1e-9);
}

#[test]
fn one_speed_change_gives_two_entries() {
    let route = teach_plan(
        &SegmentPlan::new(vec![straight(5.0, 0.5), straight(5.0, 1.0)]),
        &box_world(3),
    );
    let e = route.profile.entries();
    assert_eq!(e.len(), 2);
    assert_eq!(e[1].d, 5.0);
    assert_eq!(e[1].velocity.v, 1.0);
}

#[test]
fn on_path_command_equals_profile() {
    let world = box_world(4);
    let route = teach_plan(&SegmentPlan::new(vec![straight(2.0, 0.5)]), &world);
    let cfg = route.metadata.config;
    let obs = project(&Pose::default(), &route.metadata.camera, world.landmarks());
    let (cmd, next) = repeat_step(&NavigatorState::start(), &route, &obs, 0.0, &cfg).unwrap();
    assert_eq!(next.kappa(), Some(0.0));
    assert_eq!((cmd.v, cmd.omega), (0.5, 0.0));

    let (cmd, next) = repeat_step(&NavigatorState::start(), &route, &[], 0.0, &cfg).unwrap();
    assert!(next.last_vote.as_ref().is_some_and(|v| !v.is_conclusive()));
    assert_eq!((cmd.v, cmd.omega), (0.5, 0.0));
}

#[test]
fn lateral_offset_steers_back_toward_path() {
    let camera = CameraModel::default();
    for seed in 0..100 {
        let world = box_world(100 + seed);
        let route = teach_plan(&SegmentPlan::new(vec![straight(2.0, 0.5)]), &world);
        let cfg = route.metadata.config;
        for side in [1.0, -1.0] {
            let pose = Pose::new(0.0, 0.5 * side, 0.0);
            let obs = project(&pose, &camera, world.landmarks());
            // Oracle: mean image shift of the same landmarks between the taught
            // and the offset pose.
            let taught = project(&Pose::default(), &camera, world.landmarks());
            let shifts: Vec<f64> = obs
                .iter()
                .filter_map(|o| {
                    taught
                        .iter()
                        .find(|t| t.landmark_id == o.landmark_id)
                        .map(|t| t.u - o.u)
                })
                .collect();
            let mean_shift = shifts.iter().sum::<f64>() / shifts.len() as f64;
            let (cmd, next) = repeat_step(&NavigatorState::start(), &route, &obs, 0.0, &cfg).unwrap();
            let kappa = next.kappa().expect("conclusive vote");
            assert_eq!(kappa.signum(), mean_shift.signum(), "seed {seed} side {side}");
            assert_eq!(
                cmd.omega.signum(),
                -side,
                "seed {seed}: command must turn toward the path"
            );
        }
    }
}

#[test]
fn route_file_round_trip() {
    let world = World::uniform_box(5, 300, [-6.0, -6.0, 0.0], [6.0, 6.0, 2.0], 256).unwrap();
    let route = teach_plan(&SegmentPlan::lemniscate(12.0, 1.0, 0.4), &world);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.route");
    save_route(&route, &path).unwrap();
    assert_eq!(load_route(&path).unwrap(), route);
}

#[test]
fn corrupted_map_byte_names_the_section() {
    let route = teach_plan(&SegmentPlan::new(vec![straight(1.0, 0.5)]), &box_world(6));
    let mut bytes = encode_route(&route);
    let at = bytes.windows(4).position(|w| w == b"MAP ").unwrap();
    bytes[at + 8] ^= 0x40;
    match decode_route(&bytes) {
        Err(RouteFileError::Checksum { section }) => assert_eq!(section, "MAP 0"),
        other => panic!("expected checksum error, got {other:?}"),
    }
}

#[test]
fn empty_file_is_a_format_error() {
    assert!(matches!(decode_route(&[]), Err(RouteFileError::Format(_))));
}

#[test]
fn loop_error_examples() {
    let route = teach_plan(&SegmentPlan::new(vec![straight(1.0, 0.5)]), &box_world(7));
    assert_eq!(measure_loop_error(&Pose::default(), &route), 0.0);
    assert!((measure_loop_error(&Pose::new(0.6, 0.8, 0.3), &route) - 1.0).abs() < 1e-12);
    let e = measure_loop_error(&Pose::new(0.9, 0.8, 0.0), &route);
    assert!((e - 1.204).abs() < 1e-3, "{e}");
}
