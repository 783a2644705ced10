use bearnav::types::{NavigatorConfig, Pose};
use bearnav::vision::{
    corrupt, histogram_vote, match_features, project, CameraModel, CorruptionModel, Descriptor, Landmark, MatchSet,
    Observation, CLUTTER_ID,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn random_observations(n: usize, bits: usize, rng: &mut ChaCha8Rng) -> Vec<Observation> {
    (0..n)
        .map(|i| Observation {
            u: rng.random_range(0.0..320.0),
            descriptor: Descriptor::random(bits, rng).unwrap(),
            landmark_id: i as i64,
        })
        .collect()
}

#[test]
fn bit_flips_follow_binomial_statistics() {
    let bits = 256;
    let p = 0.05;
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let obs = random_observations(1000, bits, &mut rng);
    let model = CorruptionModel {
        bit_flip_prob: p,
        seed: 4,
        ..CorruptionModel::NONE
    };
    let out = corrupt(obs.clone(), &model, &CameraModel::default(), bits).unwrap();
    assert_eq!(out.len(), obs.len());
    let n = obs.len() as f64;
    let mean = obs
        .iter()
        .zip(&out)
        .map(|(a, b)| {
            assert_eq!(a.landmark_id, b.landmark_id);
            a.descriptor.hamming(&b.descriptor) as f64
        })
        .sum::<f64>()
        / n;
    let expected = bits as f64 * p;
    let sigma_of_mean = (bits as f64 * p * (1.0 - p) / n).sqrt();
    assert!(
        (mean - expected).abs() < 3.0 * sigma_of_mean,
        "mean {mean}, expected {expected}"
    );
}

#[test]
fn true_pairs_recovered_among_clutter() {
    let bits = 256;
    let mut correct_total = 0usize;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let map = random_observations(20, bits, &mut rng);
        let mut current = corrupt(
            map.clone(),
            &CorruptionModel {
                bit_flip_prob: 0.05,
                seed,
                ..CorruptionModel::NONE
            },
            &CameraModel::default(),
            bits,
        )
        .unwrap();
        for _ in 0..10 {
            current.push(Observation {
                u: rng.random_range(0.0..320.0),
                descriptor: Descriptor::random(bits, &mut rng).unwrap(),
                landmark_id: CLUTTER_ID,
            });
        }
        let m = match_features(&map, &current, 64).unwrap();
        correct_total += m
            .pairs
            .iter()
            .filter(|p| map[p.map_index].landmark_id == current[p.current_index].landmark_id)
            .count();
    }
    let mean = correct_total as f64 / 100.0;
    assert!(mean >= 18.0, "mean correct pairs {mean}");
}

#[test]
fn vote_survives_forty_percent_outliers() {
    let config = NavigatorConfig::default();
    let bw = config.histogram_bin_width;
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inlier = Normal::new(12.0, 1.0).unwrap();
        let d: Vec<f64> = (0..50)
            .map(|i| {
                if i < 30 {
                    inlier.sample(&mut rng)
                } else {
                    rng.random_range(-160.0..160.0)
                }
            })
            .collect();
        let r = histogram_vote(&MatchSet::from_displacements(&d), &config, 320);
        if r.kappa.is_some_and(|k| (k - 12.0).abs() <= bw) {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100 votes near 12 px");
}

#[test]
fn vote_mode_with_unit_bins() {
    let config = NavigatorConfig {
        histogram_bin_width: 1.0,
        min_matches: 2,
        ..NavigatorConfig::default()
    };
    let r = histogram_vote(&MatchSet::from_displacements(&[5.0, 5.0, 5.0, 2.0, 9.0]), &config, 320);
    assert_eq!(r.kappa, Some(5.0));
    assert_eq!(r.support, 3);
    assert!(histogram_vote(&MatchSet::default(), &config, 320).kappa.is_none());
}

#[test]
fn rotation_shifts_features_by_bearing_change() {
    let camera = CameraModel::default();
    let f = (camera.image_width as f64 / 2.0) / (camera.h_fov / 2.0).tan();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let world: Vec<Landmark> = (0..200)
        .map(|i| Landmark {
            id: i,
            position: [rng.random_range(2.0..10.0), rng.random_range(-3.0..3.0), 0.0],
            descriptor: Descriptor::zeros(64).unwrap(),
        })
        .collect();
    for &delta in &[0.01, -0.02, 0.05] {
        let turned = project(&Pose::new(0.0, 0.0, delta), &camera, &world);
        assert!(!turned.is_empty());
        for o in &turned {
            let p = world[o.landmark_id as usize].position;
            let bearing = p[1].atan2(p[0]) - delta;
            let expected = f * bearing.tan() + 160.0;
            assert!((o.u - expected).abs() < 1e-9, "u {} vs {}", o.u, expected);
        }
    }
}

#[test]
fn small_rotation_shift_is_minus_focal_times_angle() {
    let camera = CameraModel::default();
    let f = camera.focal_px();
    let world = vec![Landmark {
        id: 0,
        position: [6.0, 0.0, 0.0],
        descriptor: Descriptor::zeros(64).unwrap(),
    }];
    let delta = 1e-4;
    let u0 = project(&Pose::default(), &camera, &world)[0].u;
    let u1 = project(&Pose::new(0.0, 0.0, delta), &camera, &world)[0].u;
    assert!(((u1 - u0) / delta + f).abs() < 1e-3 * f);
}

fn observations_strategy() -> impl Strategy<Value = Vec<(f64, u64, u64, u64, u64)>> {
    prop::collection::vec(
        (0.0f64..320.0, any::<u64>(), any::<u64>(), any::<u64>(), any::<u64>()),
        0..30,
    )
}

fn to_obs(v: &[(f64, u64, u64, u64, u64)]) -> Vec<Observation> {
    v.iter()
        .enumerate()
        .map(|(i, &(u, a, b, c, d))| Observation {
            u,
            descriptor: Descriptor::from_words(vec![a, b, c, d]),
            landmark_id: i as i64,
        })
        .collect()
}

proptest! {
    #[test]
    fn projections_lie_in_image(x in -5.0f64..5.0, y in -5.0f64..5.0, th in -3.1f64..3.1, seed in 0u64..1000) {
        let camera = CameraModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let world: Vec<Landmark> = (0..50)
            .map(|i| Landmark {
                id: i,
                position: [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0), 1.0],
                descriptor: Descriptor::zeros(64).unwrap(),
            })
            .collect();
        let pose = Pose::new(x, y, th);
        for o in project(&pose, &camera, &world) {
            prop_assert!(o.u >= 0.0 && o.u < 320.0);
            let p = world[o.landmark_id as usize].position;
            let forward = th.cos() * (p[0] - x) + th.sin() * (p[1] - y);
            prop_assert!(forward > 0.0);
        }
    }

    #[test]
    fn matches_are_one_to_one_and_within_threshold(a in observations_strategy(), b in observations_strategy(),
                                                   max in 0u32..256) {
        let (a, b) = (to_obs(&a), to_obs(&b));
        let m = match_features(&a, &b, max).unwrap();
        let mut seen_a = std::collections::HashSet::new();
        let mut seen_b = std::collections::HashSet::new();
        for p in &m.pairs {
            prop_assert!(seen_a.insert(p.map_index));
            prop_assert!(seen_b.insert(p.current_index));
            prop_assert!(p.hamming <= max);
            prop_assert_eq!(p.hamming, a[p.map_index].descriptor.hamming(&b[p.current_index].descriptor));
        }
    }

    #[test]
    fn self_matching_is_identity(a in observations_strategy()) {
        let a = to_obs(&a);
        let m = match_features(&a, &a, 64).unwrap();
        prop_assert!(m.pairs.iter().all(|p| p.displacement() == 0.0));
    }

    #[test]
    fn vote_is_a_supported_bin_center(d in prop::collection::vec(-400.0f64..400.0, 0..60), bw in 0.5f64..10.0,
                                      min in 1usize..8) {
        let config = NavigatorConfig { histogram_bin_width: bw, min_matches: min, ..NavigatorConfig::default() };
        let r = histogram_vote(&MatchSet::from_displacements(&d), &config, 320);
        prop_assert!(r.support as usize <= d.len());
        if let Some(k) = r.kappa {
            prop_assert!(r.support as usize >= min);
            prop_assert!(((k / bw).round() * bw - k).abs() < 1e-9);
            prop_assert!(k.abs() <= 320.0);
            let in_bin = d.iter().filter(|&&x| (x / bw).round() == (k / bw).round()).count();
            prop_assert_eq!(in_bin as u32, r.support);
        }
    }
}
