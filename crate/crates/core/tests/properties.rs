use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scanfilter_core::replay::{drop_rate, replay_all};
use scanfilter_core::synth::{self, OfficeLayout, Pose, Scene, SensorModel, Trajectory};
use scanfilter_core::*;

fn corridor_world() -> synth::World {
    synth::make_scene(
        &Scene::Corridor {
            length: 10.0,
            half_width: 1.5,
            speed_cm: 10.0,
        },
        0,
    )
    .unwrap()
    .0
}

#[test]
fn stationary_then_moving() {
    let layout = OfficeLayout::default();
    let world = synth::office_world(&layout, 0).unwrap();
    let mut traj = Trajectory::stationary(Pose::new(-3.5, 0.0, 0.0), 100);
    let mut moving = Trajectory::straight(traj.last().unwrap(), 0.10, 101);
    moving.poses.remove(0);
    traj.extend(moving);
    let scans = synth::render(&world, &traj, &SensorModel::default(), 0.025);

    let decisions = replay_all(FilterParams::default(), &scans).unwrap();
    let still = drop_rate(&decisions[..100]);
    let fast = drop_rate(&decisions[100..]);
    assert!(still >= 0.9, "stationary drop rate {still}");
    assert!(fast <= 0.1, "moving drop rate {fast}");
}

fn untimed(decisions: Vec<io_log::TimedDecision>) -> Vec<FilterDecision> {
    decisions.into_iter().map(|d| d.decision).collect()
}

#[test]
fn replay_is_deterministic() {
    let (world, traj) = synth::make_scene(
        &Scene::OfficeLoop {
            speed_cm: 20.0,
            layout: OfficeLayout::default(),
        },
        5,
    )
    .unwrap();
    let scans = synth::render(
        &world,
        &traj,
        &SensorModel {
            seed: 5,
            ..SensorModel::default()
        },
        0.025,
    );
    for params in [
        FilterParams::default(),
        FilterParams::fast_robot(),
        FilterParams::slow_robot(),
    ] {
        let a = untimed(replay_all(params, &scans).unwrap());
        let b = untimed(replay_all(params, &scans).unwrap());
        assert_eq!(a, b);
    }
}

#[test]
fn decision_invariants_hold_on_office_loop() {
    let (world, traj) = synth::make_scene(
        &Scene::OfficeLoop {
            speed_cm: 4.0,
            layout: OfficeLayout::default(),
        },
        1,
    )
    .unwrap();
    let scans = synth::render(&world, &traj, &SensorModel::default(), 0.025);
    for params in [FilterParams::fast_robot(), FilterParams::slow_robot()] {
        let k = params.window_size;
        let decisions = untimed(replay_all(params, &scans).unwrap());
        assert_eq!(decisions.len(), scans.len());
        assert!(decisions[..k].iter().all(FilterDecision::is_keep));
        for (i, d) in decisions.iter().enumerate() {
            assert_eq!(d.scan_id, i as u64);
            if d.verdict == Verdict::Drop {
                assert_eq!(d.reason, Reason::Redundant);
                assert_eq!(d.pair_correlations.len(), k);
            }
        }
    }
}

#[test]
fn unprocessable_scans_are_kept() {
    let good = synth::raycast(
        &corridor_world(),
        &Pose::new(1.0, 0.0, 0.0),
        &SensorModel::default(),
    );
    let mut blind = good.clone();
    blind.ranges.iter_mut().for_each(|r| *r = f64::NAN);
    let mut empty = good.clone();
    empty.ranges.clear();

    let mut filter = ScanFilter::new(FilterParams {
        window_size: 1,
        p_common: 0.9,
        ..FilterParams::default()
    })
    .unwrap();
    for bad in [&blind, &empty] {
        filter.process_scan(&good);
        let d = filter.process_scan(bad);
        assert!(d.is_keep());
        assert_eq!(d.reason, Reason::DegenerateHistogram);
        assert!(d.error.is_some());
    }
    // Bad scans never enter the window.
    assert_eq!(filter.window().scan_ids(), vec![2]);
}

fn rotated_score(heading: f64, sensor: &SensorModel) -> CorridorReport {
    let scan = synth::raycast(&corridor_world(), &Pose::new(2.0, 0.2, heading), sensor);
    corridor_score(&scan, &CorridorConfig::default()).unwrap()
}

#[test]
fn perpendicular_rotation_flips_sign() {
    for sensor in [SensorModel::noiseless(), SensorModel::default()] {
        let base = rotated_score(0.0, &sensor);
        let quarter = rotated_score(FRAC_PI_2, &sensor);
        let half = rotated_score(PI, &sensor);
        assert!(base.is_corridor);
        assert!(base.score * quarter.score < 0.0, "{base:?} {quarter:?}");
        assert!((base.abs_score - quarter.abs_score).abs() < 0.05);
        // A full-circle sensor sees the same corridor after a half turn.
        assert!((base.score - half.score).abs() < 0.05);
    }
}

#[test]
fn bounded_noise_rarely_changes_corridor_flag() {
    let world = corridor_world();
    let config = CorridorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut changed = 0;
    for _ in 0..1000 {
        let pose = Pose::new(
            rng.random_range(0.0..10.0),
            rng.random_range(-0.5..0.5),
            0.0,
        );
        let clean = synth::raycast(&world, &pose, &SensorModel::noiseless());
        let mut noisy = clean.clone();
        let delta = config.range_error_delta;
        for r in noisy.ranges.iter_mut().filter(|r| **r <= clean.range_max) {
            *r += rng.random_range(-delta..=delta);
        }
        let before = corridor_score(&clean, &config).unwrap().is_corridor;
        let after = corridor_score(&noisy, &config).unwrap().is_corridor;
        changed += usize::from(before != after);
    }
    assert!(changed < 50, "{changed} of 1000 flags changed");
}

#[test]
fn corridor_veto_only_adds_keeps() {
    let (world, traj) = synth::make_scene(
        &Scene::OfficeLoop {
            speed_cm: 2.2,
            layout: OfficeLayout::default(),
        },
        0,
    )
    .unwrap();
    let scans = synth::render(&world, &traj, &SensorModel::default(), 0.025);
    let scans = &scans[..1200];
    let on = untimed(replay_all(FilterParams::fast_robot(), scans).unwrap());
    let off = untimed(
        replay_all(
            FilterParams {
                corridor_enabled: false,
                ..FilterParams::fast_robot()
            },
            scans,
        )
        .unwrap(),
    );
    let kept = |d: &[FilterDecision]| d.iter().filter(|d| d.is_keep()).count();
    assert!(kept(&on) > kept(&off));
    for d in on.iter().filter(|d| d.reason == Reason::Corridor) {
        assert!(d.corridor_score.unwrap().abs() >= 0.5);
    }
}

#[test]
fn room_ranges_match_rectangle() {
    let (world, traj) = synth::make_scene(
        &Scene::Room {
            width: 6.0,
            height: 4.0,
            speed_cm: 0.0,
            count: 1,
        },
        0,
    )
    .unwrap();
    let scan = synth::raycast(&world, &traj.poses[0], &SensorModel::noiseless());
    for (i, r) in scan.valid_ranges() {
        let a = scan.angle(i);
        let (s, c) = a.sin_cos();
        let tx = if c.abs() > 1e-12 {
            3.0 / c.abs()
        } else {
            f64::INFINITY
        };
        let ty = if s.abs() > 1e-12 {
            2.0 / s.abs()
        } else {
            f64::INFINITY
        };
        assert!(
            (r - tx.min(ty)).abs() < 1e-9,
            "beam {i}: {r} vs {}",
            tx.min(ty)
        );
    }
}
