//! Shared fixtures for the criterion benches.

use scanfilter_core::synth::{self, OfficeLayout, Scene, SensorModel};
use scanfilter_core::LaserScan;

/// The first `count` scans of an office loop at 2.2 cm per quantum,
/// 1000 beams each.
pub fn office_scans(count: usize) -> Vec<LaserScan> {
    let scene = Scene::OfficeLoop {
        speed_cm: 2.2,
        layout: OfficeLayout::default(),
    };
    let (world, mut trajectory) = synth::make_scene(&scene, 0).expect("default scene is valid");
    trajectory.poses.truncate(count);
    synth::render(
        &world,
        &trajectory,
        &SensorModel::default(),
        synth::DEFAULT_QUANTUM,
    )
}
