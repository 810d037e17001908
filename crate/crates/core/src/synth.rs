//! Deterministic 2D worlds, trajectories and a lidar raycaster.
//!
//! Worlds are sets of wall segments. Scans are produced by intersecting each
//! beam with every segment; beams that hit nothing within `range_max` report
//! `range_max + 1`, which validation flags as invalid.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::scan::LaserScan;

/// Noise samples beyond this many standard deviations are redrawn.
pub const NOISE_TRUNCATION_SIGMAS: f64 = 4.0;

/// Scan period of the reference 40 Hz sensor, seconds.
pub const DEFAULT_QUANTUM: f64 = 0.025;

/// In-place rotation rate used at trajectory corners, radians per quantum.
pub const DEFAULT_TURN_RATE: f64 = 0.05;

/// Half-length of the walls of the open-ended corridor scene.
const OPEN_CORRIDOR_EXTENT: f64 = 1000.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("bad scene parameters: {0}")]
    BadParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: [f64; 2],
    pub b: [f64; 2],
}

impl Segment {
    pub fn new(a: [f64; 2], b: [f64; 2]) -> Self {
        Self { a, b }
    }

    /// Distance along the ray `origin + t * dir` to this segment, if hit.
    fn ray_hit(&self, origin: [f64; 2], dir: [f64; 2]) -> Option<f64> {
        let e = [self.b[0] - self.a[0], self.b[1] - self.a[1]];
        let denom = dir[0] * e[1] - dir[1] * e[0];
        if denom.abs() < 1e-15 {
            return None;
        }
        let w = [self.a[0] - origin[0], self.a[1] - origin[1]];
        let t = (w[0] * e[1] - w[1] * e[0]) / denom;
        let s = (w[0] * dir[1] - w[1] * dir[0]) / denom;
        (t > 0.0 && (0.0..=1.0).contains(&s)).then_some(t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub name: String,
    pub segments: Vec<Segment>,
}

impl World {
    pub fn new(name: impl Into<String>, segments: Vec<Segment>) -> Result<Self, SynthError> {
        if segments.is_empty() {
            return Err(SynthError::BadParams("world has no segments".into()));
        }
        let finite = segments
            .iter()
            .all(|s| s.a.iter().chain(&s.b).all(|v| v.is_finite()));
        if !finite {
            return Err(SynthError::BadParams(
                "non-finite segment coordinates".into(),
            ));
        }
        Ok(Self {
            name: name.into(),
            segments,
        })
    }

    /// Axis-aligned rectangle centered at `center`.
    pub fn rectangle(width: f64, height: f64, center: [f64; 2]) -> Result<Self, SynthError> {
        positive("width", width)?;
        positive("height", height)?;
        Self::new(
            format!("room-{width}x{height}"),
            box_segments(center, width, height),
        )
    }

    /// Regular polygon approximating a circle of `radius` around the origin.
    pub fn circle(radius: f64, sides: usize) -> Result<Self, SynthError> {
        positive("radius", radius)?;
        if sides < 3 {
            return Err(SynthError::BadParams(
                "circle needs at least 3 sides".into(),
            ));
        }
        Self::new(
            format!("circle-{radius}"),
            polygon_segments([0.0, 0.0], radius, sides),
        )
    }

    /// Two parallel walls at `y = +-half_width` spanning `x_from..x_to`.
    pub fn corridor(half_width: f64, x_from: f64, x_to: f64) -> Result<Self, SynthError> {
        positive("half_width", half_width)?;
        if x_to.is_nan() || x_from.is_nan() || x_to <= x_from {
            return Err(SynthError::BadParams(
                "corridor must have positive length".into(),
            ));
        }
        Self::new(
            format!("corridor-{}", 2.0 * half_width),
            vec![
                Segment::new([x_from, -half_width], [x_to, -half_width]),
                Segment::new([x_from, half_width], [x_to, half_width]),
            ],
        )
    }

    /// Nearest hit along a ray, if any.
    pub fn cast(&self, origin: [f64; 2], direction: f64) -> Option<f64> {
        let dir = [direction.cos(), direction.sin()];
        self.segments
            .iter()
            .filter_map(|s| s.ray_hit(origin, dir))
            .min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }
}

/// Poses sampled once per quantum.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose>) -> Result<Self, SynthError> {
        if poses.is_empty() {
            return Err(SynthError::BadParams("trajectory is empty".into()));
        }
        if poses
            .iter()
            .any(|p| !(p.x.is_finite() && p.y.is_finite() && p.heading.is_finite()))
        {
            return Err(SynthError::BadParams("non-finite pose".into()));
        }
        Ok(Self { poses })
    }

    pub fn stationary(pose: Pose, count: usize) -> Self {
        Self {
            poses: vec![pose; count],
        }
    }

    /// `count` poses from `start` along its heading, `step` meters apart.
    pub fn straight(start: Pose, step: f64, count: usize) -> Self {
        let (s, c) = start.heading.sin_cos();
        let poses = (0..count)
            .map(|i| {
                let d = i as f64 * step;
                Pose::new(start.x + d * c, start.y + d * s, start.heading)
            })
            .collect();
        Self { poses }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn last(&self) -> Option<Pose> {
        self.poses.last().copied()
    }

    pub fn extend(&mut self, other: Trajectory) {
        self.poses.extend(other.poses);
    }

    /// Drive from the last pose to `target` in steps of `step` meters,
    /// keeping the current heading. The target itself is appended last.
    pub fn drive_to(&mut self, target: [f64; 2], step: f64) {
        let from = self.last().expect("drive_to on an empty trajectory");
        let (dx, dy) = (target[0] - from.x, target[1] - from.y);
        let dist = dx.hypot(dy);
        let steps = (dist / step).floor() as usize;
        for i in 1..=steps {
            let f = i as f64 * step / dist;
            self.poses
                .push(Pose::new(from.x + f * dx, from.y + f * dy, from.heading));
        }
        if steps as f64 * step < dist {
            self.poses
                .push(Pose::new(target[0], target[1], from.heading));
        }
    }

    /// Rotate in place from the last heading to `heading`, `rate` radians per pose.
    pub fn turn_to(&mut self, heading: f64, rate: f64) {
        let from = self.last().expect("turn_to on an empty trajectory");
        let delta = heading - from.heading;
        let steps = (delta.abs() / rate).ceil() as usize;
        for i in 1..=steps {
            let h = from.heading + delta * i as f64 / steps as f64;
            self.poses.push(Pose::new(from.x, from.y, h));
        }
    }

    /// Mean distance between consecutive poses, centimeters.
    pub fn average_speed_cm(&self) -> f64 {
        if self.poses.len() < 2 {
            return 0.0;
        }
        let total: f64 = self
            .poses
            .windows(2)
            .map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y))
            .sum();
        100.0 * total / (self.poses.len() - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    /// Angular span from first to last beam, radians.
    pub fov: f64,
    pub beams: usize,
    pub range_min: f64,
    pub range_max: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SensorModel {
    /// 1000 beams over a full turn, 30 m, 1 cm noise.
    fn default() -> Self {
        let beams = 1000;
        Self {
            fov: TAU * (beams - 1) as f64 / beams as f64,
            beams,
            range_min: 0.05,
            range_max: 30.0,
            noise_sigma: 0.01,
            seed: 0,
        }
    }
}

impl SensorModel {
    pub fn noiseless() -> Self {
        Self {
            noise_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.beams < 2 {
            return Err(SynthError::BadParams(
                "sensor needs at least 2 beams".into(),
            ));
        }
        if !(self.fov > 0.0 && self.fov <= TAU) {
            return Err(SynthError::BadParams(format!(
                "fov {} out of (0, 2pi]",
                self.fov
            )));
        }
        if self.noise_sigma.is_nan() || self.noise_sigma < 0.0 {
            return Err(SynthError::BadParams("noise_sigma must be >= 0".into()));
        }
        if !(self.range_min >= 0.0 && self.range_min < self.range_max) {
            return Err(SynthError::BadParams("range bounds out of order".into()));
        }
        Ok(())
    }

    pub fn angle_increment(&self) -> f64 {
        self.fov / (self.beams - 1) as f64
    }

    pub fn angle_min(&self) -> f64 {
        -self.fov / 2.0
    }

    fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// One scan from `pose`. Beam `i` points at `heading + angle_min + i * inc`.
pub fn raycast(world: &World, pose: &Pose, sensor: &SensorModel) -> LaserScan {
    let inc = sensor.angle_increment();
    let angle_min = sensor.angle_min();
    let mut rng = ChaCha8Rng::seed_from_u64(sensor.seed);
    let ranges = (0..sensor.beams)
        .map(|i| {
            let bearing = pose.heading + angle_min + i as f64 * inc;
            match world.cast([pose.x, pose.y], bearing) {
                Some(d) if d <= sensor.range_max => {
                    (d + truncated_noise(&mut rng, sensor.noise_sigma)).max(0.0)
                }
                _ => sensor.range_max + 1.0,
            }
        })
        .collect();
    LaserScan {
        timestamp: 0.0,
        angle_min,
        angle_increment: inc,
        range_min: sensor.range_min,
        range_max: sensor.range_max,
        ranges,
    }
}

fn truncated_noise(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    loop {
        let z: f64 = StandardNormal.sample(rng);
        if z.abs() <= NOISE_TRUNCATION_SIGMAS {
            return z * sigma;
        }
    }
}

/// Per-scan noise seed derived from the stream seed.
pub fn scan_seed(seed: u64, index: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raycast every pose; scan `i` is stamped `i * quantum`.
pub fn render(
    world: &World,
    trajectory: &Trajectory,
    sensor: &SensorModel,
    quantum: f64,
) -> Vec<LaserScan> {
    trajectory
        .poses
        .iter()
        .enumerate()
        .map(|(i, pose)| {
            let mut scan = raycast(world, pose, &sensor.with_seed(scan_seed(sensor.seed, i)));
            scan.timestamp = i as f64 * quantum;
            scan
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfficeLayout {
    /// Side of each square room, meters.
    pub room_size: f64,
    pub corridor_length: f64,
    pub corridor_half_width: f64,
    /// Box and pillar obstacles per room.
    pub clutter_per_room: usize,
}

impl Default for OfficeLayout {
    fn default() -> Self {
        Self {
            room_size: 10.0,
            corridor_length: 8.0,
            corridor_half_width: 1.0,
            clutter_per_room: 6,
        }
    }
}

impl OfficeLayout {
    fn validate(&self) -> Result<(), SynthError> {
        positive("room_size", self.room_size)?;
        positive("corridor_length", self.corridor_length)?;
        positive("corridor_half_width", self.corridor_half_width)?;
        if 2.0 * self.corridor_half_width >= self.room_size {
            return Err(SynthError::BadParams(
                "corridor wider than the rooms".into(),
            ));
        }
        Ok(())
    }

    /// Distance between neighbouring room centers.
    pub fn pitch(&self) -> f64 {
        self.room_size + self.corridor_length
    }

    /// Room centers in loop order.
    pub fn room_centers(&self) -> [[f64; 2]; 4] {
        let d = self.pitch();
        [[0.0, 0.0], [d, 0.0], [d, d], [0.0, d]]
    }

    /// True when `(x, y)` lies inside one of the connecting corridors.
    pub fn in_corridor(&self, x: f64, y: f64) -> bool {
        let d = self.pitch();
        let half_room = self.room_size / 2.0;
        let hw = self.corridor_half_width;
        let along = |v: f64| v > half_room && v < d - half_room;
        (along(x) && (y.abs() < hw || (y - d).abs() < hw))
            || (along(y) && (x.abs() < hw || (x - d).abs() < hw))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scene {
    /// Open-ended straight corridor; robot on the centerline heading along it.
    Corridor {
        length: f64,
        half_width: f64,
        speed_cm: f64,
    },
    /// Empty rectangular room; robot starts at the center and drives along +x.
    Room {
        width: f64,
        height: f64,
        speed_cm: f64,
        count: usize,
    },
    /// Four cluttered rooms joined by corridors, driven once around.
    OfficeLoop { speed_cm: f64, layout: OfficeLayout },
    /// `count` identical poses in the first office room.
    Stationary { count: usize },
}

impl Scene {
    pub fn kind(&self) -> &'static str {
        match self {
            Scene::Corridor { .. } => "corridor",
            Scene::Room { .. } => "room",
            Scene::OfficeLoop { .. } => "office-loop",
            Scene::Stationary { .. } => "stationary",
        }
    }
}

/// Build the world and trajectory for `scene`. Deterministic in `seed`.
pub fn make_scene(scene: &Scene, seed: u64) -> Result<(World, Trajectory), SynthError> {
    match *scene {
        Scene::Corridor {
            length,
            half_width,
            speed_cm,
        } => {
            positive("length", length)?;
            positive("half_width", half_width)?;
            positive("speed_cm", speed_cm)?;
            let world = World::corridor(
                half_width,
                -OPEN_CORRIDOR_EXTENT,
                length + OPEN_CORRIDOR_EXTENT,
            )?;
            let step = speed_cm / 100.0;
            let count = (length / step + 1e-9).floor() as usize + 1;
            let traj = Trajectory::straight(Pose::new(0.0, 0.0, 0.0), step, count);
            Ok((world, traj))
        }
        Scene::Room {
            width,
            height,
            speed_cm,
            count,
        } => {
            let world = World::rectangle(width, height, [0.0, 0.0])?;
            if speed_cm.is_nan() || speed_cm < 0.0 || count == 0 {
                return Err(SynthError::BadParams(
                    "room needs speed >= 0 and count > 0".into(),
                ));
            }
            let travel = speed_cm / 100.0 * (count - 1) as f64;
            if travel > width / 2.0 - 0.3 {
                return Err(SynthError::BadParams(format!(
                    "robot would travel {travel} m, room half-width is {}",
                    width / 2.0
                )));
            }
            let traj = Trajectory::straight(Pose::new(0.0, 0.0, 0.0), speed_cm / 100.0, count);
            Ok((world, traj))
        }
        Scene::OfficeLoop { speed_cm, layout } => {
            positive("speed_cm", speed_cm)?;
            let world = office_world(&layout, seed)?;
            Ok((world, office_loop_trajectory(&layout, speed_cm / 100.0)))
        }
        Scene::Stationary { count } => {
            if count == 0 {
                return Err(SynthError::BadParams("count must be positive".into()));
            }
            let world = office_world(&OfficeLayout::default(), seed)?;
            Ok((
                world,
                Trajectory::stationary(Pose::new(0.0, 0.0, 0.0), count),
            ))
        }
    }
}

/// Rooms at the corners of a square, each with doors toward its two
/// neighbours, plus clutter placed clear of the driving lanes.
pub fn office_world(layout: &OfficeLayout, seed: u64) -> Result<World, SynthError> {
    layout.validate()?;
    let half = layout.room_size / 2.0;
    let hw = layout.corridor_half_width;
    let d = layout.pitch();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments = Vec::new();

    // Door sides per room: east, north, west, south flags.
    let doors = [
        [true, true, false, false],
        [false, true, true, false],
        [false, false, true, true],
        [true, false, false, true],
    ];
    for (center, sides) in layout.room_centers().iter().zip(doors) {
        let [cx, cy] = *center;
        let walls = [
            ([cx + half, cy - half], [cx + half, cy + half]),
            ([cx - half, cy + half], [cx + half, cy + half]),
            ([cx - half, cy - half], [cx - half, cy + half]),
            ([cx - half, cy - half], [cx + half, cy - half]),
        ];
        for ((a, b), door) in walls.into_iter().zip(sides) {
            if door {
                segments.extend(wall_with_gap(a, b, hw));
            } else {
                segments.push(Segment::new(a, b));
            }
        }
        add_clutter(
            &mut segments,
            &mut rng,
            *center,
            half,
            hw,
            layout.clutter_per_room,
        );
    }

    // Corridor walls between door openings.
    let (lo, hi) = (half, d - half);
    for (c, horizontal) in [(0.0, true), (d, false), (d, true), (0.0, false)] {
        for side in [-hw, hw] {
            let seg = if horizontal {
                Segment::new([lo, c + side], [hi, c + side])
            } else {
                Segment::new([c + side, lo], [c + side, hi])
            };
            segments.push(seg);
        }
    }
    World::new("office-loop", segments)
}

/// Drive room to room counter-clockwise, turning in place at each center.
pub fn office_loop_trajectory(layout: &OfficeLayout, step: f64) -> Trajectory {
    let centers = layout.room_centers();
    let mut traj = Trajectory::stationary(Pose::new(0.0, 0.0, 0.0), 1);
    for leg in 1..=4 {
        traj.drive_to(centers[leg % 4], step);
        traj.turn_to(leg as f64 * FRAC_PI_2, DEFAULT_TURN_RATE);
    }
    traj
}

fn add_clutter(
    segments: &mut Vec<Segment>,
    rng: &mut ChaCha8Rng,
    center: [f64; 2],
    half: f64,
    lane: f64,
    count: usize,
) {
    let margin = 0.4;
    let mut placed = 0;
    let mut attempts = 0;
    while placed < count && attempts < 1000 {
        attempts += 1;
        let size = rng.random_range(0.3..1.2);
        let r = size / 2.0;
        let x = rng.random_range(-half + margin + r..half - margin - r);
        let y = rng.random_range(-half + margin + r..half - margin - r);
        // Keep the cross-shaped driving lanes through the center clear.
        let clear = lane + 0.6 + r;
        if x.abs() < clear || y.abs() < clear {
            continue;
        }
        let c = [center[0] + x, center[1] + y];
        if placed % 2 == 0 {
            segments.extend(box_segments(c, size, size * rng.random_range(0.5..1.5)));
        } else {
            segments.extend(polygon_segments(c, r, 8));
        }
        placed += 1;
    }
}

fn wall_with_gap(a: [f64; 2], b: [f64; 2], half_gap: f64) -> [Segment; 2] {
    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    let u = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
    [
        Segment::new(a, [mid[0] - u[0] * half_gap, mid[1] - u[1] * half_gap]),
        Segment::new([mid[0] + u[0] * half_gap, mid[1] + u[1] * half_gap], b),
    ]
}

fn box_segments(center: [f64; 2], width: f64, height: f64) -> Vec<Segment> {
    let (hx, hy) = (width / 2.0, height / 2.0);
    let [cx, cy] = center;
    let c = [
        [cx - hx, cy - hy],
        [cx + hx, cy - hy],
        [cx + hx, cy + hy],
        [cx - hx, cy + hy],
    ];
    (0..4).map(|i| Segment::new(c[i], c[(i + 1) % 4])).collect()
}

fn polygon_segments(center: [f64; 2], radius: f64, sides: usize) -> Vec<Segment> {
    let vertex = |i: usize| {
        let a = TAU * i as f64 / sides as f64;
        [center[0] + radius * a.cos(), center[1] + radius * a.sin()]
    };
    (0..sides)
        .map(|i| Segment::new(vertex(i), vertex(i + 1)))
        .collect()
}

fn positive(name: &str, value: f64) -> Result<(), SynthError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(SynthError::BadParams(format!(
            "{name} must be positive, got {value}"
        )))
    }
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}
