//! Stream replay, run statistics and timing against a reference workload.

use std::hint::black_box;
use std::time::Instant;

use crate::filter::{FilterParams, ParamsError, Reason, ScanFilter, Verdict};
use crate::io_log::{RunStats, TimedDecision};
use crate::scan::LaserScan;

/// Passes over all points performed by the reference scan matcher.
pub const MATCHER_PASSES: usize = 100;

/// Runs a [`ScanFilter`] over a stream and records timed decisions.
#[derive(Debug, Clone)]
pub struct Replay {
    filter: ScanFilter,
    decisions: Vec<TimedDecision>,
}

impl Replay {
    pub fn new(params: FilterParams) -> Result<Self, ParamsError> {
        Ok(Self {
            filter: ScanFilter::new(params)?,
            decisions: Vec::new(),
        })
    }

    pub fn push(&mut self, scan: &LaserScan) -> &TimedDecision {
        let start = Instant::now();
        let decision = self.filter.process_scan(scan);
        let filter_time_ns = start.elapsed().as_nanos() as u64;
        self.decisions.push(TimedDecision {
            decision,
            filter_time_ns,
        });
        self.decisions.last().expect("just pushed")
    }

    pub fn decisions(&self) -> &[TimedDecision] {
        &self.decisions
    }

    pub fn into_decisions(self) -> Vec<TimedDecision> {
        self.decisions
    }

    pub fn stats(&self) -> RunStats {
        run_stats(&self.decisions)
    }
}

/// Filter a whole stream in memory.
pub fn replay_all<'a>(
    params: FilterParams,
    scans: impl IntoIterator<Item = &'a LaserScan>,
) -> Result<Vec<TimedDecision>, ParamsError> {
    let mut replay = Replay::new(params)?;
    for scan in scans {
        replay.push(scan);
    }
    Ok(replay.into_decisions())
}

/// Fraction of dropped scans in `[0, 1]`; 0 for an empty run.
pub fn drop_rate(decisions: &[TimedDecision]) -> f64 {
    if decisions.is_empty() {
        return 0.0;
    }
    let dropped = decisions
        .iter()
        .filter(|d| d.decision.verdict == Verdict::Drop)
        .count();
    dropped as f64 / decisions.len() as f64
}

pub fn run_stats(decisions: &[TimedDecision]) -> RunStats {
    let total = decisions.len();
    let dropped = decisions
        .iter()
        .filter(|d| d.decision.verdict == Verdict::Drop)
        .count();
    let corridor_keeps = decisions
        .iter()
        .filter(|d| d.decision.reason == Reason::Corridor)
        .count();
    let mut times: Vec<u64> = decisions.iter().map(|d| d.filter_time_ns).collect();
    times.sort_unstable();
    RunStats {
        total,
        kept: total - dropped,
        dropped,
        drop_pct: 100.0 * drop_rate(decisions),
        p50_filter_time_ns: percentile(&times, 50.0),
        p95_filter_time_ns: percentile(&times, 95.0),
        corridor_keeps,
    }
}

/// Nearest-rank percentile of sorted data; 0 for empty input.
pub fn percentile(sorted: &[u64], p: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

const GRID_SIDE: usize = 256;
const GRID_RESOLUTION: f64 = 0.1;

/// Stand-in for a random-walk scan matcher: every pass projects all points
/// through a perturbed candidate pose and scores them against a grid.
#[derive(Debug, Clone)]
pub struct ReferenceMatcher {
    grid: Vec<f32>,
    passes: usize,
}

impl Default for ReferenceMatcher {
    fn default() -> Self {
        Self::new(MATCHER_PASSES)
    }
}

impl ReferenceMatcher {
    pub fn new(passes: usize) -> Self {
        let grid = (0..GRID_SIDE * GRID_SIDE)
            .map(|i| ((i * 2_654_435_761usize) % 1000) as f32 / 1000.0)
            .collect();
        Self { grid, passes }
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    /// Best score over all candidate poses.
    pub fn match_scan(&self, scan: &LaserScan) -> f64 {
        let points: Vec<(f64, f64)> = scan
            .valid_ranges()
            .map(|(i, r)| {
                let (s, c) = scan.angle(i).sin_cos();
                (r * c, r * s)
            })
            .collect();

        let half = (GRID_SIDE / 2) as f64;
        let mut seed: u64 = 0x2545_F491_4F6C_DD1D;
        let (mut tx, mut ty, mut th) = (0.0f64, 0.0f64, 0.0f64);
        let mut best = f64::MIN;
        for _ in 0..self.passes {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            let jitter = |shift: u32| ((seed >> shift) & 0xFF) as f64 / 255.0 - 0.5;
            tx += 0.02 * jitter(0);
            ty += 0.02 * jitter(8);
            th += 0.01 * jitter(16);
            let (s, c) = th.sin_cos();

            let mut score = 0.0f64;
            for &(px, py) in &points {
                let x = c * px - s * py + tx;
                let y = s * px + c * py + ty;
                let gx = (x / GRID_RESOLUTION + half) as isize;
                let gy = (y / GRID_RESOLUTION + half) as isize;
                if (0..GRID_SIDE as isize).contains(&gx) && (0..GRID_SIDE as isize).contains(&gy) {
                    score += self.grid[gy as usize * GRID_SIDE + gx as usize] as f64;
                }
            }
            best = best.max(score);
        }
        black_box(best)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub scans: usize,
    pub points_per_scan: usize,
    pub stats: RunStats,
    pub p50_matcher_time_ns: u64,
    pub p95_matcher_time_ns: u64,
    /// p50 filter time over p50 reference matcher time.
    pub ratio: f64,
}

/// Time the filter and the reference matcher on every scan of `scans`.
pub fn bench(params: FilterParams, scans: &[LaserScan]) -> Result<BenchReport, ParamsError> {
    let decisions = replay_all(params, scans)?;
    let stats = run_stats(&decisions);

    let matcher = ReferenceMatcher::default();
    let mut matcher_times: Vec<u64> = scans
        .iter()
        .map(|scan| {
            let start = Instant::now();
            black_box(matcher.match_scan(black_box(scan)));
            start.elapsed().as_nanos() as u64
        })
        .collect();
    matcher_times.sort_unstable();
    let p50_matcher_time_ns = percentile(&matcher_times, 50.0);
    let ratio = if p50_matcher_time_ns == 0 {
        0.0
    } else {
        stats.p50_filter_time_ns as f64 / p50_matcher_time_ns as f64
    };
    Ok(BenchReport {
        scans: scans.len(),
        points_per_scan: scans.first().map_or(0, LaserScan::len),
        p50_matcher_time_ns,
        p95_matcher_time_ns: percentile(&matcher_times, 95.0),
        stats,
        ratio,
    })
}
