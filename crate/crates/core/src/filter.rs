//! Sliding-window redundancy filter.
//!
//! Each incoming scan is reduced to a histogram and correlated against the
//! histograms of the last `k` scans. A scan that correlates strongly with
//! every window entry, and whose correlation product clears the common
//! threshold, carries no new information and is dropped. Corridor scans are
//! always kept. Anything the filter cannot evaluate is kept as well.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::correlation::pearson_counted;
use crate::corridor::{corridor_score_counted, CorridorConfig, CorridorError};
use crate::histogram::{build_histogram_counted, Histogram, HistogramConfig, HistogramMode};
use crate::ops::OpCounts;
use crate::scan::{validate_scan, LaserScan};

/// Upper bound for the window size.
pub const MAX_WINDOW_SIZE: usize = 30;

/// Numerator of the empirical window-size law `k = 27 / v^2`, with `v` in
/// centimeters per quantum.
pub const WINDOW_SPEED_CONSTANT: f64 = 27.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("window size must be in 1..={MAX_WINDOW_SIZE}, got {0}")]
    WindowSize(usize),
    #[error("{name} must be in (0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("p_common ({p_common}) must not exceed p_pair ({p_pair})")]
    CommonAbovePair { p_common: f64, p_pair: f64 },
    #[error("average speed must be positive, got {0}")]
    Speed(f64),
    #[error("quantum must be positive, got {0}")]
    Quantum(f64),
    #[error(transparent)]
    Histogram(#[from] crate::histogram::HistogramError),
    #[error(transparent)]
    Corridor(#[from] CorridorError),
}

/// Which scans enter the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowPolicy {
    /// Every received scan, kept or dropped.
    #[default]
    AllRecent,
    /// Only scans that were forwarded.
    KeptOnly,
}

impl fmt::Display for WindowPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowPolicy::AllRecent => "all-recent",
            WindowPolicy::KeptOnly => "kept-only",
        })
    }
}

impl FromStr for WindowPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "all-recent" => Ok(WindowPolicy::AllRecent),
            "kept-only" => Ok(WindowPolicy::KeptOnly),
            _ => Err(format!(
                "unknown window policy `{s}` (expected all-recent or kept-only)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub window_size: usize,
    /// Minimum correlation against each window entry.
    pub p_pair: f64,
    /// Minimum product of all window correlations.
    pub p_common: f64,
    pub histogram: HistogramConfig,
    pub corridor: CorridorConfig,
    pub corridor_enabled: bool,
    pub window_policy: WindowPolicy,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            window_size: 5,
            p_pair: 0.98,
            p_common: 0.9,
            histogram: HistogramConfig::default(),
            corridor: CorridorConfig::default(),
            corridor_enabled: true,
            window_policy: WindowPolicy::AllRecent,
        }
    }
}

impl FilterParams {
    /// Robot covering about 2.2 cm per scan: k = 5, 30 columns.
    pub fn fast_robot() -> Self {
        Self {
            window_size: 5,
            p_pair: 0.96,
            p_common: 0.8,
            histogram: HistogramConfig {
                mode: HistogramMode::AngleAvg,
                columns: 30,
            },
            ..Self::default()
        }
    }

    /// Robot covering about 1.7 cm per scan: k = 9, 15 columns.
    pub fn slow_robot() -> Self {
        Self {
            window_size: 9,
            p_pair: 0.99,
            p_common: 0.9,
            histogram: HistogramConfig {
                mode: HistogramMode::AngleAvg,
                columns: 15,
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if !(1..=MAX_WINDOW_SIZE).contains(&self.window_size) {
            return Err(ParamsError::WindowSize(self.window_size));
        }
        for (name, value) in [("p_pair", self.p_pair), ("p_common", self.p_common)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(ParamsError::Probability { name, value });
            }
        }
        if self.p_common > self.p_pair {
            return Err(ParamsError::CommonAbovePair {
                p_common: self.p_common,
                p_pair: self.p_pair,
            });
        }
        self.histogram.validate()?;
        self.corridor.validate()?;
        Ok(())
    }
}

/// Robot motion between consecutive captures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedProfile {
    /// Centimeters travelled per quantum.
    pub avg_speed: f64,
    /// Seconds between captures.
    pub quantum: f64,
}

impl SpeedProfile {
    pub fn new(avg_speed: f64, quantum: f64) -> Result<Self, ParamsError> {
        if !(avg_speed.is_finite() && avg_speed > 0.0) {
            return Err(ParamsError::Speed(avg_speed));
        }
        if !(quantum.is_finite() && quantum > 0.0) {
            return Err(ParamsError::Quantum(quantum));
        }
        Ok(Self { avg_speed, quantum })
    }

    /// Build from a speed in meters per second.
    pub fn from_meters_per_second(speed: f64, quantum: f64) -> Result<Self, ParamsError> {
        Self::new(speed * quantum * 100.0, quantum)
    }
}

/// `floor(27 / v^2)` clamped to `1..=30`.
pub fn derive_window_size(profile: &SpeedProfile) -> usize {
    let raw = (WINDOW_SPEED_CONSTANT / (profile.avg_speed * profile.avg_speed)).floor();
    if raw.is_nan() {
        return 1;
    }
    raw.clamp(1.0, MAX_WINDOW_SIZE as f64) as usize
}

/// Product threshold for a window of identical pair thresholds.
pub fn derive_common_threshold(p_pair: f64, window_size: usize) -> f64 {
    p_pair.powi(window_size as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Keep,
    Drop,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Keep => "KEEP",
            Verdict::Drop => "DROP",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    WindowWarmup,
    Corridor,
    LowPairCorrelation,
    LowCommonCorrelation,
    /// Histogram or correlation could not be evaluated; the scan fails open.
    DegenerateHistogram,
    Redundant,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::WindowWarmup => "WINDOW_WARMUP",
            Reason::Corridor => "CORRIDOR",
            Reason::LowPairCorrelation => "LOW_PAIR_CORRELATION",
            Reason::LowCommonCorrelation => "LOW_COMMON_CORRELATION",
            Reason::DegenerateHistogram => "DEGENERATE_HISTOGRAM",
            Reason::Redundant => "REDUNDANT",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterDecision {
    /// Position of the scan in the stream, from 0.
    pub scan_id: u64,
    pub verdict: Verdict,
    pub reason: Reason,
    /// Correlation against each window entry, oldest first. Empty when the
    /// window comparison did not run.
    pub pair_correlations: Vec<f64>,
    /// Product of `pair_correlations`, when all of them were computed.
    pub common_correlation: Option<f64>,
    /// Signed corridor score, when the detector ran and succeeded.
    pub corridor_score: Option<f64>,
    /// Why the scan could not be evaluated, for fail-open keeps.
    pub error: Option<String>,
    pub ops: OpCounts,
}

impl FilterDecision {
    pub fn is_keep(&self) -> bool {
        self.verdict == Verdict::Keep
    }

    pub fn min_pair_correlation(&self) -> Option<f64> {
        self.pair_correlations.iter().copied().reduce(f64::min)
    }
}

/// Bounded FIFO of recent histograms.
#[derive(Debug, Clone)]
pub struct ScanWindow {
    capacity: usize,
    entries: VecDeque<(Histogram, u64)>,
}

impl ScanWindow {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Push `histogram`, evicting the oldest entry when full.
    pub fn push(&mut self, histogram: Histogram, scan_id: u64) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((histogram, scan_id));
    }

    /// Entries, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &(Histogram, u64)> {
        self.entries.iter()
    }

    pub fn scan_ids(&self) -> Vec<u64> {
        self.entries.iter().map(|(_, id)| *id).collect()
    }
}

/// Stateful filter for one scan stream.
#[derive(Debug, Clone)]
pub struct ScanFilter {
    params: FilterParams,
    window: ScanWindow,
    next_id: u64,
}

impl ScanFilter {
    pub fn new(params: FilterParams) -> Result<Self, ParamsError> {
        params.validate()?;
        Ok(Self {
            window: ScanWindow::new(params.window_size),
            params,
            next_id: 0,
        })
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn window(&self) -> &ScanWindow {
        &self.window
    }

    /// Decide whether `scan` is forwarded. Exactly one decision per call.
    pub fn process_scan(&mut self, scan: &LaserScan) -> FilterDecision {
        let scan_id = self.next_id;
        self.next_id += 1;
        let mut ops = OpCounts::default();

        let mut decision = FilterDecision {
            scan_id,
            verdict: Verdict::Keep,
            reason: Reason::DegenerateHistogram,
            pair_correlations: Vec::new(),
            common_correlation: None,
            corridor_score: None,
            error: None,
            ops,
        };

        if let Err(e) = validate_scan(scan) {
            decision.error = Some(e.to_string());
            return decision;
        }
        let histogram = match build_histogram_counted(scan, &self.params.histogram, &mut ops) {
            Ok(h) => h,
            Err(e) => {
                decision.error = Some(e.to_string());
                decision.ops = ops;
                return decision;
            }
        };

        let (verdict, reason) = self.evaluate(scan, &histogram, &mut decision, &mut ops);
        decision.verdict = verdict;
        decision.reason = reason;
        decision.ops = ops;

        if verdict == Verdict::Keep || self.params.window_policy == WindowPolicy::AllRecent {
            self.window.push(histogram, scan_id);
        }
        decision
    }

    fn evaluate(
        &self,
        scan: &LaserScan,
        histogram: &Histogram,
        decision: &mut FilterDecision,
        ops: &mut OpCounts,
    ) -> (Verdict, Reason) {
        if self.params.corridor_enabled {
            match corridor_score_counted(scan, &self.params.corridor, ops) {
                Ok(report) => {
                    decision.corridor_score = Some(report.score);
                    if report.is_corridor {
                        return (Verdict::Keep, Reason::Corridor);
                    }
                }
                Err(e) => {
                    decision.error = Some(e.to_string());
                    return (Verdict::Keep, Reason::DegenerateHistogram);
                }
            }
        }

        if !self.window.is_full() {
            return (Verdict::Keep, Reason::WindowWarmup);
        }

        let mut correlations = Vec::with_capacity(self.window.len());
        for (entry, _) in self.window.iter() {
            match pearson_counted(&histogram.values, &entry.values, ops) {
                Ok(r) => correlations.push(r),
                Err(e) => {
                    decision.error = Some(e.to_string());
                    decision.pair_correlations = correlations;
                    return (Verdict::Keep, Reason::DegenerateHistogram);
                }
            }
        }
        let product: f64 = correlations.iter().product();
        let low_pair = correlations.iter().any(|&r| r < self.params.p_pair);
        decision.pair_correlations = correlations;
        decision.common_correlation = Some(product);

        if low_pair {
            (Verdict::Keep, Reason::LowPairCorrelation)
        } else if product < self.params.p_common {
            (Verdict::Keep, Reason::LowCommonCorrelation)
        } else {
            (Verdict::Drop, Reason::Redundant)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured_scan(t: f64, wobble: f64) -> LaserScan {
        let ranges = (0..360)
            .map(|i| {
                let a = (i as f64).to_radians();
                3.0 + (3.0 * a).sin() + 0.5 * (7.0 * a + wobble).cos()
            })
            .collect();
        LaserScan {
            timestamp: t,
            angle_min: 0.0,
            angle_increment: 1f64.to_radians(),
            range_min: 0.05,
            range_max: 30.0,
            ranges,
        }
    }

    fn no_corridor(params: FilterParams) -> FilterParams {
        FilterParams {
            corridor_enabled: false,
            ..params
        }
    }

    #[test]
    fn window_size_operating_points() {
        let fast = SpeedProfile::new(2.2, 0.025).unwrap();
        assert_eq!(derive_window_size(&fast), 5);
        let slow = SpeedProfile::new(1.7, 0.025).unwrap();
        assert_eq!(derive_window_size(&slow), 9);
        let crawl = SpeedProfile::new(0.5, 0.025).unwrap();
        assert_eq!(derive_window_size(&crawl), 30);
        let sprint = SpeedProfile::new(6.0, 0.025).unwrap();
        assert_eq!(derive_window_size(&sprint), 1);
    }

    #[test]
    fn speed_from_meters_per_second() {
        // 0.88 m/s at 40 Hz is 2.2 cm per quantum.
        let p = SpeedProfile::from_meters_per_second(0.88, 0.025).unwrap();
        assert!((p.avg_speed - 2.2).abs() < 1e-12);
        assert!(SpeedProfile::new(0.0, 0.025).is_err());
        assert!(SpeedProfile::new(1.0, 0.0).is_err());
    }

    #[test]
    fn common_threshold() {
        assert!((derive_common_threshold(0.98, 5) - 0.904).abs() < 1e-3);
        assert_eq!(derive_common_threshold(0.77, 1), 0.77);
        assert!((derive_common_threshold(0.99, 9) - 0.9135).abs() < 5e-4);
    }

    #[test]
    fn params_validation() {
        assert!(FilterParams::default().validate().is_ok());
        assert!(FilterParams::fast_robot().validate().is_ok());
        assert!(FilterParams::slow_robot().validate().is_ok());
        let bad = [
            FilterParams {
                window_size: 0,
                ..Default::default()
            },
            FilterParams {
                window_size: 31,
                ..Default::default()
            },
            FilterParams {
                p_pair: 0.0,
                ..Default::default()
            },
            FilterParams {
                p_pair: 1.2,
                p_common: 0.5,
                ..Default::default()
            },
            FilterParams {
                p_pair: 0.9,
                p_common: 0.95,
                ..Default::default()
            },
        ];
        for params in bad {
            assert!(ScanFilter::new(params).is_err(), "{params:?}");
        }
    }

    #[test]
    fn identical_scans_dropped_after_warmup() {
        let params = no_corridor(FilterParams::default());
        let mut filter = ScanFilter::new(params).unwrap();
        let scan = textured_scan(0.0, 0.0);
        for i in 0..params.window_size {
            let d = filter.process_scan(&scan);
            assert_eq!(
                (d.verdict, d.reason),
                (Verdict::Keep, Reason::WindowWarmup),
                "scan {i}"
            );
        }
        let d = filter.process_scan(&scan);
        assert_eq!(d.verdict, Verdict::Drop);
        assert_eq!(d.reason, Reason::Redundant);
        assert_eq!(d.pair_correlations, vec![1.0; params.window_size]);
        assert_eq!(d.common_correlation, Some(1.0));
        assert_eq!(filter.window().len(), params.window_size);
    }

    #[test]
    fn low_pair_correlation_keeps() {
        let params = no_corridor(FilterParams::default());
        let mut filter = ScanFilter::new(params).unwrap();
        for _ in 0..params.window_size {
            filter.process_scan(&textured_scan(0.0, 0.0));
        }
        let d = filter.process_scan(&textured_scan(0.0, 2.0));
        assert_eq!(d.verdict, Verdict::Keep);
        assert_eq!(d.reason, Reason::LowPairCorrelation);
        assert!(d.min_pair_correlation().unwrap() < params.p_pair);
    }

    #[test]
    fn product_rule_applies_separately() {
        // A single pair above p_pair but a product below p_common.
        let params = FilterParams {
            window_size: 3,
            p_pair: 0.9,
            p_common: 0.9,
            corridor_enabled: false,
            ..Default::default()
        };
        let mut filter = ScanFilter::new(params).unwrap();
        for _ in 0..3 {
            filter.process_scan(&textured_scan(0.0, 0.0));
        }
        let d = filter.process_scan(&textured_scan(0.0, 0.8));
        let r = d.pair_correlations[0];
        assert!(r >= 0.9 && r.powi(3) < 0.9, "r = {r}");
        assert_eq!(d.reason, Reason::LowCommonCorrelation);
        assert_eq!(d.verdict, Verdict::Keep);
    }

    #[test]
    fn corridor_veto_beats_correlation() {
        // Ranges trending in the corridor pattern: every quarter agrees.
        let n = 400;
        let ranges: Vec<f64> = (0..n)
            .map(|i| {
                let t = (i % 100) as f64;
                if (i / 100) % 2 == 0 {
                    10.0 - 0.05 * t
                } else {
                    5.0 + 0.05 * t
                }
            })
            .collect();
        let scan = LaserScan {
            timestamp: 0.0,
            angle_min: -std::f64::consts::PI,
            angle_increment: std::f64::consts::TAU / n as f64,
            range_min: 0.05,
            range_max: 30.0,
            ranges,
        };
        let mut filter = ScanFilter::new(FilterParams::default()).unwrap();
        for _ in 0..20 {
            let d = filter.process_scan(&scan);
            assert_eq!(d.reason, Reason::Corridor);
            assert_eq!(d.corridor_score, Some(1.0));
        }
        let mut blind = ScanFilter::new(no_corridor(FilterParams::default())).unwrap();
        let last = (0..20).map(|_| blind.process_scan(&scan)).last().unwrap();
        assert_eq!(last.verdict, Verdict::Drop);
    }

    #[test]
    fn degenerate_histograms_fail_open() {
        let params = no_corridor(FilterParams::default());
        let mut filter = ScanFilter::new(params).unwrap();
        let flat = LaserScan {
            ranges: vec![2.0; 360],
            ..textured_scan(0.0, 0.0)
        };
        let decisions: Vec<_> = (0..10).map(|_| filter.process_scan(&flat)).collect();
        assert!(decisions.iter().all(FilterDecision::is_keep));
        assert_eq!(decisions[9].reason, Reason::DegenerateHistogram);
        assert!(decisions[9].error.as_deref().unwrap().contains("variance"));
    }

    #[test]
    fn unprocessable_scans_fail_open() {
        let mut filter = ScanFilter::new(FilterParams::default()).unwrap();
        let sparse = LaserScan {
            ranges: vec![f64::INFINITY; 360],
            ..textured_scan(0.0, 0.0)
        };
        let d = filter.process_scan(&sparse);
        assert_eq!(
            (d.verdict, d.reason),
            (Verdict::Keep, Reason::DegenerateHistogram)
        );
        assert!(d.error.is_some());
        assert!(filter.window().is_empty());

        let broken = LaserScan {
            angle_increment: -1.0,
            ..textured_scan(0.0, 0.0)
        };
        let d = filter.process_scan(&broken);
        assert_eq!(d.verdict, Verdict::Keep);
        assert_eq!(d.scan_id, 1);
    }

    #[test]
    fn kept_only_window_policy() {
        let params = FilterParams {
            window_policy: WindowPolicy::KeptOnly,
            ..no_corridor(FilterParams::default())
        };
        let mut filter = ScanFilter::new(params).unwrap();
        let scan = textured_scan(0.0, 0.0);
        for _ in 0..12 {
            filter.process_scan(&scan);
        }
        assert_eq!(filter.window().scan_ids(), vec![0, 1, 2, 3, 4]);

        let mut all = ScanFilter::new(no_corridor(FilterParams::default())).unwrap();
        for _ in 0..12 {
            all.process_scan(&scan);
        }
        assert_eq!(all.window().scan_ids(), vec![7, 8, 9, 10, 11]);
    }

    #[test]
    fn window_fifo() {
        let h = Histogram {
            values: vec![1.0, 2.0],
            config: HistogramConfig::default(),
            source_points: 2,
        };
        let mut w = ScanWindow::new(3);
        for id in 0..5 {
            w.push(h.clone(), id);
            assert!(w.len() <= 3);
        }
        assert!(w.is_full());
        assert_eq!(w.scan_ids(), vec![2, 3, 4]);
    }

    #[test]
    fn policy_parsing() {
        assert_eq!(
            "kept-only".parse::<WindowPolicy>().unwrap(),
            WindowPolicy::KeptOnly
        );
        assert_eq!(
            "ALL_RECENT".parse::<WindowPolicy>().unwrap(),
            WindowPolicy::AllRecent
        );
        assert!("x".parse::<WindowPolicy>().is_err());
    }
}
