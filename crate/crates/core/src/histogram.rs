//! Reduction of a scan to a fixed number of histogram columns.
//!
//! Range modes partition `[min_valid, max_valid]` of the scan into equal-width
//! intervals; angle modes split the beam index space into contiguous blocks
//! whose sizes differ by at most one. Every mode reads each beam exactly once.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::ops::OpCounts;
use crate::scan::LaserScan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistogramError {
    #[error("histogram needs at least 2 columns, got {0}")]
    TooFewColumns(usize),
    #[error("scan has {valid} valid points, histogram needs at least {columns}")]
    TooFewPoints { valid: usize, columns: usize },
    #[error("all valid ranges equal {0}; range partition is undefined")]
    DegenerateRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum HistogramMode {
    /// Number of points per range interval.
    RangeCount,
    /// Mean range per range interval.
    RangeAvg,
    /// Mean range per angular block.
    #[default]
    AngleAvg,
    /// Population variance of ranges per angular block.
    AngleDisp,
}

impl HistogramMode {
    pub const ALL: [HistogramMode; 4] = [
        HistogramMode::RangeCount,
        HistogramMode::RangeAvg,
        HistogramMode::AngleAvg,
        HistogramMode::AngleDisp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            HistogramMode::RangeCount => "range-count",
            HistogramMode::RangeAvg => "range-avg",
            HistogramMode::AngleAvg => "angle-avg",
            HistogramMode::AngleDisp => "angle-disp",
        }
    }

    fn is_range_mode(self) -> bool {
        matches!(self, HistogramMode::RangeCount | HistogramMode::RangeAvg)
    }
}

impl fmt::Display for HistogramMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HistogramMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.to_ascii_lowercase().replace('_', "-");
        HistogramMode::ALL
            .into_iter()
            .find(|m| m.as_str() == norm)
            .ok_or_else(|| {
                format!("unknown histogram mode `{s}` (expected range-count, range-avg, angle-avg or angle-disp)")
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HistogramConfig {
    pub mode: HistogramMode,
    pub columns: usize,
}

impl HistogramConfig {
    pub fn new(mode: HistogramMode, columns: usize) -> Result<Self, HistogramError> {
        let config = Self { mode, columns };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), HistogramError> {
        if self.columns < 2 {
            return Err(HistogramError::TooFewColumns(self.columns));
        }
        Ok(())
    }
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            mode: HistogramMode::AngleAvg,
            columns: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub values: Vec<f64>,
    pub config: HistogramConfig,
    /// Valid points that contributed to the columns.
    pub source_points: usize,
}

impl Histogram {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Half-open index range `[start, end)` of angular block `block`.
///
/// Blocks are `floor(b * n / m)` aligned, so sizes differ by at most one.
pub fn angle_block_bounds(n: usize, columns: usize, block: usize) -> (usize, usize) {
    (block * n / columns, (block + 1) * n / columns)
}

pub fn build_histogram(
    scan: &LaserScan,
    config: &HistogramConfig,
) -> Result<Histogram, HistogramError> {
    build_histogram_counted(scan, config, &mut OpCounts::default())
}

/// [`build_histogram`] that also records one point touch per beam read.
pub fn build_histogram_counted(
    scan: &LaserScan,
    config: &HistogramConfig,
    counts: &mut OpCounts,
) -> Result<Histogram, HistogramError> {
    config.validate()?;
    if config.mode.is_range_mode() {
        range_histogram(scan, config, counts)
    } else {
        angle_histogram(scan, config, counts)
    }
}

fn range_histogram(
    scan: &LaserScan,
    config: &HistogramConfig,
    counts: &mut OpCounts,
) -> Result<Histogram, HistogramError> {
    let m = config.columns;

    // The partition depends on the scan extremes, so the single read of the
    // scan buffers valid ranges and binning runs over that buffer.
    let mut valid = Vec::with_capacity(scan.len());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &r in &scan.ranges {
        counts.point_touches += 1;
        if scan.is_valid_range(r) {
            valid.push(r);
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    if valid.len() < m {
        return Err(HistogramError::TooFewPoints {
            valid: valid.len(),
            columns: m,
        });
    }
    if hi == lo {
        return Err(HistogramError::DegenerateRange(lo));
    }

    let width = (hi - lo) / m as f64;
    let mut sums = vec![0.0; m];
    let mut hits = vec![0usize; m];
    for &r in &valid {
        // Top interval is closed so the maximum lands in the last column.
        let bin = (((r - lo) / width) as usize).min(m - 1);
        sums[bin] += r;
        hits[bin] += 1;
    }

    let values = match config.mode {
        HistogramMode::RangeCount => hits.iter().map(|&c| c as f64).collect(),
        _ => sums
            .iter()
            .zip(&hits)
            .map(|(&s, &c)| {
                if c == 0 {
                    0.0
                } else {
                    (s / c as f64).clamp(lo, hi)
                }
            })
            .collect(),
    };
    Ok(Histogram {
        values,
        config: *config,
        source_points: valid.len(),
    })
}

fn angle_histogram(
    scan: &LaserScan,
    config: &HistogramConfig,
    counts: &mut OpCounts,
) -> Result<Histogram, HistogramError> {
    let m = config.columns;
    let n = scan.len();
    let dispersion = config.mode == HistogramMode::AngleDisp;

    let mut values = Vec::with_capacity(m);
    let mut total_valid = 0usize;
    for block in 0..m {
        let (start, end) = angle_block_bounds(n, m, block);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut hits = 0usize;
        for &r in &scan.ranges[start..end] {
            counts.point_touches += 1;
            if scan.is_valid_range(r) {
                sum += r;
                if dispersion {
                    sum_sq += r * r;
                }
                hits += 1;
            }
        }
        total_valid += hits;
        let value = if hits == 0 {
            0.0
        } else {
            let mean = sum / hits as f64;
            if dispersion {
                (sum_sq / hits as f64 - mean * mean).max(0.0)
            } else {
                mean
            }
        };
        values.push(value);
    }

    if total_valid < m {
        return Err(HistogramError::TooFewPoints {
            valid: total_valid,
            columns: m,
        });
    }
    Ok(Histogram {
        values,
        config: *config,
        source_points: total_valid,
    })
}
