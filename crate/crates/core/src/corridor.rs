//! Featureless-corridor detection from range monotonicity.
//!
//! Along a straight wall the range changes monotonically with bearing, and
//! the direction of change flips at each perpendicular. With the field of
//! view split into four index quarters, a robot aligned with a corridor sees
//! the same signed trend in every quarter once quarters 2 and 4 are negated.
//! The score is the mean of those signed comparisons.
//!
//! Each point is compared with a point far enough away that the expected
//! range change on a flat wall exceeds twice the sensor error `delta`:
//! `cos(alpha) = r / (r + 2 delta)`.

use thiserror::Error;

use crate::ops::OpCounts;
use crate::scan::LaserScan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorridorError {
    #[error("invalid corridor config: {0}")]
    BadConfig(String),
    #[error("only {pairs} range pairs comparable, need at least {min_pairs}")]
    TooFewPoints { pairs: usize, min_pairs: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorridorConfig {
    /// Per-beam range error bound, meters.
    pub range_error_delta: f64,
    pub score_threshold: f64,
    pub min_pairs: usize,
}

impl Default for CorridorConfig {
    fn default() -> Self {
        Self {
            range_error_delta: 0.03,
            score_threshold: 0.5,
            min_pairs: 20,
        }
    }
}

impl CorridorConfig {
    pub fn validate(&self) -> Result<(), CorridorError> {
        if !(self.range_error_delta.is_finite() && self.range_error_delta > 0.0) {
            return Err(CorridorError::BadConfig(format!(
                "range_error_delta must be positive, got {}",
                self.range_error_delta
            )));
        }
        if !(self.score_threshold > 0.0 && self.score_threshold <= 1.0) {
            return Err(CorridorError::BadConfig(format!(
                "score_threshold must be in (0, 1], got {}",
                self.score_threshold
            )));
        }
        if self.min_pairs == 0 {
            return Err(CorridorError::BadConfig(
                "min_pairs must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorridorReport {
    pub score: f64,
    pub abs_score: f64,
    pub pairs_compared: usize,
    pub is_corridor: bool,
}

/// Minimal angle between two beams on a wall at distance `range` such that
/// their range difference reaches `2 * delta`.
pub fn min_separation_angle(range: f64, delta: f64) -> f64 {
    (range / (range + 2.0 * delta)).acos()
}

/// Index offset to the comparison point for a beam measuring `range`.
///
/// Always at least 1; non-increasing in `range`.
pub fn next_point_stride(range: f64, angle_increment: f64, delta: f64) -> usize {
    debug_assert!(range > 0.0 && angle_increment > 0.0 && delta > 0.0);
    let steps = (min_separation_angle(range, delta) / angle_increment).ceil();
    if steps.is_finite() && steps > 1.0 {
        steps as usize
    } else {
        1
    }
}

/// Quarter (0..4) holding beam `index` of an `n`-beam scan.
#[inline]
pub fn quarter_of(index: usize, n: usize) -> usize {
    index * 4 / n
}

pub fn corridor_score(
    scan: &LaserScan,
    config: &CorridorConfig,
) -> Result<CorridorReport, CorridorError> {
    corridor_score_counted(scan, config, &mut OpCounts::default())
}

/// [`corridor_score`] recording one point touch per beam visited.
pub fn corridor_score_counted(
    scan: &LaserScan,
    config: &CorridorConfig,
    counts: &mut OpCounts,
) -> Result<CorridorReport, CorridorError> {
    config.validate()?;
    let n = scan.len();
    let mut sum = 0i64;
    let mut pairs = 0usize;

    for (i, &r) in scan.ranges.iter().enumerate() {
        counts.point_touches += 1;
        if !scan.is_valid_range(r) || r <= 0.0 {
            continue;
        }
        let j = i + next_point_stride(r, scan.angle_increment, config.range_error_delta);
        if j >= n {
            continue;
        }
        let quarter = quarter_of(i, n);
        if quarter_of(j, n) != quarter {
            continue;
        }
        let r_next = scan.ranges[j];
        if !scan.is_valid_range(r_next) {
            continue;
        }
        let sign = match r.partial_cmp(&r_next) {
            Some(std::cmp::Ordering::Greater) => 1,
            Some(std::cmp::Ordering::Less) => -1,
            _ => 0,
        };
        sum += if quarter.is_multiple_of(2) {
            sign
        } else {
            -sign
        };
        pairs += 1;
    }

    if pairs < config.min_pairs {
        return Err(CorridorError::TooFewPoints {
            pairs,
            min_pairs: config.min_pairs,
        });
    }
    let score = sum as f64 / pairs as f64;
    let abs_score = score.abs();
    Ok(CorridorReport {
        score,
        abs_score,
        pairs_compared: pairs,
        is_corridor: abs_score >= config.score_threshold,
    })
}
