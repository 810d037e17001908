//! Laser scan model and validation of raw range data.

use std::f64::consts::TAU;

use thiserror::Error;

/// Slack allowed when checking the field of view against a full turn.
const FOV_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("scan has no ranges")]
    EmptyScan,
    #[error("bad scan geometry: {0}")]
    BadGeometry(String),
}

/// One lidar sweep: ranges at uniformly incremented bearings.
///
/// Entries outside `[range_min, range_max]` or non-finite are kept in the
/// payload and treated as invalid by every consumer.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserScan {
    /// Capture time in seconds.
    pub timestamp: f64,
    pub angle_min: f64,
    pub angle_increment: f64,
    pub range_min: f64,
    pub range_max: f64,
    pub ranges: Vec<f64>,
}

impl LaserScan {
    pub fn new(
        timestamp: f64,
        angle_min: f64,
        angle_increment: f64,
        range_min: f64,
        range_max: f64,
        ranges: Vec<f64>,
    ) -> Result<Self, ScanError> {
        let scan = Self {
            timestamp,
            angle_min,
            angle_increment,
            range_min,
            range_max,
            ranges,
        };
        scan.check_geometry()?;
        Ok(scan)
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    /// `(len - 1) * angle_increment`.
    pub fn field_of_view(&self) -> f64 {
        self.ranges.len().saturating_sub(1) as f64 * self.angle_increment
    }

    /// Bearing of beam `index` relative to the sensor frame.
    pub fn angle(&self, index: usize) -> f64 {
        self.angle_min + index as f64 * self.angle_increment
    }

    #[inline]
    pub fn is_valid_range(&self, r: f64) -> bool {
        r.is_finite() && r >= self.range_min && r <= self.range_max
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.ranges
            .get(index)
            .is_some_and(|&r| self.is_valid_range(r))
    }

    /// Iterator over `(index, range)` for valid beams only.
    pub fn valid_ranges(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.ranges
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, r)| self.is_valid_range(r))
    }

    fn check_geometry(&self) -> Result<(), ScanError> {
        if self.ranges.is_empty() {
            return Err(ScanError::EmptyScan);
        }
        if !(self.angle_increment.is_finite() && self.angle_increment > 0.0) {
            return Err(ScanError::BadGeometry(format!(
                "angle_increment must be positive, got {}",
                self.angle_increment
            )));
        }
        if !self.angle_min.is_finite() {
            return Err(ScanError::BadGeometry("angle_min is not finite".into()));
        }
        if self.range_min.is_nan() || self.range_max.is_nan() || self.range_min >= self.range_max {
            return Err(ScanError::BadGeometry(format!(
                "range_min ({}) must be below range_max ({})",
                self.range_min, self.range_max
            )));
        }
        let fov = self.field_of_view();
        if fov > TAU + FOV_SLACK {
            return Err(ScanError::BadGeometry(format!(
                "field of view {fov} exceeds a full turn"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub valid_count: usize,
    pub invalid_indices: Vec<usize>,
}

/// Count valid beams and list the invalid ones.
pub fn validate_scan(scan: &LaserScan) -> Result<ValidationReport, ScanError> {
    scan.check_geometry()?;
    let mut invalid_indices = Vec::new();
    for (i, &r) in scan.ranges.iter().enumerate() {
        if !scan.is_valid_range(r) {
            invalid_indices.push(i);
        }
    }
    Ok(ValidationReport {
        valid_count: scan.ranges.len() - invalid_indices.len(),
        invalid_indices,
    })
}
