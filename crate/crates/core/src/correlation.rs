//! Correlation coefficients over paired samples.
//!
//! [`pearson`] is the production kernel: one pass, five running sums.
//! [`spearman`] and [`kendall`] are slower rank-based references used to
//! compare against it.

use std::cmp::Ordering;

use thiserror::Error;

use crate::ops::OpCounts;

/// Population variance below which a vector is treated as constant.
pub const VARIANCE_EPSILON: f64 = 1e-12;

/// Arithmetic operations in one iteration of the Pearson accumulation loop:
/// two shifts, five additions and three multiplications.
pub const PEARSON_OPS_PER_ELEMENT: u64 = 10;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum CorrelationError {
    #[error("sample lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observations, got {0}")]
    TooShort(usize),
    #[error("variance {0:e} is below the zero-variance guard")]
    ZeroVariance(f64),
}

/// Two equally long observation vectors.
#[derive(Debug, Clone, Copy)]
pub struct CorrelationSample<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
}

impl<'a> CorrelationSample<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64]) -> Result<Self, CorrelationError> {
        if x.len() != y.len() {
            return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
        }
        if x.len() < 2 {
            return Err(CorrelationError::TooShort(x.len()));
        }
        Ok(Self { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    pearson_counted(x, y, &mut OpCounts::default())
}

/// Pearson coefficient in the one-pass sum form
/// `(n Sxy - Sx Sy) / sqrt((n Sxx - Sx^2)(n Syy - Sy^2))`.
///
/// Observations are shifted by their first element before accumulation; the
/// coefficient is shift invariant and the shift removes the cancellation the
/// raw sums suffer on tightly clustered data.
pub fn pearson_counted(
    x: &[f64],
    y: &[f64],
    counts: &mut OpCounts,
) -> Result<f64, CorrelationError> {
    let sample = CorrelationSample::new(x, y)?;
    let n = sample.len() as f64;
    let (x0, y0) = (x[0], y[0]);

    let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - x0;
        let dy = yi - y0;
        sx += dx;
        sy += dy;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    counts.correlation_ops += PEARSON_OPS_PER_ELEMENT * sample.len() as u64;

    let var_x = n * sxx - sx * sx;
    let var_y = n * syy - sy * sy;
    let nn = n * n;
    // Population variance is (n Sxx - Sx^2) / n^2.
    if var_x / nn < VARIANCE_EPSILON {
        return Err(CorrelationError::ZeroVariance(var_x / nn));
    }
    if var_y / nn < VARIANCE_EPSILON {
        return Err(CorrelationError::ZeroVariance(var_y / nn));
    }
    let r = (n * sxy - sx * sy) / (var_x * var_y).sqrt();
    Ok(r.clamp(-1.0, 1.0))
}

/// Fractional ranks starting at 1; tied values share the mean of their ranks.
pub fn fractional_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));

    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1 ..= end.
        let shared = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = shared;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation: Pearson over fractional ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    CorrelationSample::new(x, y)?;
    pearson(&fractional_ranks(x), &fractional_ranks(y))
}

/// Kendall tau-a by direct enumeration of all pairs.
///
/// Pairs tied in either coordinate count as neither concordant nor
/// discordant; the denominator is always `n (n - 1) / 2`.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64, CorrelationError> {
    let sample = CorrelationSample::new(x, y)?;
    let n = sample.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if (dx > 0.0 && dy > 0.0) || (dx < 0.0 && dy < 0.0) {
                concordant += 1;
            } else if (dx > 0.0 && dy < 0.0) || (dx < 0.0 && dy > 0.0) {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((concordant - discordant) as f64 / pairs)
}
