//! Correlation filter for redundant 2D laser scans.
//!
//! Scans are summarized by histograms, compared against a sliding window of
//! recent scans with the Pearson coefficient, and dropped when they add no
//! new information. A corridor detector protects scans of featureless
//! corridors, where correlation alone would discard useful data.
//!
//! ```
//! use scanfilter_core::{FilterParams, ScanFilter, synth};
//!
//! let (world, trajectory) = synth::make_scene(&synth::Scene::Stationary { count: 20 }, 0).unwrap();
//! let scans = synth::render(&world, &trajectory, &synth::SensorModel::default(), 0.025);
//! let mut filter = ScanFilter::new(FilterParams::default()).unwrap();
//! let kept = scans.iter().filter(|s| filter.process_scan(s).is_keep()).count();
//! assert!(kept < scans.len());
//! ```

pub mod correlation;
pub mod corridor;
pub mod filter;
pub mod histogram;
pub mod io_log;
pub mod ops;
pub mod replay;
pub mod scan;
pub mod synth;

pub use correlation::{kendall, pearson, spearman, CorrelationError};
pub use corridor::{
    corridor_score, next_point_stride, CorridorConfig, CorridorError, CorridorReport,
};
pub use filter::{
    derive_common_threshold, derive_window_size, FilterDecision, FilterParams, ParamsError, Reason,
    ScanFilter, ScanWindow, SpeedProfile, Verdict, WindowPolicy,
};
pub use histogram::{build_histogram, Histogram, HistogramConfig, HistogramError, HistogramMode};
pub use io_log::{LogError, RunStats, TimedDecision};
pub use ops::OpCounts;
pub use scan::{validate_scan, LaserScan, ScanError, ValidationReport};
