//! File formats: scan logs, decision tables and run statistics.
//!
//! A scan log holds one JSON object per line:
//!
//! ```text
//! {"t":0.0,"angle_min":-3.14,"angle_increment":0.00628,"range_min":0.05,"range_max":30.0,"ranges":[1.2,null,...]}
//! ```
//!
//! Non-finite ranges are written as `null` and read back as `+inf`. Blank
//! lines are ignored.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::FilterDecision;
use crate::scan::LaserScan;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanRecord {
    t: f64,
    angle_min: f64,
    angle_increment: f64,
    range_min: f64,
    range_max: f64,
    ranges: Vec<Option<f64>>,
}

impl From<&LaserScan> for ScanRecord {
    fn from(scan: &LaserScan) -> Self {
        Self {
            t: scan.timestamp,
            angle_min: scan.angle_min,
            angle_increment: scan.angle_increment,
            range_min: scan.range_min,
            range_max: scan.range_max,
            ranges: scan
                .ranges
                .iter()
                .map(|&r| r.is_finite().then_some(r))
                .collect(),
        }
    }
}

impl ScanRecord {
    fn into_scan(self) -> Result<LaserScan, String> {
        let ranges = self
            .ranges
            .into_iter()
            .map(|r| r.unwrap_or(f64::INFINITY))
            .collect();
        LaserScan::new(
            self.t,
            self.angle_min,
            self.angle_increment,
            self.range_min,
            self.range_max,
            ranges,
        )
        .map_err(|e| e.to_string())
    }
}

/// Streaming reader over a scan log.
pub struct ScanLogReader<R> {
    lines: io::Lines<R>,
    line: usize,
}

impl<R: BufRead> ScanLogReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line: 0,
        }
    }
}

impl<R: BufRead> Iterator for ScanLogReader<R> {
    type Item = Result<LaserScan, LogError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(text) => text,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            let line = self.line;
            let parsed = serde_json::from_str::<ScanRecord>(&text)
                .map_err(|e| e.to_string())
                .and_then(ScanRecord::into_scan)
                .map_err(|message| LogError::Parse { line, message });
            return Some(parsed);
        }
    }
}

pub fn open_scan_log(path: impl AsRef<Path>) -> Result<ScanLogReader<BufReader<File>>, LogError> {
    Ok(ScanLogReader::new(BufReader::new(File::open(path)?)))
}

pub fn read_scan_log(path: impl AsRef<Path>) -> Result<Vec<LaserScan>, LogError> {
    open_scan_log(path)?.collect()
}

pub fn write_scan_record<W: Write>(mut out: W, scan: &LaserScan) -> Result<(), LogError> {
    serde_json::to_writer(&mut out, &ScanRecord::from(scan))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_scans<'a, W: Write>(
    out: W,
    scans: impl IntoIterator<Item = &'a LaserScan>,
) -> Result<(), LogError> {
    let mut out = BufWriter::new(out);
    for scan in scans {
        write_scan_record(&mut out, scan)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_scan_log<'a>(
    path: impl AsRef<Path>,
    scans: impl IntoIterator<Item = &'a LaserScan>,
) -> Result<(), LogError> {
    write_scans(File::create(path)?, scans)
}

/// A decision plus the wall-clock time spent producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedDecision {
    pub decision: FilterDecision,
    pub filter_time_ns: u64,
}

pub const DECISION_HEADER: [&str; 7] = [
    "scan_id",
    "verdict",
    "reason",
    "common_correlation",
    "min_pair_correlation",
    "corridor_score",
    "filter_time_ns",
];

#[derive(Serialize)]
struct DecisionRow<'a> {
    scan_id: u64,
    verdict: &'a str,
    reason: &'a str,
    common_correlation: Option<f64>,
    min_pair_correlation: Option<f64>,
    corridor_score: Option<f64>,
    filter_time_ns: u64,
}

pub fn write_decision_table<'a, W: Write>(
    out: W,
    decisions: impl IntoIterator<Item = &'a TimedDecision>,
) -> Result<(), LogError> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    // Header is written even for an empty run.
    writer.write_record(DECISION_HEADER)?;
    for timed in decisions {
        let d = &timed.decision;
        writer.serialize(DecisionRow {
            scan_id: d.scan_id,
            verdict: d.verdict.as_str(),
            reason: d.reason.as_str(),
            common_correlation: d.common_correlation,
            min_pair_correlation: d.min_pair_correlation(),
            corridor_score: d.corridor_score,
            filter_time_ns: timed.filter_time_ns,
        })?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_decisions<'a>(
    path: impl AsRef<Path>,
    decisions: impl IntoIterator<Item = &'a TimedDecision>,
) -> Result<(), LogError> {
    let file = BufWriter::new(File::create(path)?);
    write_decision_table(file, decisions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub total: usize,
    pub kept: usize,
    pub dropped: usize,
    pub drop_pct: f64,
    pub p50_filter_time_ns: u64,
    pub p95_filter_time_ns: u64,
    pub corridor_keeps: usize,
}

pub fn write_stats(path: impl AsRef<Path>, stats: &RunStats) -> Result<(), LogError> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, stats)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub fn read_stats(path: impl AsRef<Path>) -> Result<RunStats, LogError> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{Reason, Verdict};
    use crate::ops::OpCounts;

    fn scan(t: f64, ranges: Vec<f64>) -> LaserScan {
        LaserScan::new(t, -1.5, 0.01, 0.05, 30.0, ranges).unwrap()
    }

    #[test]
    fn three_scan_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        let scans = vec![
            scan(0.0, vec![1.0, 2.5, 0.1 + 0.2]),
            scan(0.025, vec![f64::INFINITY, 31.0, 1e-3]),
            scan(0.05, vec![3.0, 2.0, 1.0]),
        ];
        write_scan_log(&path, &scans).unwrap();
        assert_eq!(read_scan_log(&path).unwrap(), scans);
    }

    #[test]
    fn nan_reads_back_as_infinity() {
        let mut buf = Vec::new();
        write_scans(&mut buf, [&scan(0.0, vec![f64::NAN, 1.0])]).unwrap();
        assert!(String::from_utf8_lossy(&buf).contains("[null,1.0]"));
        let back: Vec<_> = ScanLogReader::new(&buf[..])
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(back[0].ranges[0], f64::INFINITY);
    }

    #[test]
    fn parse_error_reports_line() {
        let mut buf = Vec::new();
        let s = scan(0.0, vec![1.0, 2.0]);
        write_scans(&mut buf, std::iter::repeat_n(&s, 6)).unwrap();
        buf.extend_from_slice(b"{\"t\": 1.0, \"ranges\": oops}\n");
        let results: Vec<_> = ScanLogReader::new(&buf[..]).collect();
        assert_eq!(results.len(), 7);
        assert!(results[..6].iter().all(Result::is_ok));
        assert!(matches!(results[6], Err(LogError::Parse { line: 7, .. })));
    }

    #[test]
    fn invalid_geometry_is_a_parse_error() {
        let text = r#"{"t":0.0,"angle_min":0.0,"angle_increment":-0.1,"range_min":0.1,"range_max":5.0,"ranges":[1.0]}"#;
        let results: Vec<_> = ScanLogReader::new(text.as_bytes()).collect();
        assert!(matches!(results[0], Err(LogError::Parse { line: 1, .. })));
    }

    #[test]
    fn blank_lines_skipped() {
        let mut buf = b"\n".to_vec();
        write_scans(&mut buf, [&scan(0.0, vec![1.0])]).unwrap();
        buf.extend_from_slice(b"\n\n");
        let results: Vec<_> = ScanLogReader::new(&buf[..]).collect();
        assert_eq!(results.len(), 1);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            read_scan_log("/nonexistent/x.jsonl"),
            Err(LogError::Io(_))
        ));
    }

    #[test]
    fn decision_table_layout() {
        let decisions = vec![
            TimedDecision {
                decision: FilterDecision {
                    scan_id: 0,
                    verdict: Verdict::Keep,
                    reason: Reason::WindowWarmup,
                    pair_correlations: vec![],
                    common_correlation: None,
                    corridor_score: Some(0.125),
                    error: None,
                    ops: OpCounts::default(),
                },
                filter_time_ns: 1200,
            },
            TimedDecision {
                decision: FilterDecision {
                    scan_id: 1,
                    verdict: Verdict::Drop,
                    reason: Reason::Redundant,
                    pair_correlations: vec![0.99, 0.995],
                    common_correlation: Some(0.98505),
                    corridor_score: None,
                    error: None,
                    ops: OpCounts::default(),
                },
                filter_time_ns: 800,
            },
        ];
        let mut buf = Vec::new();
        write_decision_table(&mut buf, &decisions).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "scan_id,verdict,reason,common_correlation,min_pair_correlation,corridor_score,filter_time_ns\n\
             0,KEEP,WINDOW_WARMUP,,,0.125,1200\n\
             1,DROP,REDUNDANT,0.98505,0.99,,800\n"
        );
    }

    #[test]
    fn stats_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.json");
        let stats = RunStats {
            total: 10,
            kept: 4,
            dropped: 6,
            drop_pct: 60.0,
            p50_filter_time_ns: 1000,
            p95_filter_time_ns: 2000,
            corridor_keeps: 1,
        };
        write_stats(&path, &stats).unwrap();
        assert_eq!(read_stats(&path).unwrap(), stats);
    }
}
