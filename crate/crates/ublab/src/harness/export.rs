//! CSV and chart output for finished runs.
//!
//! Floats are written with Rust's shortest-round-trip formatting, so a
//! rerun of the same seed produces byte-identical files and a parsed trace
//! reproduces the in-memory series exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::controller::ControllerKind;
use crate::harness::metrics::{self, MetricsReport};
use crate::harness::svg;
use crate::units::SimTime;
use crate::{Error, Result};

pub const CWND_TRACE_HEADER: &str =
    "time_us,flow_id,controller,cwnd_segments,ssthresh_segments,bwe_bps,diff_segments,action";
pub const SUMMARY_HEADER: &str =
    "scenario,controller,seed,goodput_bps,efficiency_mbits_total,stability_index,drops,retransmits,consumed_bits";
pub const MOBILITY_HEADER: &str = "time_us,node_id,x_m,y_m";

/// One summary line: the measured flow of one (scenario, controller, seed).
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub controller: ControllerKind,
    pub seed: u64,
    pub goodput_bps: f64,
    pub efficiency_mbits_total: f64,
    pub stability_index: f64,
    pub drops: u64,
    pub retransmits: u64,
    pub consumed_bits: u64,
}

/// Reduce a report to its summary line (flow 0 is the measured flow).
pub fn summary_row(report: &MetricsReport, band: f64) -> Result<SummaryRow> {
    let stats = &report.flows[0].stats;
    Ok(SummaryRow {
        scenario: report.scenario.clone(),
        controller: report.flows[0].controller,
        seed: report.seed,
        goodput_bps: metrics::goodput(report, 0, SimTime::ZERO, report.duration)?.as_bps(),
        efficiency_mbits_total: metrics::efficiency_total(report, 0),
        stability_index: metrics::stability_index(
            &report.flows[0].samples,
            SimTime::ZERO,
            report.duration,
            band,
        )?,
        drops: stats.data_drops + stats.ack_drops,
        retransmits: stats.retransmits,
        consumed_bits: metrics::bandwidth_consumed(report, 0),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn render_cwnd_trace(report: &MetricsReport) -> String {
    let mut out = String::from(CWND_TRACE_HEADER);
    out.push('\n');
    for (f, flow) in report.flows.iter().enumerate() {
        for s in &flow.samples {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                s.at.as_micros(),
                f,
                flow.controller.name(),
                s.cwnd.get(),
                s.ssthresh.get(),
                s.bwe.as_bps(),
                s.diff,
                s.action.name()
            )
            .expect("string writes cannot fail");
        }
    }
    out
}

fn render_mobility(report: &MetricsReport) -> String {
    let mut out = String::from(MOBILITY_HEADER);
    out.push('\n');
    for &(at, node, x, y) in &report.mobility {
        writeln!(out, "{},{},{},{}", at.as_micros(), node, x, y)
            .expect("string writes cannot fail");
    }
    out
}

/// Write one run's artifacts into `dir`: the trace and mobility CSVs plus
/// one self-contained SVG per time series.
pub fn write_run_dir(dir: &Path, report: &MetricsReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("cwnd_trace.csv"), &render_cwnd_trace(report))?;
    write_file(&dir.join("mobility.csv"), &render_mobility(report))?;

    let label = |f: usize| format!("flow {f} ({})", report.flows[f].controller.name());
    let cwnd_series: Vec<(String, Vec<(f64, f64)>)> = report
        .flows
        .iter()
        .enumerate()
        .map(|(f, flow)| {
            let pts = flow
                .samples
                .iter()
                .map(|s| (s.at.as_secs_f64(), s.cwnd.get() as f64))
                .collect();
            (label(f), pts)
        })
        .collect();
    write_file(
        &dir.join("cwnd.svg"),
        &svg::polyline_chart("congestion window", "time (s)", "cwnd (segments)", &cwnd_series),
    )?;

    let bwe_series: Vec<(String, Vec<(f64, f64)>)> = report
        .flows
        .iter()
        .enumerate()
        .map(|(f, flow)| {
            let pts = flow
                .samples
                .iter()
                .map(|s| (s.at.as_secs_f64(), s.bwe.as_bps()))
                .collect();
            (label(f), pts)
        })
        .collect();
    write_file(
        &dir.join("bwe.svg"),
        &svg::polyline_chart("bandwidth estimate", "time (s)", "bwe (bits/s)", &bwe_series),
    )?;

    let acked_series: Vec<(String, Vec<(f64, f64)>)> = report
        .flows
        .iter()
        .enumerate()
        .map(|(f, flow)| {
            let mut pts = vec![(0.0, 0.0)];
            pts.extend(flow.acked_log.iter().map(|&(at, acked)| {
                (at.as_secs_f64(), acked as f64 * report.payload_bits as f64 / 1e6)
            }));
            (label(f), pts)
        })
        .collect();
    write_file(
        &dir.join("acked.svg"),
        &svg::polyline_chart("acknowledged data", "time (s)", "acked (Mbit)", &acked_series),
    )?;
    Ok(())
}

/// Write the aggregate summary; one row per grid cell, input order.
pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.scenario,
            r.controller.name(),
            r.seed,
            r.goodput_bps,
            r.efficiency_mbits_total,
            r.stability_index,
            r.drops,
            r.retransmits,
            r.consumed_bits
        )
        .expect("string writes cannot fail");
    }
    write_file(path, &out)
}

/// One parsed `cwnd_trace.csv` row.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub time_us: u64,
    pub flow_id: usize,
    pub controller: String,
    pub cwnd_segments: u32,
    pub ssthresh_segments: u32,
    pub bwe_bps: f64,
    pub diff_segments: f64,
    pub action: String,
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| {
        Error::Config(format!("{}: line {line}: bad {field} value '{raw}'", path.display()))
    })
}

/// Parse an exported trace back; used to prove the CSV round-trips.
pub fn read_cwnd_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CWND_TRACE_HEADER => {}
        other => {
            return Err(Error::Config(format!(
                "{}: expected trace header, found {:?}",
                path.display(),
                other.map(|(_, l)| l)
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(Error::Config(format!(
                "{}: line {n}: expected 8 columns, found {}",
                path.display(),
                cols.len()
            )));
        }
        rows.push(TraceRow {
            time_us: parse_field(path, n, "time_us", cols[0])?,
            flow_id: parse_field(path, n, "flow_id", cols[1])?,
            controller: cols[2].to_string(),
            cwnd_segments: parse_field(path, n, "cwnd_segments", cols[3])?,
            ssthresh_segments: parse_field(path, n, "ssthresh_segments", cols[4])?,
            bwe_bps: parse_field(path, n, "bwe_bps", cols[5])?,
            diff_segments: parse_field(path, n, "diff_segments", cols[6])?,
            action: cols[7].to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::ControllerKind;
    use crate::harness::scenario::{run_cell, Cell, ScenarioKind};

    fn small_report() -> MetricsReport {
        let mut cfg = ScenarioKind::Cwnd.preset();
        cfg.duration_s = 10.0;
        let cell = Cell { scenario: ScenarioKind::Cwnd, controller: ControllerKind::Ub, seed: 11 };
        run_cell(cell, &cfg)
    }

    #[test]
    fn run_dir_contains_all_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let report = small_report();
        write_run_dir(dir.path(), &report).unwrap();
        for name in ["cwnd_trace.csv", "mobility.csv", "cwnd.svg", "bwe.svg", "acked.svg"] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        let trace = std::fs::read_to_string(dir.path().join("cwnd_trace.csv")).unwrap();
        assert!(trace.starts_with(CWND_TRACE_HEADER), "header must match the schema");
        let mobility = std::fs::read_to_string(dir.path().join("mobility.csv")).unwrap();
        assert!(mobility.starts_with(MOBILITY_HEADER));
    }

    #[test]
    fn trace_tags_rows_by_flow() {
        let dir = tempfile::tempdir().unwrap();
        let report = small_report();
        assert_eq!(report.flows.len(), 2, "preset runs a competing flow");
        write_run_dir(dir.path(), &report).unwrap();
        let rows = read_cwnd_trace(&dir.path().join("cwnd_trace.csv")).unwrap();
        assert_eq!(rows.len(), 200, "two flows x 100 samples");
        assert_eq!(rows.iter().filter(|r| r.flow_id == 0).count(), 100);
        assert_eq!(rows.iter().filter(|r| r.flow_id == 1).count(), 100);
    }

    #[test]
    fn trace_round_trips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let report = small_report();
        write_run_dir(dir.path(), &report).unwrap();
        let rows = read_cwnd_trace(&dir.path().join("cwnd_trace.csv")).unwrap();
        let mut i = 0;
        for (f, flow) in report.flows.iter().enumerate() {
            for s in &flow.samples {
                let row = &rows[i];
                assert_eq!(row.time_us, s.at.as_micros());
                assert_eq!(row.flow_id, f);
                assert_eq!(row.cwnd_segments, s.cwnd.get());
                assert_eq!(row.ssthresh_segments, s.ssthresh.get());
                assert_eq!(row.bwe_bps.to_bits(), s.bwe.as_bps().to_bits(), "bwe must round-trip");
                assert_eq!(row.diff_segments.to_bits(), s.diff.to_bits(), "diff must round-trip");
                assert_eq!(row.action, s.action.name());
                i += 1;
            }
        }
        assert_eq!(i, rows.len());
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        write_run_dir(dir_a.path(), &small_report()).unwrap();
        write_run_dir(dir_b.path(), &small_report()).unwrap();
        for name in ["cwnd_trace.csv", "mobility.csv", "cwnd.svg", "bwe.svg", "acked.svg"] {
            let a = std::fs::read(dir_a.path().join(name)).unwrap();
            let b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn summary_schema_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let report = small_report();
        let row = summary_row(&report, 0.2).unwrap();
        assert!(row.goodput_bps > 0.0);
        assert!((0.0..=1.0).contains(&row.stability_index));
        assert!(row.consumed_bits >= row.goodput_bps as u64 * 10 / 8, "wire bits exceed payload");
        let path = dir.path().join("summary.csv");
        write_summary(&path, &[row.clone(), row.clone()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(SUMMARY_HEADER));
        assert_eq!(lines.count(), 2, "one row per cell");
    }

    #[test]
    fn reader_rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("not_a_trace.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_cwnd_trace(&path).is_err());
        assert!(read_cwnd_trace(&dir.path().join("missing.csv")).is_err());
    }
}
