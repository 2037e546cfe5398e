//! Metric extraction from finished runs.
//!
//! A [`MetricsReport`] is a self-contained snapshot of one simulation: the
//! sampled per-flow traces plus the cumulative ACK/delivery logs everything
//! else is derived from. Scalars are computed lazily so callers can pick
//! their own intervals (e.g. the final two thirds of a run).

use crate::controller::ControllerKind;
use crate::netsim::{CbrStats, FlowSample, FlowStats, Simulator};
use crate::units::{Rate, SimTime};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct FlowMetrics {
    pub controller: ControllerKind,
    /// Trace rows at the sampling cadence (0.1 s by default).
    pub samples: Vec<FlowSample>,
    /// (time, cumulative segments acknowledged at the sender).
    pub acked_log: Vec<(SimTime, u64)>,
    /// (time, cumulative segments delivered in order at the receiver).
    pub delivered_log: Vec<(SimTime, u64)>,
    pub stats: FlowStats,
}

#[derive(Clone, Debug)]
pub struct MetricsReport {
    pub scenario: String,
    pub seed: u64,
    pub duration: SimTime,
    /// Useful bits per segment (wire size minus header).
    pub payload_bits: u64,
    /// Wire bits per data segment.
    pub seg_bits: u64,
    /// Wire bits per ACK.
    pub ack_bits: u64,
    /// Narrowest forward-path link, for sanity bounds.
    pub bottleneck_bps: f64,
    pub flows: Vec<FlowMetrics>,
    /// (time, node, x, y) rows from the mobility ticks.
    pub mobility: Vec<(SimTime, usize, f64, f64)>,
    pub cbr: Vec<CbrStats>,
    pub max_queue_depth: usize,
}

impl MetricsReport {
    /// Snapshot a finished simulator. The caller names the scenario and seed
    /// because the simulator itself never knew them.
    pub fn from_sim(sim: &Simulator, scenario: &str, seed: u64, bottleneck_bps: f64) -> Self {
        let cfg = sim.config();
        let flows = (0..sim.flow_count())
            .map(|f| FlowMetrics {
                controller: sim.flow_kind(f),
                samples: sim.flow_samples(f).to_vec(),
                acked_log: sim.acked_log(f).to_vec(),
                delivered_log: sim.delivered_log(f).to_vec(),
                stats: sim.flow_stats(f),
            })
            .collect();
        MetricsReport {
            scenario: scenario.to_string(),
            seed,
            duration: cfg.duration,
            payload_bits: cfg.payload_bits(),
            seg_bits: crate::units::bits_of(cfg.seg_size_bytes),
            ack_bits: crate::units::bits_of(cfg.ack_bytes),
            bottleneck_bps,
            flows,
            mobility: sim.mobility_trace().to_vec(),
            cbr: sim.cbr_stats(),
            max_queue_depth: sim.max_queue_depth(),
        }
    }

    /// Cumulative value of a (time, count) log at time `t`.
    fn log_at(log: &[(SimTime, u64)], t: SimTime) -> u64 {
        let idx = log.partition_point(|&(at, _)| at <= t);
        if idx == 0 { 0 } else { log[idx - 1].1 }
    }

    /// Unique in-order-delivered segments inside [t0, t1].
    pub fn delivered_segments(&self, flow: usize, t0: SimTime, t1: SimTime) -> u64 {
        let log = &self.flows[flow].delivered_log;
        Self::log_at(log, t1) - Self::log_at(log, t0)
    }
}

/// Unique delivered payload bits over the interval, per second.
/// Retransmitted copies of already-delivered segments never advance the
/// receiver, so they are excluded by construction.
pub fn goodput(report: &MetricsReport, flow: usize, t0: SimTime, t1: SimTime) -> Result<Rate> {
    if t1 <= t0 {
        return Err(Error::Argument(format!("goodput: empty interval [{t0}, {t1}]")));
    }
    let segs = report.delivered_segments(flow, t0, t1);
    let bits = segs as f64 * report.payload_bits as f64;
    Ok(Rate::bps(bits / t1.secs_since(t0)))
}

/// Acknowledged payload megabits accrued per bucket, as (bucket end seconds,
/// megabits) pairs covering the whole run.
pub fn efficiency_series(report: &MetricsReport, flow: usize, bucket_s: f64) -> Vec<(f64, f64)> {
    assert!(bucket_s > 0.0, "bucket must be positive");
    let log = &report.flows[flow].acked_log;
    let total_s = report.duration.as_secs_f64();
    let buckets = (total_s / bucket_s).ceil() as usize;
    let mut out = Vec::with_capacity(buckets);
    let mut prev = 0u64;
    for b in 1..=buckets {
        let end = SimTime::from_secs_f64((b as f64 * bucket_s).min(total_s));
        let acked = MetricsReport::log_at(log, end);
        let mbits = (acked - prev) as f64 * report.payload_bits as f64 / 1e6;
        out.push((end.as_secs_f64(), mbits));
        prev = acked;
    }
    out
}

/// Total acknowledged payload megabits over the whole run.
pub fn efficiency_total(report: &MetricsReport, flow: usize) -> f64 {
    let log = &report.flows[flow].acked_log;
    let acked = MetricsReport::log_at(log, report.duration);
    acked as f64 * report.payload_bits as f64 / 1e6
}

/// Fraction of window samples in [t0, t1] within ±`band` of their median.
/// 1.0 means the window never strayed; an oscillating sawtooth scores low.
/// Scale-free: multiplying the whole trace by a constant leaves it unchanged.
pub fn stability_index(samples: &[FlowSample], t0: SimTime, t1: SimTime, band: f64) -> Result<f64> {
    assert!((0.0..1.0).contains(&band), "band must be in [0,1)");
    let window: Vec<f64> = samples
        .iter()
        .filter(|s| s.at >= t0 && s.at <= t1)
        .map(|s| s.cwnd.get() as f64)
        .collect();
    if window.len() < 2 {
        return Err(Error::Argument(format!(
            "stability_index: need at least 2 samples in [{t0}, {t1}], found {}",
            window.len()
        )));
    }
    let mut sorted = window.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("cwnd is never NaN"));
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    };
    let lo = median * (1.0 - band);
    let hi = median * (1.0 + band);
    let inside = window.iter().filter(|&&v| v >= lo && v <= hi).count();
    Ok(inside as f64 / window.len() as f64)
}

/// Every bit the flow injected: all data transmissions (retransmissions
/// included) plus the ACKs they drew. Lower is better at equal goodput.
pub fn bandwidth_consumed(report: &MetricsReport, flow: usize) -> u64 {
    let stats = &report.flows[flow].stats;
    stats.data_sent * report.seg_bits + stats.acks_sent * report.ack_bits
}

/// Cross-checks every exported series obeys conservation and monotonicity.
/// Violations are simulator bugs, so the message names the failing flow.
pub fn check_report(report: &MetricsReport) -> std::result::Result<(), String> {
    for (f, flow) in report.flows.iter().enumerate() {
        let delivered = MetricsReport::log_at(&flow.delivered_log, report.duration);
        if delivered > flow.stats.data_sent {
            return Err(format!(
                "flow {f}: delivered {delivered} segments but only {} were sent",
                flow.stats.data_sent
            ));
        }
        for log in [&flow.acked_log, &flow.delivered_log] {
            for pair in log.windows(2) {
                if pair[1].0 < pair[0].0 || pair[1].1 < pair[0].1 {
                    return Err(format!("flow {f}: cumulative log went backwards"));
                }
            }
        }
        let consumed = bandwidth_consumed(report, f);
        if consumed < delivered * report.payload_bits {
            return Err(format!("flow {f}: consumed fewer bits than it delivered"));
        }
        let goodput = goodput(report, f, SimTime::ZERO, report.duration)
            .expect("whole-run interval is never empty");
        if goodput.as_bps() > report.bottleneck_bps {
            return Err(format!(
                "flow {f}: goodput {} exceeds the {} b/s bottleneck",
                goodput.as_bps(),
                report.bottleneck_bps
            ));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::Action;
    use crate::units::Segments;

    fn at(s: f64) -> SimTime {
        SimTime::from_secs_f64(s)
    }

    fn sample(t: f64, cwnd: u32) -> FlowSample {
        FlowSample {
            at: at(t),
            cwnd: Segments::new(cwnd),
            ssthresh: Segments::new(2),
            bwe: Rate::ZERO,
            diff: 0.0,
            action: Action::Hold,
        }
    }

    fn report_with(delivered: Vec<(SimTime, u64)>, acked: Vec<(SimTime, u64)>) -> MetricsReport {
        MetricsReport {
            scenario: "test".into(),
            seed: 0,
            duration: at(10.0),
            payload_bits: 8000,
            seg_bits: 8320,
            ack_bits: 320,
            bottleneck_bps: 2_000_000.0,
            flows: vec![FlowMetrics {
                controller: ControllerKind::Ub,
                samples: Vec::new(),
                acked_log: acked,
                delivered_log: delivered,
                stats: FlowStats::default(),
            }],
            mobility: Vec::new(),
            cbr: Vec::new(),
            max_queue_depth: 0,
        }
    }

    #[test]
    fn goodput_divides_unique_payload_bits() {
        let report = report_with(vec![(at(9.0), 1000)], Vec::new());
        let rate = goodput(&report, 0, SimTime::ZERO, at(10.0)).unwrap();
        assert_eq!(rate.as_bps(), 800_000.0, "1000 x 8000 bits over 10 s");
    }

    #[test]
    fn goodput_of_silence_is_zero() {
        let report = report_with(Vec::new(), Vec::new());
        let rate = goodput(&report, 0, SimTime::ZERO, at(10.0)).unwrap();
        assert_eq!(rate.as_bps(), 0.0);
    }

    #[test]
    fn goodput_counts_each_segment_once() {
        // The delivery log only ever advances on first in-order arrival, so a
        // duplicate shows up as no new log entry at all.
        let report = report_with(vec![(at(1.0), 5), (at(2.0), 5)], Vec::new());
        let segs = report.delivered_segments(0, SimTime::ZERO, at(10.0));
        assert_eq!(segs, 5, "re-delivery must not double count");
    }

    #[test]
    fn goodput_rejects_empty_interval() {
        let report = report_with(Vec::new(), Vec::new());
        assert!(goodput(&report, 0, at(5.0), at(5.0)).is_err());
        assert!(goodput(&report, 0, at(6.0), at(5.0)).is_err());
    }

    #[test]
    fn efficiency_buckets_accumulate_acked_megabits() {
        // 125 segments x 8000 bits = 1 Mbit per second, bucket 2 s.
        let acked: Vec<(SimTime, u64)> = (1..=10).map(|s| (at(s as f64), 125 * s)).collect();
        let report = report_with(Vec::new(), acked);
        let series = efficiency_series(&report, 0, 2.0);
        assert_eq!(series.len(), 5);
        for &(_, mbits) in &series {
            assert!((mbits - 2.0).abs() < 1e-12, "each 2 s bucket adds 2 Mbit, got {mbits}");
        }
        assert!((efficiency_total(&report, 0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn efficiency_of_silence_is_all_zero() {
        let report = report_with(Vec::new(), Vec::new());
        let series = efficiency_series(&report, 0, 2.5);
        assert_eq!(series.len(), 4);
        assert!(series.iter().all(|&(_, m)| m == 0.0));
    }

    #[test]
    fn stability_of_constant_trace_is_one() {
        let samples: Vec<_> = (0..20).map(|i| sample(i as f64, 7)).collect();
        let idx = stability_index(&samples, SimTime::ZERO, at(19.0), 0.2).unwrap();
        assert_eq!(idx, 1.0);
    }

    #[test]
    fn stability_of_alternating_extremes_is_zero() {
        // Median of 1,30,... is 15.5; both values sit outside the 20% band.
        let samples: Vec<_> =
            (0..10).map(|i| sample(i as f64, if i % 2 == 0 { 1 } else { 30 })).collect();
        let idx = stability_index(&samples, SimTime::ZERO, at(9.0), 0.2).unwrap();
        assert_eq!(idx, 0.0);
    }

    #[test]
    fn stability_of_mostly_flat_trace() {
        // {10,10,10,10,20}: median 10, band [8,12], four of five inside.
        let vals = [10, 10, 10, 10, 20];
        let samples: Vec<_> =
            vals.iter().enumerate().map(|(i, &v)| sample(i as f64, v)).collect();
        let idx = stability_index(&samples, SimTime::ZERO, at(4.0), 0.2).unwrap();
        assert_eq!(idx, 0.8);
    }

    #[test]
    fn stability_is_scale_free() {
        let vals = [3u32, 4, 5, 4, 3, 6, 4];
        let base: Vec<_> = vals.iter().enumerate().map(|(i, &v)| sample(i as f64, v)).collect();
        let scaled: Vec<_> =
            vals.iter().enumerate().map(|(i, &v)| sample(i as f64, v * 10)).collect();
        let a = stability_index(&base, SimTime::ZERO, at(6.0), 0.2).unwrap();
        let b = stability_index(&scaled, SimTime::ZERO, at(6.0), 0.2).unwrap();
        assert_eq!(a, b, "uniform scaling moves the median with the samples");
    }

    #[test]
    fn stability_needs_two_samples() {
        let samples = vec![sample(0.0, 5)];
        assert!(stability_index(&samples, SimTime::ZERO, at(1.0), 0.2).is_err());
        assert!(stability_index(&[], SimTime::ZERO, at(1.0), 0.2).is_err());
    }

    #[test]
    fn consumed_counts_wire_bits_per_send() {
        let mut report = report_with(Vec::new(), Vec::new());
        report.flows[0].stats.data_sent = 10;
        report.flows[0].stats.acks_sent = 10;
        assert_eq!(bandwidth_consumed(&report, 0), 10 * 8320 + 10 * 320);
        // One retransmission is one more data send on the wire.
        report.flows[0].stats.data_sent = 11;
        assert_eq!(bandwidth_consumed(&report, 0), 11 * 8320 + 10 * 320);
    }

    #[test]
    fn check_report_flags_impossible_delivery() {
        let mut report = report_with(vec![(at(1.0), 50)], Vec::new());
        report.flows[0].stats.data_sent = 10;
        let err = check_report(&report).unwrap_err();
        assert!(err.contains("delivered 50"), "got: {err}");
    }

    #[test]
    fn check_report_flags_backwards_log() {
        let mut report = report_with(vec![(at(1.0), 5), (at(2.0), 3)], Vec::new());
        report.flows[0].stats.data_sent = 10;
        assert!(check_report(&report).is_err());
    }

    #[test]
    fn check_report_accepts_consistent_runs() {
        let mut report = report_with(vec![(at(1.0), 5)], vec![(at(1.1), 5)]);
        report.flows[0].stats.data_sent = 6;
        report.flows[0].stats.acks_sent = 5;
        check_report(&report).unwrap();
    }
}
