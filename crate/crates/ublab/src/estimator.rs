//! Sender-side bandwidth and round-trip estimators.
//!
//! Bandwidth is estimated twice, from the send process and from the ACK
//! stream, with the same exponentially weighted filter: the average packet
//! length divided by the average inter-arrival interval. The ACK-side figure
//! is the one the controller consumes (it reflects what the path actually
//! delivered); the send-side figure is kept for traces.

use crate::units::{bits_of, Rate, RttSample, SimTime};

/// One EWMA chain over (sample length, sample interval) pairs.
///
/// The first sample of each average initializes it directly instead of
/// decaying from an arbitrary zero. Samples with a zero interval (same
/// microsecond) are skipped but still move the reference timestamp.
#[derive(Clone, Debug)]
struct EwmaChannel {
    gain: f64,
    avg_len_bits: f64,
    avg_interval_s: Option<f64>,
    last_at: Option<SimTime>,
    samples: u64,
}

impl EwmaChannel {
    fn new(gain: f64) -> EwmaChannel {
        EwmaChannel { gain, avg_len_bits: 0.0, avg_interval_s: None, last_at: None, samples: 0 }
    }

    fn record(&mut self, len_bits: f64, now: SimTime) {
        let Some(last) = self.last_at else {
            self.avg_len_bits = len_bits;
            self.last_at = Some(now);
            self.samples = 1;
            return;
        };
        let interval = now.secs_since(last);
        self.last_at = Some(now);
        if interval == 0.0 {
            return;
        }
        self.avg_len_bits = self.gain * self.avg_len_bits + (1.0 - self.gain) * len_bits;
        self.avg_interval_s = Some(match self.avg_interval_s {
            None => interval,
            Some(avg) => self.gain * avg + (1.0 - self.gain) * interval,
        });
        self.samples += 1;
    }

    /// Move the reference timestamp without taking a sample.
    fn touch(&mut self, now: SimTime) {
        if self.last_at.is_some() {
            self.last_at = Some(now);
        }
    }

    /// Zero until two samples exist: a single packet carries no rate signal.
    fn rate(&self) -> Rate {
        match self.avg_interval_s {
            Some(avg) if self.samples >= 2 => Rate::bps(self.avg_len_bits / avg),
            _ => Rate::ZERO,
        }
    }
}

/// Dual-channel bandwidth estimator for one flow.
#[derive(Clone, Debug)]
pub struct BwEstimator {
    send: EwmaChannel,
    ack: EwmaChannel,
}

impl BwEstimator {
    /// `gain` is the weight of history, in `[0, 1)`; 0.9 by default upstream.
    pub fn new(gain: f64) -> BwEstimator {
        assert!((0.0..1.0).contains(&gain), "gain must be in [0, 1), got {gain}");
        BwEstimator { send: EwmaChannel::new(gain), ack: EwmaChannel::new(gain) }
    }

    /// A data packet of `packet_bytes` left the sender at `now`.
    pub fn record_send(&mut self, packet_bytes: u32, now: SimTime) {
        self.send.record(bits_of(packet_bytes) as f64, now);
    }

    /// An ACK arrived at `now` newly covering `acked_segments` segments of
    /// `packet_bytes` each. The sample length is the bits the ACK vouches for.
    pub fn record_ack(&mut self, acked_segments: u32, packet_bytes: u32, now: SimTime) {
        self.ack.record((acked_segments as u64 * bits_of(packet_bytes)) as f64, now);
    }

    /// Discard the pending ACK interval: move the reference timestamp
    /// without sampling. Callers use this for the first ACK after a
    /// retransmission timeout, whose "interval" measures the outage rather
    /// than the ACK clock — the rate analogue of Karn's rule for RTT.
    pub fn touch_ack(&mut self, now: SimTime) {
        self.ack.touch(now);
    }

    /// ACK-side bandwidth estimate, the controller's input.
    pub fn current_bwe(&self) -> Rate {
        self.ack.rate()
    }

    /// Send-side estimate, recorded in traces only.
    pub fn send_rate(&self) -> Rate {
        self.send.rate()
    }
}

/// Round-trip bookkeeping: the minimum (base) RTT, a smoothed RTT with
/// variance, and the retransmission timeout derived from them.
#[derive(Clone, Debug)]
pub struct RttTracker {
    base_rtt_s: Option<f64>,
    srtt_s: Option<f64>,
    rttvar_s: f64,
    rto_s: f64,
    backoff: u32,
}

const RTO_MIN_S: f64 = 0.2;
const RTO_MAX_S: f64 = 60.0;
const INITIAL_RTO_S: f64 = 1.0;
const SRTT_GAIN: f64 = 0.125;
const RTTVAR_GAIN: f64 = 0.25;

impl RttTracker {
    pub fn new() -> RttTracker {
        RttTracker {
            base_rtt_s: None,
            srtt_s: None,
            rttvar_s: 0.0,
            rto_s: INITIAL_RTO_S,
            backoff: 0,
        }
    }

    /// Feed one accepted sample. Samples from retransmitted segments must be
    /// withheld by the caller; an ambiguous RTT would poison both averages.
    pub fn record(&mut self, sample: RttSample) {
        let rtt = sample.rtt_s();
        assert!(rtt > 0.0, "rtt sample must be positive, got {rtt}");
        self.base_rtt_s = Some(match self.base_rtt_s {
            None => rtt,
            Some(b) => b.min(rtt),
        });
        match self.srtt_s {
            None => {
                self.srtt_s = Some(rtt);
                self.rttvar_s = rtt / 2.0;
            }
            Some(srtt) => {
                self.rttvar_s = (1.0 - RTTVAR_GAIN) * self.rttvar_s + RTTVAR_GAIN * (srtt - rtt).abs();
                self.srtt_s = Some((1.0 - SRTT_GAIN) * srtt + SRTT_GAIN * rtt);
            }
        }
        let srtt = self.srtt_s.unwrap();
        self.rto_s = (srtt + 4.0 * self.rttvar_s).clamp(RTO_MIN_S, RTO_MAX_S);
        self.backoff = 0;
    }

    /// A retransmission timer fired: double the timeout (capped) until the
    /// next accepted sample resets the backoff.
    pub fn on_timeout(&mut self) {
        self.backoff = self.backoff.saturating_add(1);
        self.rto_s = (self.rto_s * 2.0).min(RTO_MAX_S);
    }

    pub fn base_rtt_s(&self) -> Option<f64> {
        self.base_rtt_s
    }

    pub fn srtt_s(&self) -> Option<f64> {
        self.srtt_s
    }

    pub fn rto_s(&self) -> f64 {
        self.rto_s
    }
}

impl Default for RttTracker {
    fn default() -> Self {
        Self::new()
    }
}
