//! Sender-side congestion controllers.
//!
//! Three personalities share one window-state shape:
//!
//! * `ub` measures the queue backlog the way Vegas does (expected minus
//!   actual rate, scaled back to segments) but reacts with three thresholds:
//!   grow below `alpha`, hold between `alpha` and `gamma`, resize the window
//!   to the estimated bandwidth-delay product inside `[gamma, beta]`, shrink
//!   above `beta`. Loss recovery also resizes from the bandwidth estimate.
//! * `vegas` is the two-threshold original: grow below `alpha`, shrink above
//!   `beta`, halve on loss.
//! * `westwood` grows like Reno and resizes from the bandwidth estimate on
//!   loss, with no backlog sensing at all.

use crate::estimator::{BwEstimator, RttTracker};
use crate::units::{bits_of, Rate, Segments, SimTime};

/// Thresholds and sizes shared by all controllers. The backlog thresholds
/// are in segments and must satisfy `0 <= alpha <= gamma <= beta`.
#[derive(Clone, Copy, Debug)]
pub struct ControllerConfig {
    /// Backlog below which the window grows.
    pub alpha: f64,
    /// Lower edge of the recalibration band.
    pub gamma: f64,
    /// Backlog above which the window shrinks.
    pub beta: f64,
    /// Segment size on the wire, bytes (headers included).
    pub seg_size: u32,
    pub initial_cwnd: Segments,
    pub initial_ssthresh: Segments,
    /// History weight of the bandwidth filter, in `[0, 1)`.
    pub ewma_gain: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            alpha: 1.0,
            gamma: 2.0,
            beta: 3.0,
            seg_size: 1040,
            initial_cwnd: Segments::new(2),
            initial_ssthresh: Segments::new(32),
            ewma_gain: 0.9,
        }
    }
}

impl ControllerConfig {
    /// Panics on a malformed configuration; file-sourced values are range
    /// checked before they get here.
    pub fn assert_valid(&self) {
        assert!(
            0.0 <= self.alpha && self.alpha <= self.gamma && self.gamma <= self.beta,
            "thresholds must satisfy 0 <= alpha <= gamma <= beta, got ({}, {}, {})",
            self.alpha,
            self.gamma,
            self.beta
        );
        assert!(self.seg_size > 0, "segment size must be positive");
        assert!(self.initial_cwnd.get() >= 1, "initial cwnd must be >= 1");
        assert!(self.initial_ssthresh.get() >= 2, "initial ssthresh must be >= 2");
        assert!(
            (0.0..1.0).contains(&self.ewma_gain),
            "ewma gain must be in [0, 1), got {}",
            self.ewma_gain
        );
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ControllerKind {
    Ub,
    Vegas,
    Westwood,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 3] =
        [ControllerKind::Ub, ControllerKind::Vegas, ControllerKind::Westwood];

    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Ub => "ub",
            ControllerKind::Vegas => "vegas",
            ControllerKind::Westwood => "westwood",
        }
    }

    pub fn parse(s: &str) -> Option<ControllerKind> {
        match s {
            "ub" => Some(ControllerKind::Ub),
            "vegas" => Some(ControllerKind::Vegas),
            "westwood" => Some(ControllerKind::Westwood),
            _ => None,
        }
    }
}

/// Window state. `cwnd >= 1` and `ssthresh >= 2` always hold; the phase is
/// not stored, it is `cwnd < ssthresh` by definition.
#[derive(Clone, Copy, Debug)]
pub struct CcState {
    pub cwnd: Segments,
    pub ssthresh: Segments,
    pub dup_acks: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Phase {
    SlowStart,
    CongestionAvoidance,
}

impl CcState {
    pub fn new(cfg: &ControllerConfig) -> CcState {
        CcState { cwnd: cfg.initial_cwnd, ssthresh: cfg.initial_ssthresh, dup_acks: 0 }
    }

    pub fn phase(&self) -> Phase {
        if self.cwnd < self.ssthresh {
            Phase::SlowStart
        } else {
            Phase::CongestionAvoidance
        }
    }
}

/// Outcome of one avoidance-phase evaluation.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Action {
    Increase,
    Recalibrate,
    Reset,
    Decrease,
    Hold,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Increase => "increase",
            Action::Recalibrate => "recalibrate",
            Action::Reset => "reset",
            Action::Decrease => "decrease",
            Action::Hold => "hold",
        }
    }
}

/// Backlog estimate in segments: `cwnd * (1 - base_rtt/rtt)`.
///
/// This is (expected - actual) rate scaled by the base round trip; it counts
/// the segments of this window sitting in queues. An `rtt` below `base_rtt`
/// is clamped to it, so the result is never negative.
pub fn vegas_diff(cwnd: Segments, base_rtt_s: f64, rtt_s: f64) -> f64 {
    assert!(base_rtt_s > 0.0, "base rtt must be positive, got {base_rtt_s}");
    let rtt = rtt_s.max(base_rtt_s);
    cwnd.get() as f64 * (1.0 - base_rtt_s / rtt)
}

/// Three-threshold decision, evaluated strictly in this order. The timeout
/// check sits after the recalibration band on purpose: a backlog inside
/// `[gamma, beta]` is answered by resizing even when the timer has expired.
pub fn decide(diff: f64, cfg: &ControllerConfig, timeout_expired: bool) -> Action {
    if diff < cfg.alpha {
        Action::Increase
    } else if cfg.gamma <= diff && diff <= cfg.beta {
        Action::Recalibrate
    } else if timeout_expired {
        Action::Reset
    } else if diff > cfg.beta {
        Action::Decrease
    } else {
        Action::Hold
    }
}

/// Window that fills `bwe` at round trip `rtt_s`, floored at two segments.
pub fn bwe_window(bwe: Rate, rtt_s: f64, seg_size: u32) -> Segments {
    let raw = bwe.as_bps() * rtt_s.max(0.0) / bits_of(seg_size) as f64;
    Segments::new(raw.floor().min(u32::MAX as f64) as u32).max_of(2)
}

/// Apply one action to the window state.
pub fn apply(state: &mut CcState, action: Action, bwe: Rate, base_rtt_s: f64, cfg: &ControllerConfig) {
    match action {
        Action::Increase => state.cwnd = state.cwnd.inc(),
        Action::Recalibrate => {
            state.ssthresh = bwe_window(bwe, base_rtt_s, cfg.seg_size);
            state.cwnd = state.cwnd.min_of(state.ssthresh);
        }
        Action::Reset => {
            state.ssthresh = bwe_window(bwe, base_rtt_s, cfg.seg_size);
            state.cwnd = Segments::new(1);
        }
        Action::Decrease => state.cwnd = state.cwnd.dec_floor(1),
        Action::Hold => {}
    }
}

/// Snapshot of one controller reaction, kept for traces. `diff`/`action`
/// are absent when the event did not run an avoidance evaluation.
#[derive(Clone, Copy, Debug)]
pub struct DecisionTrace {
    pub at: SimTime,
    pub diff: Option<f64>,
    pub action: Option<Action>,
    pub cwnd: Segments,
    pub ssthresh: Segments,
    pub bwe: Rate,
}

/// One controller instance per flow. The flow owns the estimator and the
/// RTT tracker (they belong to the connection, not the algorithm) and lends
/// them to each event handler.
#[derive(Clone, Debug)]
pub struct Controller {
    kind: ControllerKind,
    cfg: ControllerConfig,
    state: CcState,
    /// Segments acked since the last Reno-style growth step (westwood) or
    /// avoidance evaluation (ub, vegas). A full window of acknowledgements
    /// marks one round trip, which is the evaluation epoch: deciding on the
    /// round boundary means the bandwidth filter has just digested a whole
    /// window of samples rather than whatever fragment a wall-clock gate
    /// happens to land on.
    acked_in_window: u64,
    last_diff: f64,
    last_action: Action,
}

impl Controller {
    pub fn new(kind: ControllerKind, cfg: ControllerConfig) -> Controller {
        cfg.assert_valid();
        let state = CcState::new(&cfg);
        Controller {
            kind,
            cfg,
            state,
            acked_in_window: 0,
            last_diff: 0.0,
            last_action: Action::Hold,
        }
    }

    pub fn kind(&self) -> ControllerKind {
        self.kind
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn state(&self) -> &CcState {
        &self.state
    }

    pub fn cwnd(&self) -> Segments {
        self.state.cwnd
    }

    pub fn ssthresh(&self) -> Segments {
        self.state.ssthresh
    }

    /// Most recent avoidance evaluation, for trace sampling.
    pub fn last_decision(&self) -> (f64, Action) {
        (self.last_diff, self.last_action)
    }

    /// A cumulative ACK advanced by `acked` segments at `now`. `rtt_s` is the
    /// sample from this ACK, absent when the covered segment was
    /// retransmitted (ambiguous sample, withheld).
    pub fn on_ack(
        &mut self,
        now: SimTime,
        acked: u32,
        rtt_s: Option<f64>,
        tracker: &RttTracker,
        est: &BwEstimator,
    ) -> DecisionTrace {
        self.state.dup_acks = 0;
        let mut diff = None;
        let mut action = None;
        match self.state.phase() {
            Phase::SlowStart => {
                self.state.cwnd = self.state.cwnd.inc();
            }
            Phase::CongestionAvoidance => match self.kind {
                ControllerKind::Ub | ControllerKind::Vegas => {
                    self.acked_in_window += acked as u64;
                    // A round boundary without a clean RTT sample (the ACK
                    // covered a retransmission) waits for the next clean one.
                    if let (Some(rtt), Some(base)) = (rtt_s, tracker.base_rtt_s()) {
                        if self.acked_in_window >= self.state.cwnd.get() as u64 {
                            self.acked_in_window = 0;
                            let d = vegas_diff(self.state.cwnd, base, rtt);
                            let a = match self.kind {
                                ControllerKind::Ub => decide(d, &self.cfg, false),
                                _ => vegas_decide(d, &self.cfg),
                            };
                            apply(&mut self.state, a, est.current_bwe(), base, &self.cfg);
                            self.last_diff = d;
                            self.last_action = a;
                            diff = Some(d);
                            action = Some(a);
                        }
                    }
                }
                ControllerKind::Westwood => {
                    self.acked_in_window += acked as u64;
                    let w = self.state.cwnd.get() as u64;
                    if self.acked_in_window >= w {
                        self.acked_in_window -= w;
                        self.state.cwnd = self.state.cwnd.inc();
                    }
                }
            },
        }
        DecisionTrace {
            at: now,
            diff,
            action,
            cwnd: self.state.cwnd,
            ssthresh: self.state.ssthresh,
            bwe: est.current_bwe(),
        }
    }

    /// Duplicate cumulative ACK. Returns true when this is the third
    /// duplicate and the missing segment should be retransmitted now.
    pub fn on_dup_ack(&mut self, tracker: &RttTracker, est: &BwEstimator) -> bool {
        self.state.dup_acks += 1;
        if self.state.dup_acks != 3 {
            return false;
        }
        let base = tracker.base_rtt_s().unwrap_or(0.0);
        match self.kind {
            ControllerKind::Ub | ControllerKind::Westwood => {
                self.state.ssthresh = bwe_window(est.current_bwe(), base, self.cfg.seg_size);
                self.state.cwnd = self.state.cwnd.min_of(self.state.ssthresh);
            }
            ControllerKind::Vegas => {
                self.state.ssthresh = Segments::new(self.state.cwnd.get() / 2).max_of(2);
                self.state.cwnd = self.state.ssthresh;
            }
        }
        self.acked_in_window = 0;
        true
    }

    /// Retransmission timer expired.
    pub fn on_timeout(&mut self, tracker: &RttTracker, est: &BwEstimator) {
        let base = tracker.base_rtt_s().unwrap_or(0.0);
        match self.kind {
            ControllerKind::Ub | ControllerKind::Westwood => {
                self.state.ssthresh = bwe_window(est.current_bwe(), base, self.cfg.seg_size);
            }
            ControllerKind::Vegas => {
                self.state.ssthresh = Segments::new(self.state.cwnd.get() / 2).max_of(2);
            }
        }
        self.state.cwnd = Segments::new(1);
        self.state.dup_acks = 0;
        self.acked_in_window = 0;
    }
}

/// Two-threshold variant: grow below `alpha`, shrink above `beta`, hold in
/// between. No recalibration band, no timeout branch.
fn vegas_decide(diff: f64, cfg: &ControllerConfig) -> Action {
    if diff < cfg.alpha {
        Action::Increase
    } else if diff > cfg.beta {
        Action::Decrease
    } else {
        Action::Hold
    }
}
