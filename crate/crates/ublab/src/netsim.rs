//! Deterministic discrete-event simulator for a point-to-point relay chain.
//!
//! Single-threaded, integer-microsecond clock, and a total event order of
//! (fire time, scheduling sequence), so identical inputs replay identically
//! down to the last bit. The topology is a chain of `hops` forward links and
//! `hops` reverse links; mobility (or a test) flips per-hop radio state, and
//! an outage drops exactly the packets occupying the hop while queued ones
//! wait it out.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::controller::{Action, Controller, ControllerConfig, ControllerKind};
use crate::estimator::{BwEstimator, RttTracker};
use crate::mobility::{link_up, MobilityModel};
use crate::units::{bits_of, Rate, RttSample, Segments, SimTime};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PacketKind {
    Data,
    Ack,
    Cbr,
}

/// `owner` is a flow id for Data/Ack and a CBR source id for Cbr.
#[derive(Clone, Copy, Debug)]
pub struct Packet {
    pub kind: PacketKind,
    pub owner: usize,
    /// Data sequence number, or the receiver's next expected for an ACK.
    pub seq: u64,
    pub size_bytes: u32,
}

#[derive(Clone, Debug)]
pub struct LinkConfig {
    pub bandwidth_bps: f64,
    pub prop_delay_s: f64,
    pub queue_cap: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig { bandwidth_bps: 2_000_000.0, prop_delay_s: 0.010, queue_cap: 80 }
    }
}

/// Relay chain shape: `hops` store-and-forward links each way.
#[derive(Clone, Debug)]
pub struct ChainSpec {
    pub hops: usize,
    pub fwd: LinkConfig,
    pub rev: LinkConfig,
}

impl Default for ChainSpec {
    fn default() -> Self {
        // The reverse path has ample capacity by default so ACKs are never
        // queue-dropped and loss asymmetry cannot confound comparisons.
        ChainSpec {
            hops: 3,
            fwd: LinkConfig::default(),
            rev: LinkConfig { bandwidth_bps: 100_000_000.0, ..LinkConfig::default() },
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    /// Data segment size on the wire, header included.
    pub seg_size_bytes: u32,
    /// Header share of a data segment; the rest is payload.
    pub header_bytes: u32,
    pub ack_bytes: u32,
    pub duration: SimTime,
    /// Metric sampling cadence for the per-flow traces.
    pub sample_dt: SimTime,
    /// Radio-state refresh cadence when mobility drives the chain.
    pub mobility_dt: SimTime,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seg_size_bytes: 1040,
            header_bytes: 40,
            ack_bytes: 40,
            duration: SimTime::from_secs_f64(140.0),
            sample_dt: SimTime::from_secs_f64(0.1),
            mobility_dt: SimTime::from_secs_f64(0.1),
        }
    }
}

impl SimConfig {
    pub fn payload_bits(&self) -> u64 {
        bits_of(self.seg_size_bytes - self.header_bytes)
    }
}

#[derive(Clone, Copy, Debug)]
enum EventKind {
    FlowStart { flow: usize },
    TxDone { link: usize, epoch: u64 },
    Arrive { link: usize, epoch: u64, pkt: Packet },
    Rto { flow: usize, epoch: u64 },
    CbrEmit { cbr: usize, k: u64 },
    MobilityTick { k: u64 },
    SampleTick { k: u64 },
}

struct Ev {
    at: SimTime,
    seq: u64,
    kind: EventKind,
}

// Total order by (fire time, scheduling sequence); the heap is a max-heap so
// the comparison is reversed.
impl PartialEq for Ev {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl Eq for Ev {}
impl PartialOrd for Ev {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ev {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.at, other.seq).cmp(&(self.at, self.seq))
    }
}

/// Where packets leaving a link go.
#[derive(Clone, Copy, Debug)]
enum Route {
    Forward(usize),
    ToReceiver,
    ToSender,
}

struct Link {
    cfg: LinkConfig,
    up: bool,
    /// Bumped on every down transition; stale transmissions and propagations
    /// identify themselves by carrying an old epoch.
    epoch: u64,
    busy: bool,
    queue: std::collections::VecDeque<Packet>,
    max_queue: usize,
}

impl Link {
    fn new(cfg: LinkConfig) -> Link {
        Link { cfg, up: true, epoch: 0, busy: false, queue: Default::default(), max_queue: 0 }
    }

    fn ser_time(&self, pkt: &Packet) -> SimTime {
        SimTime::from_secs_f64(bits_of(pkt.size_bytes) as f64 / self.cfg.bandwidth_bps)
    }
}

/// How a sender refills holes after a timeout.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RetxPolicy {
    /// Resend only segments the receiver is actually missing, window-paced
    /// from a scoreboard of declared losses; data that arrived out of order
    /// is never resent.
    Selective,
    /// Rewind to the oldest unacked segment and resend everything from
    /// there, acknowledged-or-not (classic one-way-TCP recovery).
    GoBackN,
}

impl RetxPolicy {
    fn for_kind(kind: ControllerKind) -> RetxPolicy {
        match kind {
            ControllerKind::Westwood => RetxPolicy::GoBackN,
            _ => RetxPolicy::Selective,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Sent {
    sent_at: SimTime,
    retx: bool,
}

#[derive(Clone, Copy, Default, Debug)]
pub struct FlowStats {
    pub data_sent: u64,
    pub retransmits: u64,
    pub fast_retransmits: u64,
    pub rtos: u64,
    pub data_drops: u64,
    pub data_arrivals: u64,
    pub acks_sent: u64,
    pub ack_drops: u64,
    pub ack_arrivals: u64,
}

/// One periodic metric sample of a flow.
#[derive(Clone, Copy, Debug)]
pub struct FlowSample {
    pub at: SimTime,
    pub cwnd: Segments,
    pub ssthresh: Segments,
    pub bwe: Rate,
    pub diff: f64,
    pub action: Action,
}

struct Flow {
    ctl: Controller,
    est: BwEstimator,
    tracker: RttTracker,
    policy: RetxPolicy,
    /// Next sequence to transmit; rewinds on go-back-N recovery.
    next_seq: u64,
    /// High-water mark of sequences ever transmitted; never rewinds.
    next_new: u64,
    /// Receiver's next expected sequence as known to the sender.
    cum_ack: u64,
    /// Recovery high-water mark: while cum_ack < recover, selective flows
    /// keep refilling holes from the loss scoreboard.
    recover: u64,
    /// Declared-lost segments awaiting resend, drained window-paced ahead
    /// of new data. Links are FIFO, so a delivery observed past a hole
    /// proves the hole is a loss; a timeout declares the whole window.
    retx_queue: BTreeSet<u64>,
    /// Set by a timeout: the next ACK interval spans dead air, not the ACK
    /// clock, so the bandwidth filter must skip that sample.
    bwe_gap: bool,
    inflight: BTreeMap<u64, Sent>,
    rto_armed: bool,
    rto_epoch: u64,
    // Receiver half.
    rcv_next: u64,
    rcv_buf: BTreeSet<u64>,
    // Logs and counters.
    stats: FlowStats,
    acked_log: Vec<(SimTime, u64)>,
    delivered_log: Vec<(SimTime, u64)>,
    samples: Vec<FlowSample>,
}

impl Flow {
    fn new(kind: ControllerKind, cfg: ControllerConfig) -> Flow {
        let gain = cfg.ewma_gain;
        Flow {
            policy: RetxPolicy::for_kind(kind),
            ctl: Controller::new(kind, cfg),
            est: BwEstimator::new(gain),
            tracker: RttTracker::new(),
            next_seq: 0,
            next_new: 0,
            cum_ack: 0,
            recover: 0,
            retx_queue: BTreeSet::new(),
            bwe_gap: false,
            inflight: BTreeMap::new(),
            rto_armed: false,
            rto_epoch: 0,
            rcv_next: 0,
            rcv_buf: BTreeSet::new(),
            stats: FlowStats::default(),
            acked_log: Vec::new(),
            delivered_log: Vec::new(),
            samples: Vec::new(),
        }
    }

    fn in_flight(&self) -> usize {
        self.inflight.len()
    }

    /// Receiver-side truth, as a selective acknowledgement would carry it:
    /// the segment reached the far end, in order or buffered ahead.
    fn delivered(&self, seq: u64) -> bool {
        seq < self.rcv_next || self.rcv_buf.contains(&seq)
    }
}

#[derive(Clone, Copy, Default, Debug)]
pub struct CbrStats {
    pub sent: u64,
    pub arrivals: u64,
    pub drops: u64,
}

struct Cbr {
    period: SimTime,
    size_bytes: u32,
    stats: CbrStats,
}

/// Chain node `i` follows mobility node `i`; node count must be `hops + 1`.
pub struct MobilityDrive {
    pub model: MobilityModel,
}

pub struct Simulator {
    cfg: SimConfig,
    hops: usize,
    now: SimTime,
    queue: BinaryHeap<Ev>,
    next_ev_seq: u64,
    links: Vec<Link>,
    routes: Vec<Route>,
    flows: Vec<Flow>,
    flow_kinds: Vec<ControllerKind>,
    cbrs: Vec<Cbr>,
    mobility: Option<MobilityModel>,
    mobility_trace: Vec<(SimTime, usize, f64, f64)>,
}

impl Simulator {
    pub fn new(
        cfg: SimConfig,
        chain: ChainSpec,
        flows: Vec<(ControllerKind, ControllerConfig)>,
        cbr_rate_pps: Option<f64>,
        mobility: Option<MobilityDrive>,
    ) -> Simulator {
        assert!(chain.hops >= 1, "a chain needs at least one hop");
        assert!(cfg.seg_size_bytes > cfg.header_bytes, "segment must carry payload");
        let h = chain.hops;
        let mut links = Vec::with_capacity(2 * h);
        let mut routes = Vec::with_capacity(2 * h);
        for i in 0..h {
            links.push(Link::new(chain.fwd.clone()));
            routes.push(if i + 1 < h { Route::Forward(i + 1) } else { Route::ToReceiver });
        }
        for j in 0..h {
            links.push(Link::new(chain.rev.clone()));
            routes.push(if j > 0 { Route::Forward(h + j - 1) } else { Route::ToSender });
        }
        let mobility = mobility.map(|d| {
            assert_eq!(
                d.model.node_count(),
                h + 1,
                "mobility must cover every chain node"
            );
            d.model
        });
        let flow_kinds = flows.iter().map(|(k, _)| *k).collect();
        let mut sim = Simulator {
            cfg,
            hops: h,
            now: SimTime::ZERO,
            queue: BinaryHeap::new(),
            next_ev_seq: 0,
            links,
            routes,
            flows: flows.into_iter().map(|(k, c)| Flow::new(k, c)).collect(),
            flow_kinds,
            cbrs: Vec::new(),
            mobility,
            mobility_trace: Vec::new(),
        };
        if let Some(rate) = cbr_rate_pps {
            assert!(rate > 0.0, "cbr rate must be positive");
            sim.cbrs.push(Cbr {
                period: SimTime::from_secs_f64(1.0 / rate),
                size_bytes: sim.cfg.seg_size_bytes,
                stats: CbrStats::default(),
            });
        }
        // Setup order fixes same-instant ordering at t = 0: radio state
        // first, then traffic.
        if sim.mobility.is_some() {
            sim.schedule(SimTime::ZERO, EventKind::MobilityTick { k: 0 });
        }
        for f in 0..sim.flows.len() {
            sim.schedule(SimTime::ZERO, EventKind::FlowStart { flow: f });
        }
        for c in 0..sim.cbrs.len() {
            let period = sim.cbrs[c].period;
            sim.schedule(period, EventKind::CbrEmit { cbr: c, k: 1 });
        }
        sim.schedule(sim.cfg.sample_dt, EventKind::SampleTick { k: 1 });
        sim
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn flow_count(&self) -> usize {
        self.flows.len()
    }

    pub fn flow_kind(&self, f: usize) -> ControllerKind {
        self.flow_kinds[f]
    }

    pub fn flow_stats(&self, f: usize) -> FlowStats {
        self.flows[f].stats
    }

    pub fn flow_samples(&self, f: usize) -> &[FlowSample] {
        &self.flows[f].samples
    }

    /// Sender-side cumulative ACK advances: (time, next expected).
    pub fn acked_log(&self, f: usize) -> &[(SimTime, u64)] {
        &self.flows[f].acked_log
    }

    /// Receiver-side in-order delivery advances: (time, next expected).
    pub fn delivered_log(&self, f: usize) -> &[(SimTime, u64)] {
        &self.flows[f].delivered_log
    }

    pub fn cbr_stats(&self) -> Vec<CbrStats> {
        self.cbrs.iter().map(|c| c.stats).collect()
    }

    /// (time, node, x, y) rows recorded at every mobility tick.
    pub fn mobility_trace(&self) -> &[(SimTime, usize, f64, f64)] {
        &self.mobility_trace
    }

    pub fn max_queue_depth(&self) -> usize {
        self.links.iter().map(|l| l.max_queue).max().unwrap_or(0)
    }

    /// Force one hop's radio state (both directions). Mobility does this on
    /// its tick; tests script outages with it directly.
    pub fn set_hop(&mut self, hop: usize, up: bool) {
        assert!(hop < self.hops);
        self.set_link(hop, up);
        self.set_link(self.hops + hop, up);
    }

    pub fn run(&mut self) {
        self.run_until(self.cfg.duration);
    }

    /// Process events with fire time <= `t_end`, then park the clock there.
    pub fn run_until(&mut self, t_end: SimTime) {
        assert!(t_end >= self.now, "cannot run backwards");
        while let Some(ev) = self.queue.peek() {
            if ev.at > t_end {
                break;
            }
            let ev = self.queue.pop().unwrap();
            debug_assert!(ev.at >= self.now, "event order violated");
            self.now = ev.at;
            self.dispatch(ev.kind);
        }
        self.now = t_end;
    }

    fn schedule(&mut self, at: SimTime, kind: EventKind) {
        assert!(at >= self.now, "scheduling into the past: {at} < {}", self.now);
        let seq = self.next_ev_seq;
        self.next_ev_seq += 1;
        self.queue.push(Ev { at, seq, kind });
    }

    fn dispatch(&mut self, kind: EventKind) {
        match kind {
            EventKind::FlowStart { flow } => self.flow_send(flow),
            EventKind::TxDone { link, epoch } => self.on_tx_done(link, epoch),
            EventKind::Arrive { link, epoch, pkt } => self.on_arrive(link, epoch, pkt),
            EventKind::Rto { flow, epoch } => self.on_rto(flow, epoch),
            EventKind::CbrEmit { cbr, k } => self.on_cbr_emit(cbr, k),
            EventKind::MobilityTick { k } => self.on_mobility_tick(k),
            EventKind::SampleTick { k } => self.on_sample_tick(k),
        }
    }

    // ---- links ----

    fn enqueue(&mut self, link: usize, pkt: Packet) {
        let l = &mut self.links[link];
        if !l.up {
            self.count_drop(&pkt);
            return;
        }
        if l.queue.len() >= l.cfg.queue_cap {
            self.count_drop(&pkt);
            return;
        }
        l.queue.push_back(pkt);
        l.max_queue = l.max_queue.max(l.queue.len());
        if !l.busy {
            self.start_tx(link);
        }
    }

    fn start_tx(&mut self, link: usize) {
        let l = &mut self.links[link];
        debug_assert!(l.up && !l.busy && !l.queue.is_empty());
        l.busy = true;
        let ser = l.ser_time(&l.queue[0]);
        let epoch = l.epoch;
        self.schedule(self.now + ser, EventKind::TxDone { link, epoch });
    }

    fn on_tx_done(&mut self, link: usize, epoch: u64) {
        let l = &mut self.links[link];
        if epoch != l.epoch {
            return; // transmission was aborted by an outage
        }
        l.busy = false;
        let pkt = l.queue.pop_front().expect("transmitting link has a head packet");
        let prop = SimTime::from_secs_f64(l.cfg.prop_delay_s);
        let more = !l.queue.is_empty();
        self.schedule(self.now + prop, EventKind::Arrive { link, epoch, pkt });
        if more {
            self.start_tx(link);
        }
    }

    fn on_arrive(&mut self, link: usize, epoch: u64, pkt: Packet) {
        if epoch != self.links[link].epoch {
            // The hop died while the packet was on the air.
            self.count_drop(&pkt);
            return;
        }
        match self.routes[link] {
            Route::Forward(next) => self.enqueue(next, pkt),
            Route::ToReceiver => self.deliver(pkt),
            Route::ToSender => self.flow_on_ack(pkt.owner, pkt.seq),
        }
    }

    fn set_link(&mut self, link: usize, up: bool) {
        let l = &mut self.links[link];
        if l.up == up {
            return;
        }
        l.up = up;
        if up {
            if !l.queue.is_empty() && !l.busy {
                self.start_tx(link);
            }
        } else {
            l.epoch += 1;
            if l.busy {
                l.busy = false;
                let pkt = l.queue.pop_front().expect("transmitting link has a head packet");
                self.count_drop(&pkt);
            }
        }
    }

    fn count_drop(&mut self, pkt: &Packet) {
        match pkt.kind {
            PacketKind::Data => self.flows[pkt.owner].stats.data_drops += 1,
            PacketKind::Ack => self.flows[pkt.owner].stats.ack_drops += 1,
            PacketKind::Cbr => self.cbrs[pkt.owner].stats.drops += 1,
        }
    }

    // ---- flow sender ----

    fn flow_send(&mut self, f: usize) {
        let now = self.now;
        let seg = self.cfg.seg_size_bytes;
        loop {
            let flow = &mut self.flows[f];
            if flow.in_flight() >= flow.ctl.cwnd().get() as usize {
                break;
            }
            if flow.next_seq < flow.cum_ack {
                // Go-back-N never resends what is already acknowledged.
                flow.next_seq = flow.cum_ack;
            }
            let seq = flow.next_seq;
            let retx = seq < flow.next_new;
            flow.next_seq = seq + 1;
            flow.next_new = flow.next_new.max(flow.next_seq);
            flow.inflight.insert(seq, Sent { sent_at: now, retx });
            flow.stats.data_sent += 1;
            if retx {
                flow.stats.retransmits += 1;
            }
            flow.est.record_send(seg, now);
            let armed = flow.rto_armed;
            if !armed {
                self.arm_rto(f);
            }
            let pkt = Packet { kind: PacketKind::Data, owner: f, seq, size_bytes: seg };
            self.enqueue(0, pkt);
        }
    }

    fn send_retx(&mut self, f: usize, seq: u64) {
        let now = self.now;
        let seg = self.cfg.seg_size_bytes;
        let flow = &mut self.flows[f];
        flow.inflight.insert(seq, Sent { sent_at: now, retx: true });
        flow.stats.data_sent += 1;
        flow.stats.retransmits += 1;
        flow.est.record_send(seg, now);
        let pkt = Packet { kind: PacketKind::Data, owner: f, seq, size_bytes: seg };
        self.enqueue(0, pkt);
    }

    fn retransmit_oldest(&mut self, f: usize) {
        let seq = self.flows[f].cum_ack;
        self.send_retx(f, seq);
    }

    /// Queue every hole below the recovery mark that a later delivery has
    /// overtaken — on a FIFO path such segments cannot still be in flight.
    /// The head hole itself is always queued (it stalls the cumulative ACK)
    /// unless its repair is already underway.
    fn queue_lost(&mut self, f: usize) {
        let flow = &mut self.flows[f];
        let proof = flow.rcv_buf.iter().next_back().copied().unwrap_or(0);
        let upper = proof.min(flow.recover.saturating_sub(1)).max(flow.cum_ack);
        for seq in flow.cum_ack..=upper {
            if flow.delivered(seq) {
                continue;
            }
            if let Some(entry) = flow.inflight.get(&seq) {
                if entry.retx {
                    continue;
                }
                flow.inflight.remove(&seq);
            }
            flow.retx_queue.insert(seq);
        }
    }

    /// A timeout declares every outstanding segment lost; queue all the
    /// holes below the recovery mark, skipping data the receiver already
    /// buffered out of order.
    fn queue_lost_window(&mut self, f: usize) {
        let flow = &mut self.flows[f];
        for seq in flow.cum_ack + 1..flow.recover {
            if !flow.delivered(seq) {
                flow.inflight.remove(&seq);
                flow.retx_queue.insert(seq);
            }
        }
    }

    /// Resend declared losses while the window has room; they take priority
    /// over new data. A repair that is itself lost comes back via timeout.
    fn drain_retx(&mut self, f: usize) {
        loop {
            let flow = &mut self.flows[f];
            if flow.in_flight() >= flow.ctl.cwnd().get() as usize {
                break;
            }
            let Some(seq) = flow.retx_queue.pop_first() else { break };
            if seq < flow.cum_ack || flow.delivered(seq) {
                continue;
            }
            self.send_retx(f, seq);
        }
    }

    /// Drop the newest in-flight entries until the count fits the window
    /// again; their ACKs still count, they just stop occupying the window.
    fn trim_window(&mut self, f: usize) {
        let flow = &mut self.flows[f];
        while flow.in_flight() > flow.ctl.cwnd().get() as usize {
            flow.inflight.pop_last();
        }
    }

    fn arm_rto(&mut self, f: usize) {
        let flow = &mut self.flows[f];
        flow.rto_epoch += 1;
        flow.rto_armed = true;
        let at = self.now + SimTime::from_secs_f64(flow.tracker.rto_s());
        let epoch = flow.rto_epoch;
        self.schedule(at, EventKind::Rto { flow: f, epoch });
    }

    fn disarm_rto(&mut self, f: usize) {
        let flow = &mut self.flows[f];
        flow.rto_epoch += 1;
        flow.rto_armed = false;
    }

    fn flow_on_ack(&mut self, f: usize, ack_no: u64) {
        let now = self.now;
        let seg = self.cfg.seg_size_bytes;
        let flow = &mut self.flows[f];
        flow.stats.ack_arrivals += 1;
        if ack_no > flow.cum_ack {
            let newly = (ack_no - flow.cum_ack) as u32;
            // Sample the newest covered segment; retransmitted ones are
            // ambiguous and withheld.
            let sample = flow.inflight.get(&(ack_no - 1)).and_then(|s| {
                (!s.retx).then_some(RttSample { sent_at: s.sent_at, acked_at: now })
            });
            // The same ambiguity poisons the bandwidth sample: an ACK whose
            // hole segment was retransmitted is clocked by the retransmission,
            // not by delivery, so it moves the reference without sampling.
            let hole_retx = flow.inflight.get(&flow.cum_ack).is_some_and(|s| s.retx);
            flow.cum_ack = ack_no;
            while let Some(entry) = flow.inflight.first_entry() {
                if *entry.key() < ack_no {
                    entry.remove();
                } else {
                    break;
                }
            }
            if let Some(s) = sample {
                flow.tracker.record(s);
            }
            if flow.policy == RetxPolicy::GoBackN {
                // The classic reference estimates from the raw ACK rate;
                // dead air after a timeout and retransmission ambiguity go
                // straight into its filter. Withholding those samples is
                // the refinement under study, not the baseline.
                flow.est.record_ack(newly, seg, now);
                flow.bwe_gap = false;
            } else if flow.bwe_gap || hole_retx {
                flow.est.touch_ack(now);
                flow.bwe_gap = false;
            } else {
                flow.est.record_ack(newly, seg, now);
            }
            let rtt_s = sample.map(|s| s.rtt_s());
            flow.ctl.on_ack(now, newly, rtt_s, &flow.tracker, &flow.est);
            flow.acked_log.push((now, ack_no));
            self.trim_window(f);
            if self.flows[f].cum_ack >= self.flows[f].recover {
                self.flows[f].retx_queue.clear();
            } else if self.flows[f].policy == RetxPolicy::Selective {
                // Partial ACK during recovery: refresh the loss scoreboard
                // and refill the window from it before any new data.
                self.queue_lost(f);
                self.drain_retx(f);
                let flow = &mut self.flows[f];
                let head = flow.cum_ack;
                if flow.retx_queue.remove(&head) {
                    // The head hole gates the cumulative ACK: resend it even
                    // when the window is pinched shut.
                    self.retransmit_oldest(f);
                    self.trim_window(f);
                }
            }
            if self.flows[f].inflight.is_empty() {
                self.disarm_rto(f);
            } else {
                self.arm_rto(f);
            }
            self.flow_send(f);
        } else if ack_no == flow.cum_ack && !flow.inflight.is_empty() {
            if flow.policy == RetxPolicy::GoBackN {
                // To the raw-rate sampler a duplicate is still one segment
                // leaving the network.
                flow.est.record_ack(1, seg, now);
            }
            if flow.ctl.on_dup_ack(&flow.tracker, &flow.est) {
                let flow = &mut self.flows[f];
                flow.stats.fast_retransmits += 1;
                if flow.policy == RetxPolicy::Selective {
                    flow.recover = flow.next_new;
                }
                self.retransmit_oldest(f);
                if self.flows[f].policy == RetxPolicy::Selective {
                    // A burst may have punched several holes; queue the rest
                    // behind the head so the duplicate stream clocks them out.
                    self.queue_lost(f);
                    self.drain_retx(f);
                }
            } else if self.flows[f].policy == RetxPolicy::Selective
                && self.flows[f].cum_ack < self.flows[f].recover
            {
                // Each further duplicate reports one more departure from the
                // pipe; exchange it for one queued repair.
                let next = loop {
                    let flow = &mut self.flows[f];
                    match flow.retx_queue.pop_first() {
                        Some(seq) if seq < flow.cum_ack || flow.delivered(seq) => continue,
                        other => break other,
                    }
                };
                if let Some(seq) = next {
                    self.send_retx(f, seq);
                }
            }
            self.trim_window(f);
            self.flow_send(f);
        }
        // Older ACKs are stale: ignored.
    }

    fn on_rto(&mut self, f: usize, epoch: u64) {
        {
            let flow = &mut self.flows[f];
            if !flow.rto_armed || epoch != flow.rto_epoch {
                return;
            }
            flow.rto_armed = false;
            if flow.inflight.is_empty() {
                return;
            }
            flow.stats.rtos += 1;
            flow.bwe_gap = true;
            flow.ctl.on_timeout(&flow.tracker, &flow.est);
            flow.tracker.on_timeout();
        }
        match self.flows[f].policy {
            RetxPolicy::Selective => {
                let flow = &mut self.flows[f];
                flow.recover = flow.next_new;
                flow.retx_queue.clear();
                self.retransmit_oldest(f);
                self.trim_window(f);
                self.queue_lost_window(f);
            }
            RetxPolicy::GoBackN => {
                let flow = &mut self.flows[f];
                flow.inflight.clear();
                flow.next_seq = flow.cum_ack;
                self.flow_send(f);
            }
        }
        self.arm_rto(f);
    }

    // ---- flow receiver ----

    fn deliver(&mut self, pkt: Packet) {
        let now = self.now;
        match pkt.kind {
            PacketKind::Cbr => {
                self.cbrs[pkt.owner].stats.arrivals += 1;
            }
            PacketKind::Data => {
                let f = pkt.owner;
                let ack_entry = self.hops + (self.hops - 1);
                let (ack_no, ack_bytes) = {
                    let flow = &mut self.flows[f];
                    flow.stats.data_arrivals += 1;
                    if pkt.seq == flow.rcv_next {
                        flow.rcv_next += 1;
                        while flow.rcv_buf.remove(&flow.rcv_next) {
                            flow.rcv_next += 1;
                        }
                        flow.delivered_log.push((now, flow.rcv_next));
                    } else if pkt.seq > flow.rcv_next {
                        flow.rcv_buf.insert(pkt.seq);
                    }
                    flow.stats.acks_sent += 1;
                    (flow.rcv_next, self.cfg.ack_bytes)
                };
                let ack = Packet { kind: PacketKind::Ack, owner: f, seq: ack_no, size_bytes: ack_bytes };
                self.enqueue(ack_entry, ack);
            }
            PacketKind::Ack => unreachable!("ACKs route to the sender"),
        }
    }

    // ---- periodic processes ----

    fn on_cbr_emit(&mut self, c: usize, k: u64) {
        let cbr = &mut self.cbrs[c];
        cbr.stats.sent += 1;
        let pkt = Packet { kind: PacketKind::Cbr, owner: c, seq: k, size_bytes: cbr.size_bytes };
        let next = SimTime::from_micros(cbr.period.as_micros() * (k + 1));
        self.enqueue(0, pkt);
        if next <= self.cfg.duration {
            self.schedule(next, EventKind::CbrEmit { cbr: c, k: k + 1 });
        }
    }

    fn on_mobility_tick(&mut self, k: u64) {
        let t = SimTime::from_micros(self.cfg.mobility_dt.as_micros() * k);
        let model = self.mobility.as_mut().expect("tick without mobility");
        let n = model.node_count();
        let mut pos = Vec::with_capacity(n);
        for node in 0..n {
            let p = model.position_of(node, t);
            self.mobility_trace.push((t, node, p.0, p.1));
            pos.push(p);
        }
        let range = model.field().range_m;
        for hop in 0..self.hops {
            self.set_hop(hop, link_up(pos[hop], pos[hop + 1], range));
        }
        let next = SimTime::from_micros(self.cfg.mobility_dt.as_micros() * (k + 1));
        if next <= self.cfg.duration {
            self.schedule(next, EventKind::MobilityTick { k: k + 1 });
        }
    }

    fn on_sample_tick(&mut self, k: u64) {
        let t = SimTime::from_micros(self.cfg.sample_dt.as_micros() * k);
        for flow in &mut self.flows {
            let (diff, action) = flow.ctl.last_decision();
            flow.samples.push(FlowSample {
                at: t,
                cwnd: flow.ctl.cwnd(),
                ssthresh: flow.ctl.ssthresh(),
                bwe: flow.est.current_bwe(),
                diff,
                action,
            });
            debug_assert!(
                flow.in_flight() <= flow.ctl.cwnd().get() as usize,
                "window discipline violated"
            );
        }
        let next = SimTime::from_micros(self.cfg.sample_dt.as_micros() * (k + 1));
        if next <= self.cfg.duration {
            self.schedule(next, EventKind::SampleTick { k: k + 1 });
        }
    }

    // ---- audits ----

    /// Conservation and ordering audit. Every transmitted packet must be
    /// accounted for as arrived, dropped, or still inside the network, the
    /// ACK stream must be monotone, and windows must respect their bounds.
    pub fn audit(&self) -> Result<(), String> {
        let mut residual_data = vec![0u64; self.flows.len()];
        let mut residual_ack = vec![0u64; self.flows.len()];
        let mut residual_cbr = vec![0u64; self.cbrs.len()];
        let mut tally = |pkt: &Packet| match pkt.kind {
            PacketKind::Data => residual_data[pkt.owner] += 1,
            PacketKind::Ack => residual_ack[pkt.owner] += 1,
            PacketKind::Cbr => residual_cbr[pkt.owner] += 1,
        };
        for l in &self.links {
            for pkt in &l.queue {
                tally(pkt);
            }
        }
        for ev in self.queue.iter() {
            if let EventKind::Arrive { pkt, .. } = &ev.kind {
                tally(pkt);
            }
        }
        for (f, flow) in self.flows.iter().enumerate() {
            let s = flow.stats;
            let data = s.data_arrivals + s.data_drops + residual_data[f];
            if s.data_sent != data {
                return Err(format!(
                    "flow {f}: {} data sent but {} accounted for",
                    s.data_sent, data
                ));
            }
            let ack = s.ack_arrivals + s.ack_drops + residual_ack[f];
            if s.acks_sent != ack {
                return Err(format!(
                    "flow {f}: {} acks sent but {} accounted for",
                    s.acks_sent, ack
                ));
            }
            if flow.rcv_next > s.data_sent {
                return Err(format!("flow {f}: delivered more than was ever sent"));
            }
            if flow.acked_log.windows(2).any(|w| w[1].1 < w[0].1 || w[1].0 < w[0].0) {
                return Err(format!("flow {f}: cumulative ACK log not monotone"));
            }
            if flow.delivered_log.windows(2).any(|w| w[1].1 < w[0].1 || w[1].0 < w[0].0) {
                return Err(format!("flow {f}: delivery log not monotone"));
            }
            if flow.in_flight() > flow.ctl.cwnd().get() as usize {
                return Err(format!("flow {f}: in-flight exceeds the window"));
            }
            if flow.ctl.cwnd().get() < 1 || flow.ctl.ssthresh().get() < 2 {
                return Err(format!("flow {f}: window floors violated"));
            }
        }
        for (c, cbr) in self.cbrs.iter().enumerate() {
            let s = cbr.stats;
            if s.sent != s.arrivals + s.drops + residual_cbr[c] {
                return Err(format!("cbr {c}: emissions not conserved"));
            }
        }
        if let Some(depth) = self.links.iter().map(|l| l.max_queue).max() {
            let cap = self.links.iter().map(|l| l.cfg.queue_cap).max().unwrap();
            if depth > cap {
                return Err(format!("queue depth {depth} exceeded the cap {cap}"));
            }
        }
        Ok(())
    }
}
