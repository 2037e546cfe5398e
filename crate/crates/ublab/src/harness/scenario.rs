//! Named experiment setups and the grid runner.
//!
//! Every scenario shares the same desk-scale stage: a 3-hop relay chain
//! whose two endpoints are parked 200 m apart in a 300x300 m field, two
//! wandering relays in between, and light constant-rate cross-traffic.
//! The congestion scenarios (efficiency, cwnd) add a competing flow of
//! the same controller kind; the goodput and bandwidth scenarios measure
//! a single flow so speed and retransmission effects are not confounded
//! by who wins the queue. The scenarios differ only in what moves and
//! which metric the run is read for.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::controller::ControllerKind;
use crate::harness::config::RunConfig;
use crate::harness::metrics::MetricsReport;
use crate::mobility::{distance, FieldSpec, MobilityModel, NodeInit, Point};
use crate::netsim::{ChainSpec, LinkConfig, MobilityDrive, SimConfig, Simulator};
use crate::rng::Rng;
use crate::units::SimTime;
use crate::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ScenarioKind {
    /// Acknowledged megabits over time under mobility-driven outages.
    Efficiency,
    /// Goodput with all nodes parked: congestion only, no outages.
    GoodputStatic,
    /// Goodput with wandering relays; sweep `field.v_max` for speed curves.
    GoodputMobile,
    /// Window-trace stability under congestion plus outages.
    Cwnd,
    /// Bits spent per delivered bit in the lossy mobile setting.
    Bandwidth,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Efficiency,
        ScenarioKind::GoodputStatic,
        ScenarioKind::GoodputMobile,
        ScenarioKind::Cwnd,
        ScenarioKind::Bandwidth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Efficiency => "efficiency",
            ScenarioKind::GoodputStatic => "goodput_static",
            ScenarioKind::GoodputMobile => "goodput_mobile",
            ScenarioKind::Cwnd => "cwnd",
            ScenarioKind::Bandwidth => "bandwidth",
        }
    }

    pub fn parse(name: &str) -> Result<ScenarioKind> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scenario '{name}' (expected one of efficiency, goodput_static, \
                     goodput_mobile, cwnd, bandwidth)"
                ))
            })
    }

    /// Scenario-specific defaults; config files and CLI flags layer on top.
    ///
    /// Mobile presets walk the relays at a constant speed with short
    /// randomized pauses over a 300 m square: several brief path outages
    /// per run, in every run. The congestion and goodput presets carry
    /// 50 ms per-hop latency so equilibrium windows are tens of segments
    /// wide — at that scale a bandwidth-sized window resize lands within a
    /// ±20% stability band, while a fixed one-segment-per-round climb back
    /// from a collapse is visibly slow. The bandwidth preset keeps the
    /// default 10 ms hops and brisker walkers instead: outages come often
    /// but every controller refills the short pipe quickly, so what is
    /// spent per delivered bit is compared at near-equal goodput.
    pub fn preset(self) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.field = FieldSpec {
            width_m: 300.0,
            height_m: 300.0,
            range_m: 250.0,
            v_min_mps: 17.5,
            v_max_mps: 17.5,
            pause_s: 1.0,
            random_pause: true,
        };
        cfg.link.prop_delay_s = 0.05;
        match self {
            ScenarioKind::GoodputStatic => {
                cfg.field.v_min_mps = 0.0;
                cfg.field.v_max_mps = 0.0;
                cfg.competing = false;
            }
            ScenarioKind::GoodputMobile => {
                cfg.competing = false;
            }
            ScenarioKind::Bandwidth => {
                cfg.competing = false;
                cfg.link.prop_delay_s = 0.01;
                cfg.field.v_min_mps = 25.0;
                cfg.field.v_max_mps = 25.0;
            }
            ScenarioKind::Efficiency | ScenarioKind::Cwnd => {}
        }
        cfg
    }
}

/// One grid entry: a scenario run for one controller and one seed.
#[derive(Clone, Copy, Debug)]
pub struct Cell {
    pub scenario: ScenarioKind,
    pub controller: ControllerKind,
    pub seed: u64,
}

/// Fixed chain endpoints: parked 50 m in from the field's left and right
/// edges at mid-height, 300 m apart on the default stage.
fn anchors(field: &FieldSpec) -> (Point, Point) {
    let y = field.height_m / 2.0;
    ((50.0_f64.min(field.width_m / 4.0), y), (field.width_m - 50.0_f64.min(field.width_m / 4.0), y))
}

fn chain_connected(field: &FieldSpec, nodes: &[Point]) -> bool {
    nodes.windows(2).all(|w| distance(w[0], w[1]) <= field.range_m)
}

/// Relay spots drawn uniformly until the whole chain starts connected, so
/// every run begins with a live path and outages are mobility's doing.
/// Falls back to even spacing on the anchor line if sampling keeps missing.
fn place_relays(field: &FieldSpec, from: Point, to: Point, relays: usize, rng: &mut Rng) -> Vec<Point> {
    for _ in 0..1000 {
        let pts: Vec<Point> = (0..relays)
            .map(|_| (rng.uniform(0.0, field.width_m), rng.uniform(0.0, field.height_m)))
            .collect();
        let mut nodes = vec![from];
        nodes.extend(&pts);
        nodes.push(to);
        if chain_connected(field, &nodes) {
            return pts;
        }
    }
    (1..=relays)
        .map(|i| {
            let t = i as f64 / (relays + 1) as f64;
            (from.0 + (to.0 - from.0) * t, from.1 + (to.1 - from.1) * t)
        })
        .collect()
}

/// Assemble the simulator for one cell. Draw order from the seed is fixed:
/// relay placement first, then one forked walker stream per relay.
pub fn build_sim(cell: Cell, cfg: &RunConfig) -> Simulator {
    let mut rng = Rng::new(cfg.seed);
    let field = cfg.field;
    let (a0, a1) = anchors(&field);
    let relays = cfg.hops - 1;
    let spots = place_relays(&field, a0, a1, relays, &mut rng);
    let mut inits = Vec::with_capacity(cfg.hops + 1);
    inits.push(NodeInit::Parked(a0));
    for spot in spots {
        if field.is_static() {
            inits.push(NodeInit::Parked(spot));
        } else {
            inits.push(NodeInit::Waypoint(spot, rng.fork()));
        }
    }
    inits.push(NodeInit::Parked(a1));
    let model = MobilityModel::with_nodes(field, inits);

    let sim_cfg = SimConfig {
        seg_size_bytes: cfg.controller.seg_size,
        header_bytes: cfg.header_bytes,
        ack_bytes: cfg.header_bytes,
        duration: SimTime::from_secs_f64(cfg.duration_s),
        ..SimConfig::default()
    };
    let chain = ChainSpec {
        hops: cfg.hops,
        fwd: cfg.link.clone(),
        rev: LinkConfig { bandwidth_bps: cfg.ack_bandwidth_bps, ..cfg.link.clone() },
    };
    let mut flows = vec![(cell.controller, cfg.controller)];
    if cfg.competing {
        flows.push((cell.controller, cfg.controller));
    }
    let cbr = (cfg.cbr_rate_pps > 0.0).then_some(cfg.cbr_rate_pps);
    Simulator::new(sim_cfg, chain, flows, cbr, Some(MobilityDrive { model }))
}

/// Run one cell to completion and snapshot its metrics.
pub fn run_cell(cell: Cell, base: &RunConfig) -> MetricsReport {
    let mut cfg = base.clone();
    cfg.seed = cell.seed;
    let mut sim = build_sim(cell, &cfg);
    sim.run();
    sim.audit().expect("simulation invariants");
    MetricsReport::from_sim(&sim, cell.scenario.name(), cell.seed, cfg.link.bandwidth_bps)
}

/// Run every cell, fanning out across the machine; the result order matches
/// the input order regardless of which worker finished first.
pub fn run_grid(cells: &[Cell], base: &RunConfig) -> Vec<MetricsReport> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let workers = workers.min(cells.len()).max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<MetricsReport>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let report = run_cell(cells[i], base);
                slots.lock().expect("grid worker panicked")[i] = Some(report);
            });
        }
    });
    slots
        .into_inner()
        .expect("grid worker panicked")
        .into_iter()
        .map(|slot| slot.expect("every cell ran"))
        .collect()
}
