//! Random Waypoint motion and radio-range link geometry.
//!
//! Each mobile node repeats: pause, pick a uniform destination in the field,
//! travel there in a straight line at a uniformly drawn speed, pause again.
//! Two nodes can talk while their distance is at most the radio range
//! (boundary inclusive). Everything is driven by per-node generators, so one
//! seed fixes every trajectory.

use crate::rng::Rng;
use crate::units::SimTime;

pub type Point = (f64, f64);

/// Nodes whose speed interval collapses below this floor are parked;
/// the floor also keeps drawn speeds away from zero (a zero speed would
/// make travel time infinite).
pub const SPEED_FLOOR_MPS: f64 = 0.1;

/// Field geometry and motion-law parameters.
#[derive(Clone, Copy, Debug)]
pub struct FieldSpec {
    pub width_m: f64,
    pub height_m: f64,
    /// Radio range; a hop is up while its endpoint distance is <= this.
    pub range_m: f64,
    pub v_min_mps: f64,
    pub v_max_mps: f64,
    /// Waypoint pause. Constant by default.
    pub pause_s: f64,
    /// Draw each pause uniformly from `[0, 2*pause_s)` instead (same mean).
    pub random_pause: bool,
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec {
            width_m: 1000.0,
            height_m: 1000.0,
            range_m: 250.0,
            v_min_mps: 0.0,
            v_max_mps: 35.0,
            pause_s: 5.0,
            random_pause: false,
        }
    }
}

impl FieldSpec {
    /// True when the speed interval is empty and nodes cannot move.
    pub fn is_static(&self) -> bool {
        self.v_max_mps <= SPEED_FLOOR_MPS
    }
}

/// One travel segment: depart `from` at `depart`, arrive at `to` at
/// `arrive`, then sit still until `pause_until`.
#[derive(Clone, Copy, Debug)]
pub struct Leg {
    pub from: Point,
    pub to: Point,
    pub speed_mps: f64,
    pub depart: SimTime,
    pub arrive: SimTime,
    pub pause_until: SimTime,
}

pub fn distance(a: Point, b: Point) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Boundary inclusive: exactly at range is still connected.
pub fn link_up(a: Point, b: Point, range_m: f64) -> bool {
    distance(a, b) <= range_m
}

fn draw_pause(field: &FieldSpec, rng: &mut Rng) -> f64 {
    if field.random_pause {
        rng.uniform(0.0, 2.0 * field.pause_s)
    } else {
        field.pause_s
    }
}

/// Draw the next travel segment departing `from` at `now`.
pub fn next_leg(from: Point, now: SimTime, field: &FieldSpec, rng: &mut Rng) -> Leg {
    let to = (rng.uniform(0.0, field.width_m), rng.uniform(0.0, field.height_m));
    let lo = field.v_min_mps.max(SPEED_FLOOR_MPS);
    let speed = rng.uniform(lo, field.v_max_mps.max(lo));
    let travel_s = distance(from, to) / speed;
    let arrive = now + SimTime::from_secs_f64(travel_s);
    let pause_until = arrive + SimTime::from_secs_f64(draw_pause(field, rng));
    Leg { from, to, speed_mps: speed, depart: now, arrive, pause_until }
}

/// Linear interpolation along the leg; clamps to `to` after arrival
/// (the node pauses there). Queries before departure are a logic error.
pub fn position_at(leg: &Leg, t: SimTime) -> Point {
    assert!(t >= leg.depart, "position query at {t} precedes departure at {}", leg.depart);
    if t >= leg.arrive {
        return leg.to;
    }
    let frac = t.secs_since(leg.depart) / leg.arrive.secs_since(leg.depart);
    (
        leg.from.0 + frac * (leg.to.0 - leg.from.0),
        leg.from.1 + frac * (leg.to.1 - leg.from.1),
    )
}

const FOREVER: SimTime = SimTime::from_micros(u64::MAX);

fn parked_leg(at: Point, since: SimTime) -> Leg {
    Leg {
        from: at,
        to: at,
        speed_mps: SPEED_FLOOR_MPS,
        depart: since,
        arrive: since,
        pause_until: FOREVER,
    }
}

#[derive(Clone, Debug)]
enum Motion {
    Parked,
    Waypoint(Rng),
    /// Fixed itinerary; the node parks at the end of the last leg.
    Scripted(Vec<Leg>, usize),
}

/// How a node is introduced into the model.
pub enum NodeInit {
    Parked(Point),
    /// Start at the point, pause, then roam; the generator drives every draw.
    Waypoint(Point, Rng),
    /// Follow the given legs (first must depart at time zero), then park.
    Scripted(Vec<Leg>),
}

#[derive(Clone, Debug)]
struct NodeMotion {
    leg: Leg,
    motion: Motion,
}

impl NodeMotion {
    fn new(init: NodeInit, field: &FieldSpec) -> NodeMotion {
        match init {
            NodeInit::Parked(p) => {
                NodeMotion { leg: parked_leg(p, SimTime::ZERO), motion: Motion::Parked }
            }
            NodeInit::Waypoint(p, mut rng) => {
                // The itinerary starts with a pause at the spawn point.
                let pause = SimTime::from_secs_f64(draw_pause(field, &mut rng));
                let leg = Leg { pause_until: pause, ..parked_leg(p, SimTime::ZERO) };
                NodeMotion { leg, motion: Motion::Waypoint(rng) }
            }
            NodeInit::Scripted(legs) => {
                assert!(!legs.is_empty(), "scripted node needs at least one leg");
                assert_eq!(legs[0].depart, SimTime::ZERO, "first scripted leg departs at zero");
                let leg = legs[0];
                NodeMotion { leg, motion: Motion::Scripted(legs, 1) }
            }
        }
    }

    /// Position at `t`. Time must not go backwards across calls: legs are
    /// consumed as the clock advances.
    fn position(&mut self, t: SimTime, field: &FieldSpec) -> Point {
        while self.leg.pause_until < t {
            let at = self.leg.pause_until;
            let from = self.leg.to;
            self.leg = match &mut self.motion {
                Motion::Parked => break,
                Motion::Waypoint(rng) => next_leg(from, at, field, rng),
                Motion::Scripted(legs, next) => {
                    if *next < legs.len() {
                        *next += 1;
                        legs[*next - 1]
                    } else {
                        parked_leg(from, at)
                    }
                }
            };
        }
        position_at(&self.leg, t)
    }
}

/// All node trajectories of one run.
#[derive(Clone, Debug)]
pub struct MobilityModel {
    field: FieldSpec,
    nodes: Vec<NodeMotion>,
}

impl MobilityModel {
    pub fn with_nodes(field: FieldSpec, inits: Vec<NodeInit>) -> MobilityModel {
        let nodes = inits.into_iter().map(|i| NodeMotion::new(i, &field)).collect();
        MobilityModel { field, nodes }
    }

    /// Uniform initial placement; one forked generator per node. A static
    /// field (empty speed interval) parks every node where it spawned.
    pub fn uniform(field: FieldSpec, n: usize, master: &mut Rng) -> MobilityModel {
        let inits = (0..n)
            .map(|_| {
                let mut rng = master.fork();
                let p = (rng.uniform(0.0, field.width_m), rng.uniform(0.0, field.height_m));
                if field.is_static() {
                    NodeInit::Parked(p)
                } else {
                    NodeInit::Waypoint(p, rng)
                }
            })
            .collect();
        MobilityModel::with_nodes(field, inits)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Node position at `t`; `t` must be non-decreasing per node.
    pub fn position_of(&mut self, node: usize, t: SimTime) -> Point {
        let field = self.field.clone();
        self.nodes[node].position(t, &field)
    }

    /// Down intervals of the relay path `path` (consecutive entries are
    /// hops), sampled every `dt` up to `horizon`: the path is down whenever
    /// any hop's distance exceeds the range. Adjacent down samples merge;
    /// an interval still open at the horizon closes there. Works on a copy,
    /// so the model itself is not advanced.
    pub fn outage_schedule(
        &self,
        path: &[usize],
        horizon: SimTime,
        dt: SimTime,
    ) -> Vec<(SimTime, SimTime)> {
        assert!(path.len() >= 2, "a path needs at least two nodes");
        assert!(dt > SimTime::ZERO, "sampling step must be positive");
        let mut probe = self.clone();
        let mut out = Vec::new();
        let mut down_since: Option<SimTime> = None;
        let steps = horizon.as_micros() / dt.as_micros();
        for k in 0..=steps {
            let t = SimTime::from_micros(k * dt.as_micros());
            let pos: Vec<Point> = path.iter().map(|&n| probe.position_of(n, t)).collect();
            let down = pos.windows(2).any(|w| !link_up(w[0], w[1], probe.field.range_m));
            match (down, down_since) {
                (true, None) => down_since = Some(t),
                (false, Some(s)) => {
                    out.push((s, t));
                    down_since = None;
                }
                _ => {}
            }
        }
        if let Some(s) = down_since {
            out.push((s, horizon));
        }
        out
    }
}
