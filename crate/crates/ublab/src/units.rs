//! Scalar quantities with explicit units.
//!
//! Times are integer microseconds, rates are bits per second, windows are
//! whole segments. Mixing them requires an explicit conversion, which keeps
//! seconds/microseconds and bits/bytes mistakes out of the arithmetic.

use std::fmt;
use std::ops::{Add, AddAssign};

pub const MICROS_PER_SEC: u64 = 1_000_000;

/// Bits on the wire for a packet of `bytes` length.
pub fn bits_of(bytes: u32) -> u64 {
    bytes as u64 * 8
}

/// Simulation clock instant: integer microseconds since run start.
///
/// Integer ticks make event ordering exact; the clock never goes backwards.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Debug)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_micros(us: u64) -> SimTime {
        SimTime(us)
    }

    /// Converts non-negative seconds, rounding to the nearest microsecond.
    pub fn from_secs_f64(secs: f64) -> SimTime {
        assert!(
            secs.is_finite() && secs >= 0.0,
            "time must be finite and non-negative, got {secs}"
        );
        SimTime((secs * MICROS_PER_SEC as f64).round() as u64)
    }

    pub const fn as_micros(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MICROS_PER_SEC as f64
    }

    /// Seconds elapsed since `earlier`. Panics if `earlier` is in the future:
    /// intervals are always measured forward.
    pub fn secs_since(self, earlier: SimTime) -> f64 {
        assert!(
            earlier.0 <= self.0,
            "interval end {} precedes start {}",
            self.0,
            earlier.0
        );
        (self.0 - earlier.0) as f64 / MICROS_PER_SEC as f64
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}us", self.0)
    }
}

/// Transmission or estimator rate in bits per second. Non-negative.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default, Debug)]
pub struct Rate(f64);

impl Rate {
    pub const ZERO: Rate = Rate(0.0);

    pub fn bps(v: f64) -> Rate {
        assert!(v.is_finite() && v >= 0.0, "rate must be finite and >= 0, got {v}");
        Rate(v)
    }

    pub fn as_bps(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}bps", self.0)
    }
}

/// Window size in whole segments. Adjustments are +-1 with explicit floors;
/// the type never goes negative.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Segments(u32);

impl Segments {
    pub const fn new(n: u32) -> Segments {
        Segments(n)
    }

    pub const fn get(self) -> u32 {
        self.0
    }

    pub fn inc(self) -> Segments {
        Segments(self.0.saturating_add(1))
    }

    /// Decrease by one but never below `floor`.
    pub fn dec_floor(self, floor: u32) -> Segments {
        Segments(self.0.saturating_sub(1).max(floor))
    }

    pub fn max_of(self, floor: u32) -> Segments {
        Segments(self.0.max(floor))
    }

    pub fn min_of(self, cap: Segments) -> Segments {
        Segments(self.0.min(cap.0))
    }
}

impl fmt::Display for Segments {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One round-trip measurement, kept as the two timestamps it derives from.
#[derive(Clone, Copy, Debug)]
pub struct RttSample {
    pub sent_at: SimTime,
    pub acked_at: SimTime,
}

impl RttSample {
    pub fn rtt_s(&self) -> f64 {
        self.acked_at.secs_since(self.sent_at)
    }
}
