//! Tick clocks. Timestamps are stored as wrapping 32-bit tick counts, like
//! kernel jiffies.

use std::sync::atomic::{AtomicU32, Ordering};
use std::time::Instant;

/// Default tick rate, in ticks per second.
pub const DEFAULT_HZ: u32 = 300;

/// Length of one unit of time in the traffic model, in seconds.
pub const UNIT_TIME_S: f64 = 0.01;

/// Default number of ticks per unit time (300 Hz over 10 ms).
pub const DEFAULT_TICKS_PER_UNIT: u32 = 3;

pub trait TickClock: Send + Sync {
    /// Current tick count. Successive reads never go backwards modulo 2^32.
    fn now(&self) -> u32;

    /// Ticks per second.
    fn hz(&self) -> u32;

    fn ticks_per_unit_time(&self) -> u32 {
        ((f64::from(self.hz()) * UNIT_TIME_S).round() as u32).max(1)
    }

    /// Converts a duration in seconds to whole ticks, rounding up.
    fn seconds_to_ticks(&self, seconds: f64) -> u32 {
        (seconds * f64::from(self.hz())).ceil() as u32
    }
}

/// Ticks elapsed from `then` to `now`, treating the pair as wrapping 32-bit
/// timestamps. A `then` that appears to lie in the future (a concurrent writer
/// stored a newer stamp) counts as zero elapsed ticks.
#[inline]
pub fn ticks_since(now: u32, then: u32) -> u32 {
    let d = now.wrapping_sub(then) as i32;
    d.max(0) as u32
}

/// Wall clock quantized to ticks since construction.
#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
    hz: u32,
}

impl SystemClock {
    pub fn new(hz: u32) -> Self {
        assert!(hz > 0, "tick rate must be positive");
        SystemClock {
            origin: Instant::now(),
            hz,
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        SystemClock::new(DEFAULT_HZ)
    }
}

impl TickClock for SystemClock {
    #[inline]
    fn now(&self) -> u32 {
        let nanos = self.origin.elapsed().as_nanos();
        (nanos * u128::from(self.hz) / 1_000_000_000) as u32
    }

    fn hz(&self) -> u32 {
        self.hz
    }
}

/// A manually advanced clock for deterministic tests and simulations.
#[derive(Debug)]
pub struct VirtualClock {
    ticks: AtomicU32,
    hz: u32,
}

impl VirtualClock {
    pub fn new(start: u32) -> Self {
        VirtualClock::with_hz(start, DEFAULT_HZ)
    }

    pub fn with_hz(start: u32, hz: u32) -> Self {
        assert!(hz > 0, "tick rate must be positive");
        VirtualClock {
            ticks: AtomicU32::new(start),
            hz,
        }
    }

    pub fn advance(&self, ticks: u32) {
        self.ticks.fetch_add(ticks, Ordering::SeqCst);
    }

    pub fn advance_seconds(&self, seconds: f64) {
        self.advance(self.seconds_to_ticks(seconds));
    }
}

impl TickClock for VirtualClock {
    fn now(&self) -> u32 {
        self.ticks.load(Ordering::SeqCst)
    }

    fn hz(&self) -> u32 {
        self.hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elapsed_is_wrap_aware() {
        assert_eq!(ticks_since(5, 3), 2);
        assert_eq!(ticks_since(2, u32::MAX - 1), 4);
        // stamp written by a racing requester slightly ahead of us
        assert_eq!(ticks_since(10, 12), 0);
    }

    #[test]
    fn virtual_clock_is_explicit() {
        let c = VirtualClock::new(u32::MAX);
        assert_eq!(c.now(), u32::MAX);
        c.advance(2);
        assert_eq!(c.now(), 1);
        assert_eq!(c.ticks_per_unit_time(), 3);
        c.advance_seconds(0.5);
        assert_eq!(c.now(), 151);
    }

    #[test]
    fn system_clock_is_monotone() {
        let c = SystemClock::new(1_000_000);
        let mut last = c.now();
        for _ in 0..1000 {
            let t = c.now();
            assert!(ticks_since(t, last) < u32::MAX / 2);
            assert!(t >= last);
            last = t;
        }
    }
}
