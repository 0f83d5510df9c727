//! Time abstraction and event scheduling.
//!
//! Experiments run against one of two clocks:
//!
//! * **Virtual** — a discrete-event clock that jumps from event to event.
//!   Execution contexts are cooperatively scheduled: exactly one runs at a
//!   time, between [`Scheduler::advance_to_next`] calls, which makes runs
//!   bit-deterministic and far faster than real time.
//! * **Real time** — the same event queue paced against the wall clock;
//!   an event is never dispatched earlier than its `fire_at` (late
//!   dispatch is permitted and measurable).
//!
//! Simultaneous events fire in scheduling order (sequence-number
//! tie-break), which removes platform-dependent nondeterminism.

pub use core::time::Duration;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Nanoseconds since experiment start. Immutable, totally ordered, and
/// safe to share across execution contexts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Instant {
    nanos: u64,
}

impl Instant {
    pub const ZERO: Instant = Instant { nanos: 0 };

    pub const fn from_nanos(nanos: u64) -> Self {
        Instant { nanos }
    }

    pub const fn from_micros(us: u64) -> Self {
        Instant { nanos: us * 1_000 }
    }

    pub const fn from_millis(ms: u64) -> Self {
        Instant { nanos: ms * 1_000_000 }
    }

    pub const fn as_nanos(self) -> u64 {
        self.nanos
    }

    pub fn as_secs_f64(self) -> f64 {
        self.nanos as f64 / 1e9
    }

    /// Duration since an earlier instant; saturates to zero rather than
    /// underflowing so age computations stay total.
    pub fn since(self, earlier: Instant) -> Duration {
        Duration::from_nanos(self.nanos.saturating_sub(earlier.nanos))
    }

    /// Round up to the next multiple of `period` (an exact multiple maps
    /// to itself).
    pub fn ceil_to(self, period: Duration) -> Instant {
        let p = period.as_nanos() as u64;
        assert!(p > 0);
        let rem = self.nanos % p;
        if rem == 0 {
            self
        } else {
            Instant::from_nanos(self.nanos + (p - rem))
        }
    }
}

impl std::ops::Add<Duration> for Instant {
    type Output = Instant;
    fn add(self, rhs: Duration) -> Instant {
        Instant::from_nanos(self.nanos + rhs.as_nanos() as u64)
    }
}

impl std::ops::Sub<Instant> for Instant {
    type Output = Duration;
    fn sub(self, rhs: Instant) -> Duration {
        self.since(rhs)
    }
}

impl std::fmt::Display for Instant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6}s", self.as_secs_f64())
    }
}

/// Identifies the execution context an event wakes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ContextId(pub u32);

/// A pending wake-up. `(fire_at, seq)` pairs are unique; `seq` strictly
/// increases in scheduling order and breaks ties between simultaneous
/// events.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledEvent {
    pub fire_at: Instant,
    pub seq: u64,
    pub context_id: ContextId,
}

impl Ord for ScheduledEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.fire_at, self.seq).cmp(&(other.fire_at, other.seq))
    }
}

impl PartialOrd for ScheduledEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SchedulerError {
    #[error("event scheduled in the past: fire_at {fire_at} < now {now}")]
    ScheduledInPast { fire_at: Instant, now: Instant },
}

/// Discrete-event scheduler owned by a single coordinator.
#[derive(Debug, Default)]
pub struct Scheduler {
    now: Instant,
    next_seq: u64,
    queue: BinaryHeap<Reverse<ScheduledEvent>>,
}

impl Scheduler {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current instant: the fire time of the most recently dispatched
    /// event in virtual mode. Only moves on [`advance_to_next`].
    ///
    /// [`advance_to_next`]: Scheduler::advance_to_next
    pub fn now(&self) -> Instant {
        self.now
    }

    /// Enqueue a wake-up for `context_id` at `fire_at`.
    pub fn schedule_at(
        &mut self,
        fire_at: Instant,
        context_id: ContextId,
    ) -> Result<(), SchedulerError> {
        if fire_at < self.now {
            return Err(SchedulerError::ScheduledInPast { fire_at, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Reverse(ScheduledEvent { fire_at, seq, context_id }));
        Ok(())
    }

    pub fn schedule_in(
        &mut self,
        delay: Duration,
        context_id: ContextId,
    ) -> Result<(), SchedulerError> {
        self.schedule_at(self.now + delay, context_id)
    }

    /// Jump the clock to the earliest pending event and return it; the
    /// caller then runs that event's context to its next blocking point
    /// before advancing again. `None` signals completion (empty queue).
    pub fn advance_to_next(&mut self) -> Option<ScheduledEvent> {
        let Reverse(ev) = self.queue.pop()?;
        debug_assert!(ev.fire_at >= self.now);
        self.now = ev.fire_at;
        Some(ev)
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }
}

/// Clock mode, fixed for the lifetime of an experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    RealTime,
    Virtual,
}

/// Wall-clock pacer for real-time mode. Dispatch never happens earlier
/// than an event's `fire_at`; lateness is whatever the OS sleep gives us.
#[derive(Debug)]
pub struct RealTimePacer {
    origin: std::time::Instant,
}

impl RealTimePacer {
    pub fn start() -> Self {
        Self { origin: std::time::Instant::now() }
    }

    pub fn now(&self) -> Instant {
        Instant::from_nanos(self.origin.elapsed().as_nanos() as u64)
    }

    /// Sleep until the wall clock reaches `t` (no-op if already past).
    pub fn wait_until(&self, t: Instant) {
        let now = self.now();
        if t > now {
            std::thread::sleep(t - now);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MS8: Duration = Duration::from_millis(8);

    #[test]
    fn fresh_virtual_clock_reads_zero() {
        let sched = Scheduler::new();
        assert_eq!(sched.now(), Instant::ZERO);
        assert_eq!(sched.now().as_nanos(), 0);
    }

    #[test]
    fn advance_past_event_at_8ms_reads_8_million_nanos() {
        let mut sched = Scheduler::new();
        sched.schedule_at(Instant::from_millis(8), ContextId(0)).unwrap();
        let ev = sched.advance_to_next().unwrap();
        assert_eq!(ev.fire_at.as_nanos(), 8_000_000);
        assert_eq!(sched.now().as_nanos(), 8_000_000);
    }

    #[test]
    fn now_is_stable_without_advance() {
        let mut sched = Scheduler::new();
        sched.schedule_at(Instant::from_millis(1), ContextId(0)).unwrap();
        assert_eq!(sched.now(), sched.now());
    }

    #[test]
    fn schedule_in_past_is_rejected() {
        let mut sched = Scheduler::new();
        sched.schedule_at(Instant::from_millis(8), ContextId(0)).unwrap();
        sched.advance_to_next().unwrap();
        let err = sched.schedule_at(Instant::from_millis(4), ContextId(1));
        assert!(matches!(err, Err(SchedulerError::ScheduledInPast { .. })));
    }

    #[test]
    fn same_instant_fires_in_scheduling_order() {
        let mut sched = Scheduler::new();
        sched.schedule_at(Instant::from_millis(8), ContextId(5)).unwrap();
        sched.schedule_at(Instant::from_millis(8), ContextId(6)).unwrap();
        assert_eq!(sched.advance_to_next().unwrap().context_id, ContextId(5));
        assert_eq!(sched.advance_to_next().unwrap().context_id, ContextId(6));
    }

    #[test]
    fn earliest_event_fires_first() {
        let mut sched = Scheduler::new();
        sched.schedule_at(Instant::from_millis(40), ContextId(1)).unwrap();
        sched.schedule_at(Instant::from_millis(8), ContextId(2)).unwrap();
        let ev = sched.advance_to_next().unwrap();
        assert_eq!(ev.fire_at, Instant::from_millis(8));
        assert_eq!(ev.context_id, ContextId(2));
    }

    #[test]
    fn empty_queue_signals_completion() {
        let mut sched = Scheduler::new();
        assert!(sched.advance_to_next().is_none());
    }

    #[test]
    fn schedule_at_now_fires_before_later_events() {
        let mut sched = Scheduler::new();
        sched.schedule_at(Instant::from_millis(2), ContextId(9)).unwrap();
        sched.advance_to_next().unwrap();
        sched.schedule_at(sched.now(), ContextId(1)).unwrap();
        sched.schedule_at(sched.now() + MS8, ContextId(2)).unwrap();
        assert_eq!(sched.advance_to_next().unwrap().context_id, ContextId(1));
    }

    #[test]
    fn wakeup_order_is_reproducible() {
        // Two identical scheduling sequences must produce byte-identical
        // wake-up logs.
        fn run() -> Vec<(u64, u32)> {
            let mut sched = Scheduler::new();
            for i in 0..200u64 {
                let t = Instant::from_nanos((i * 7919) % 1000 * 1_000);
                // Interleave duplicate instants to exercise tie-breaks.
                sched.schedule_at(t, ContextId((i % 5) as u32)).unwrap();
                sched.schedule_at(t, ContextId(((i + 1) % 5) as u32)).unwrap();
            }
            let mut log = Vec::new();
            while let Some(ev) = sched.advance_to_next() {
                log.push((ev.fire_at.as_nanos(), ev.context_id.0));
            }
            log
        }
        assert_eq!(run(), run());
    }

    #[test]
    fn virtual_time_never_decreases() {
        let mut sched = Scheduler::new();
        for i in (0..50u64).rev() {
            sched.schedule_at(Instant::from_millis(i * 3), ContextId(0)).unwrap();
        }
        let mut prev = Instant::ZERO;
        while let Some(_) = sched.advance_to_next() {
            assert!(sched.now() >= prev);
            prev = sched.now();
        }
    }

    #[test]
    fn real_time_pacer_never_fires_early() {
        let pacer = RealTimePacer::start();
        let mut sched = Scheduler::new();
        for i in 1..=5u64 {
            sched.schedule_at(Instant::from_millis(i * 4), ContextId(0)).unwrap();
        }
        while let Some(ev) = sched.advance_to_next() {
            pacer.wait_until(ev.fire_at);
            assert!(pacer.now() >= ev.fire_at, "dispatched early");
        }
    }

    #[test]
    fn ceil_to_rounds_up_to_period() {
        let p = Duration::from_millis(8);
        assert_eq!(Instant::from_millis(16).ceil_to(p), Instant::from_millis(16));
        assert_eq!(Instant::from_nanos(16_000_001).ceil_to(p), Instant::from_millis(24));
    }
}
