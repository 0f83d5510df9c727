//! Transmission-medium models and the packet/command codecs.
//!
//! A [`Channel`] models an ordered (TCP-like) byte stream between exactly
//! one sender and one receiver. Delivery times come from a stack of delay
//! stages so that artificial delay injectors compose in series with the
//! medium. Three media are modeled:
//!
//! * wired — inter-arrival gaps drawn from a truncated normal around the
//!   8 ms stream period, every gap inside `[7.8, 8.6]` ms;
//! * wireless — per-message lognormal latency with ordered delivery, so
//!   bursts (microsecond inter-arrivals) and long stalls both occur;
//! * exponential injector — memoryless per-message delay with a
//!   configurable mean.

pub mod wire;

pub use wire::{decode_status, encode_command, encode_status, parse_command, DecodeError};

use std::collections::VecDeque;

use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use thiserror::Error;

use crate::timebase::{Duration, Instant};

const MICROSECOND: Duration = Duration::from_micros(1);

/// Latency floor for the wired medium; keeps the inter-arrival random
/// walk causal without deforming the gap envelope.
const WIRED_MIN_LATENCY: Duration = Duration::from_micros(100);

/// Mean-reversion factor anchoring wired latency to its nominal value so
/// it cannot drift without bound over million-packet runs.
const WIRED_ANCHOR: f64 = 0.25;

/// Distribution of transmission delay (or inter-arrival gaps, for the
/// wired medium) applied by one channel stage.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum DelayModel {
    NoDelay,
    /// Gap-based model of a steady stream: consecutive deliveries are
    /// separated by truncated-normal gaps.
    WiredInterArrival {
        mean_ms: f64,
        sigma_ms: f64,
        lo_ms: f64,
        hi_ms: f64,
    },
    /// Per-message latency, lognormal with a hard cap.
    WirelessLognormal {
        median_ms: f64,
        log_sigma: f64,
        cap_ms: f64,
    },
    /// Per-message exponential latency.
    ExponentialInjector { mean_ms: f64 },
}

impl DelayModel {
    pub fn wired_default() -> Self {
        DelayModel::WiredInterArrival { mean_ms: 8.0, sigma_ms: 0.15, lo_ms: 7.8, hi_ms: 8.6 }
    }

    /// Wireless status-stream model; parameters chosen so that observed
    /// inter-arrivals span from sub-millisecond bursts to >100 ms stalls.
    pub fn wireless_status_default() -> Self {
        DelayModel::WirelessLognormal { median_ms: 4.0, log_sigma: 1.2, cap_ms: 130.0 }
    }

    /// Wireless command-direction model. Actuation commands are small and
    /// see much less contention than the bulk status stream, so their
    /// jitter is kept an order of magnitude tighter.
    pub fn wireless_command_default() -> Self {
        DelayModel::WirelessLognormal { median_ms: 1.0, log_sigma: 0.5, cap_ms: 130.0 }
    }

    pub fn validate(&self) -> Result<(), ChannelError> {
        let ok = match *self {
            DelayModel::NoDelay => true,
            DelayModel::WiredInterArrival { mean_ms, sigma_ms, lo_ms, hi_ms } => {
                mean_ms > 0.0 && sigma_ms > 0.0 && lo_ms > 0.0 && lo_ms < hi_ms
            }
            DelayModel::WirelessLognormal { median_ms, log_sigma, cap_ms } => {
                median_ms > 0.0 && log_sigma > 0.0 && cap_ms > 0.0
            }
            DelayModel::ExponentialInjector { mean_ms } => mean_ms > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ChannelError::InvalidModel(*self))
        }
    }
}

fn ms(x: f64) -> Duration {
    Duration::from_secs_f64(x / 1e3)
}

fn sample_truncated_normal(mean: f64, sigma: f64, lo: f64, hi: f64, rng: &mut ChaCha12Rng) -> f64 {
    let dist = Normal::new(mean, sigma).expect("sigma > 0");
    loop {
        let x = dist.sample(rng);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
}

/// One draw from a delay model: the latency for per-message models, the
/// inter-arrival gap for the wired model, zero for `NoDelay`.
pub fn sample_delay(model: &DelayModel, rng: &mut ChaCha12Rng) -> Duration {
    match *model {
        DelayModel::NoDelay => Duration::ZERO,
        DelayModel::WiredInterArrival { mean_ms, sigma_ms, lo_ms, hi_ms } => {
            ms(sample_truncated_normal(mean_ms, sigma_ms, lo_ms, hi_ms, rng))
        }
        DelayModel::WirelessLognormal { median_ms, log_sigma, cap_ms } => {
            let dist = LogNormal::new(median_ms.ln(), log_sigma).expect("valid lognormal");
            ms(dist.sample(rng).min(cap_ms))
        }
        DelayModel::ExponentialInjector { mean_ms } => {
            let dist = Exp::new(1.0 / mean_ms).expect("positive rate");
            ms(dist.sample(rng))
        }
    }
}

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("send at {send_at} precedes previous send at {last}")]
    OutOfOrderSend { send_at: Instant, last: Instant },
    #[error("invalid delay model parameters: {0:?}")]
    InvalidModel(DelayModel),
}

/// One delay stage with its own ordering state and random stream.
#[derive(Debug)]
struct Stage {
    model: DelayModel,
    rng: ChaCha12Rng,
    last_in: Option<Instant>,
    last_out: Option<Instant>,
}

impl Stage {
    fn new(model: DelayModel, rng: ChaCha12Rng) -> Self {
        Self { model, rng, last_in: None, last_out: None }
    }

    fn delivery(&mut self, send_at: Instant) -> Instant {
        let out = match self.model {
            DelayModel::NoDelay => match self.last_out {
                Some(prev) => prev.max(send_at),
                None => send_at,
            },
            DelayModel::WiredInterArrival { mean_ms, sigma_ms, lo_ms, hi_ms } => {
                match (self.last_in, self.last_out) {
                    (Some(prev_in), Some(prev_out)) => {
                        // Anchor the walk: nudge the sampled gap mean back
                        // toward the nominal per-message latency.
                        let latency_ms = prev_out.since(prev_in).as_secs_f64() * 1e3;
                        let target = mean_ms;
                        let adj = (mean_ms + WIRED_ANCHOR * (target - latency_ms))
                            .clamp(lo_ms + 0.05, hi_ms - 0.05);
                        let gap = sample_truncated_normal(adj, sigma_ms, lo_ms, hi_ms, &mut self.rng);
                        self.gap_delivery(prev_out, send_at, ms(gap))
                    }
                    _ => send_at + ms(mean_ms),
                }
            }
            DelayModel::WirelessLognormal { cap_ms, .. } => {
                let latency = sample_delay(&self.model, &mut self.rng);
                self.capped_delivery(send_at, latency, Some(ms(cap_ms)))
            }
            DelayModel::ExponentialInjector { .. } => {
                let latency = sample_delay(&self.model, &mut self.rng);
                self.capped_delivery(send_at, latency, None)
            }
        };
        self.last_in = Some(send_at);
        self.last_out = Some(out);
        out
    }

    fn gap_delivery(&self, prev_out: Instant, send_at: Instant, gap: Duration) -> Instant {
        (prev_out + gap).max(send_at + WIRED_MIN_LATENCY)
    }

    /// Ordered per-message delivery: bursts compress to 1 us gaps; an
    /// optional gap cap bounds the stall observable after a spike while
    /// never predating the send itself.
    fn capped_delivery(&self, send_at: Instant, latency: Duration, gap_cap: Option<Duration>) -> Instant {
        let candidate = match self.last_out {
            Some(prev) => (prev + MICROSECOND).max(send_at + latency),
            None => send_at + latency,
        };
        if let (Some(cap), Some(prev)) = (gap_cap, self.last_out) {
            let ceiling = prev + cap;
            if candidate > ceiling && ceiling >= send_at {
                return ceiling;
            }
        }
        candidate
    }
}

/// Ordered-delivery message channel between one sender and one receiver.
#[derive(Debug)]
pub struct Channel {
    stages: Vec<Stage>,
    queue: VecDeque<(Instant, Vec<u8>)>,
    last_send: Option<Instant>,
}

impl Channel {
    /// `stages` apply in order; an empty list behaves like `NoDelay`.
    /// Each stage consumes its own random stream so injector draws do not
    /// disturb medium draws.
    pub fn new(stages: Vec<(DelayModel, ChaCha12Rng)>) -> Result<Self, ChannelError> {
        for (model, _) in &stages {
            model.validate()?;
        }
        Ok(Self {
            stages: stages.into_iter().map(|(m, r)| Stage::new(m, r)).collect(),
            queue: VecDeque::new(),
            last_send: None,
        })
    }

    /// Enqueue `msg`, returning its delivery instant.
    pub fn send(&mut self, msg: Vec<u8>, send_at: Instant) -> Result<Instant, ChannelError> {
        if let Some(last) = self.last_send {
            if send_at < last {
                return Err(ChannelError::OutOfOrderSend { send_at, last });
            }
        }
        self.last_send = Some(send_at);
        let mut t = send_at;
        for stage in &mut self.stages {
            t = stage.delivery(t);
        }
        debug_assert!(self.queue.back().map_or(true, |(d, _)| *d <= t));
        self.queue.push_back((t, msg));
        Ok(t)
    }

    /// Remove and return every message whose delivery instant is `<= now`.
    pub fn receive_ready(&mut self, now: Instant) -> Vec<(Instant, Vec<u8>)> {
        let mut out = Vec::new();
        while let Some((d, _)) = self.queue.front() {
            if *d <= now {
                out.push(self.queue.pop_front().unwrap());
            } else {
                break;
            }
        }
        out
    }

    pub fn next_delivery(&self) -> Option<Instant> {
        self.queue.front().map(|(d, _)| *d)
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    #[cfg(test)]
    fn delivery_for_forced_latency(
        &mut self,
        send_at: Instant,
        latency: Duration,
        cap: Option<Duration>,
    ) -> Instant {
        let stage = &mut self.stages[0];
        let out = stage.capped_delivery(send_at, latency, cap);
        stage.last_in = Some(send_at);
        stage.last_out = Some(out);
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("need at least 2 timestamps, got {0}")]
    TooFewTimestamps(usize),
}

/// Percentile summary of packet inter-arrival gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterArrivalSummary {
    pub p5: Duration,
    pub p25: Duration,
    pub p50: Duration,
    pub p75: Duration,
    pub p95: Duration,
    pub min: Duration,
    pub max: Duration,
    pub count: usize,
}

/// Linear interpolation between order statistics, `p` in `[0, 100]`.
pub(crate) fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let rank = (p / 100.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Summarize consecutive differences of sorted arrival timestamps.
pub fn interarrival_stats(timestamps: &[Instant]) -> Result<InterArrivalSummary, StatsError> {
    if timestamps.len() < 2 {
        return Err(StatsError::TooFewTimestamps(timestamps.len()));
    }
    let mut gaps: Vec<f64> = timestamps
        .windows(2)
        .map(|w| w[1].since(w[0]).as_secs_f64())
        .collect();
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let d = |x: f64| Duration::from_secs_f64(x);
    Ok(InterArrivalSummary {
        p5: d(percentile(&gaps, 5.0)),
        p25: d(percentile(&gaps, 25.0)),
        p50: d(percentile(&gaps, 50.0)),
        p75: d(percentile(&gaps, 75.0)),
        p95: d(percentile(&gaps, 95.0)),
        min: d(gaps[0]),
        max: d(*gaps.last().unwrap()),
        count: gaps.len(),
    })
}
