//! Desk-scale laboratory for studying how the "plumbing" of a real-time
//! reinforcement-learning setup — transmission delays, command cadences,
//! action cycle times, action spaces — shapes learning performance.
//!
//! The lab reproduces, entirely in software, a sensorimotor loop built
//! around a URControl-style low-level arm controller:
//!
//! * [`timebase`] — nanosecond instants, a deterministic discrete-event
//!   scheduler (virtual time) and a wall-clock pacer (real time).
//! * [`ursim`] — a kinematic six-joint arm controller that executes
//!   `speedj`/`servoj`-style commands on an 8 ms tick and streams one
//!   status packet per tick.
//! * [`linksim`] — the status-packet wire format, textual command codec,
//!   and transmission-medium models (wired, wireless, exponential delay
//!   injectors) with ordered delivery.
//! * [`reacher`] — the reaching task: forward kinematics, observations,
//!   reward, target sampling, safety bounds, and the two action spaces
//!   (direct velocity, smoothed position).
//! * [`harness`] — the concurrent computational model: sensor, actuator,
//!   environment and agent contexts exchanging data through latest-value
//!   mailboxes, with episodes, resets and between-episode updates.
//! * [`trpo`] — a from-scratch trust-region policy-optimization learner
//!   (Gaussian MLP policy, critic, conjugate gradient, line search).
//! * [`xlab`] — experiment configuration, seed streams, analyses
//!   (cross-correlation, inter-arrival statistics, paired bootstrap) and
//!   CSV/JSON outputs.
//!
//! Every experiment can run in virtual time, where a full 150,000-step
//! trial finishes in well under a minute and is reproducible byte for
//! byte. See the `examples/` directory for runnable entry points and the
//! `reacherlab` binary for the `run` / `analyze` / `replay` CLI.

pub mod harness;
pub mod linksim;
pub mod reacher;
pub mod timebase;
pub mod trpo;
pub mod ursim;
pub(crate) mod util;
pub mod xlab;

pub use timebase::{Duration, Instant};
