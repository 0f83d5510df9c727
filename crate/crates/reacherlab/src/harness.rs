//! The concurrent computational model: a robot-communication process
//! (sensor + actuator contexts) and an RL process (environment + agent
//! contexts) exchanging data through latest-value mailboxes.
//!
//! * The **controller** context ticks every 8 ms: it drains the command
//!   channel, advances the arm, and emits a status packet.
//! * The **sensor** context receives status packets and hands them to the
//!   environment, which runs once per received packet: it checks the
//!   spatial and angular boundaries, computes the observation vector and
//!   reward ingredients, and refreshes the observation mailbox.
//! * The **agent** context wakes once per action cycle, reads the latest
//!   observation, computes an action, dispatches it, and only then does
//!   its learning bookkeeping. Policy updates run strictly between
//!   episodes.
//! * The **actuator** context sends the current command every 8 ms,
//!   repeating the previous command until a new action arrives. Its send
//!   slots sit at a fixed 1 ms phase offset from the controller tick,
//!   mirroring the phase-free relationship of two free-running loops.
//!
//! In virtual mode all contexts are cooperatively scheduled through the
//! discrete-event scheduler and runs are bit-deterministic; in real-time
//! mode the same event stream is paced against the wall clock.

use std::collections::BinaryHeap;
use std::sync::Mutex;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::linksim::{self, Channel, ChannelError, DecodeError, DelayModel};
use crate::reacher::{
    assemble_observation, safety_override, sample_target, smoothed_position_step,
    velocity_action_to_command, SmootherState, Task, TaskError,
};
use crate::timebase::{
    ClockMode, ContextId, Duration, Instant, RealTimePacer, Scheduler, SchedulerError,
};
use crate::trpo::{
    critic_fit, sample_action, trpo_update, Batch, Critic, GaussianPolicy, TrpoConfig, TrpoError,
    UpdateReport,
};
use crate::ursim::{ActuationCommand, CommandError, StatusPacket, UrSim, UrSimConfig};
use crate::util::{clip, Vec6};

#[derive(Debug, Error, PartialEq)]
pub enum MailboxError {
    #[error("mailbox read before first write")]
    Empty,
}

/// Single-slot, non-blocking exchange: readers always see the most
/// recent complete write. Thread-safe so real-time contexts may share it.
#[derive(Debug)]
pub struct Mailbox<T> {
    inner: Mutex<Slot<T>>,
}

#[derive(Debug)]
struct Slot<T> {
    value: Option<T>,
    written_at: Instant,
    counter: u64,
}

impl<T: Clone> Mailbox<T> {
    pub fn new() -> Self {
        Self { inner: Mutex::new(Slot { value: None, written_at: Instant::ZERO, counter: 0 }) }
    }

    pub fn write(&self, value: T, now: Instant) {
        let mut s = self.inner.lock().unwrap();
        s.value = Some(value);
        s.written_at = now;
        s.counter += 1;
    }

    /// Latest value and its age (now minus write timestamp).
    pub fn read_latest(&self, now: Instant) -> Result<(T, Duration), MailboxError> {
        let s = self.inner.lock().unwrap();
        match &s.value {
            Some(v) => Ok((v.clone(), now.since(s.written_at))),
            None => Err(MailboxError::Empty),
        }
    }

    pub fn counter(&self) -> u64 {
        self.inner.lock().unwrap().counter
    }
}

impl<T: Clone> Default for Mailbox<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Cycle structure of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CycleConfig {
    pub action_cycle: Duration,
    pub actuation_cycle: Duration,
    pub episode_length: Duration,
    pub batch_episodes: usize,
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            action_cycle: Duration::from_millis(40),
            actuation_cycle: Duration::from_millis(8),
            episode_length: Duration::from_secs(4),
            batch_episodes: 20,
        }
    }
}

impl CycleConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.action_cycle.is_zero() || self.episode_length.is_zero() {
            return Err(HarnessError::Config("cycle durations must be positive".into()));
        }
        if self.episode_length.as_nanos() % self.action_cycle.as_nanos() != 0 {
            return Err(HarnessError::Config(
                "episode_length must be an integer multiple of action_cycle".into(),
            ));
        }
        Ok(())
    }

    pub fn steps_per_episode(&self) -> u64 {
        (self.episode_length.as_nanos() / self.action_cycle.as_nanos()) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSpace {
    Velocity,
    SmoothedPosition,
}

/// Proportional reset controller driving the arm back to the start
/// posture between episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResetConfig {
    pub kp: f64,
    pub speed_limit: f64,
    pub tolerance: f64,
    pub timeout: Duration,
}

impl Default for ResetConfig {
    fn default() -> Self {
        Self {
            kp: 4.0,
            speed_limit: crate::reacher::TASK_VELOCITY_LIMIT,
            tolerance: 0.01,
            timeout: Duration::from_secs(2),
        }
    }
}

/// Continuous signal-collection mode (no episodes, no resets): a random
/// agent roams while per-tick motor signals are recorded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub ticks: u64,
    /// Warm-up before the first recorded step, in actuation ticks.
    pub warmup_ticks: u64,
}

/// Everything the runtime needs to execute one experiment.
#[derive(Debug, Clone)]
pub struct HarnessConfig {
    pub cycles: CycleConfig,
    pub task: Task,
    pub action_space: ActionSpace,
    pub status_medium: DelayModel,
    pub command_medium: DelayModel,
    /// Exponential action-update delay injector (mean), applied between
    /// action computation and the action mailbox write.
    pub action_delay_mean: Option<Duration>,
    /// Exponential robot-actuation delay injector (mean), applied to each
    /// command en route to the controller.
    pub actuation_delay_mean: Option<Duration>,
    pub clock: ClockMode,
    pub total_steps: u64,
    pub ursim: UrSimConfig,
    pub reset: ResetConfig,
    pub actuator_phase: Duration,
    pub safety: bool,
    pub event_log: bool,
    pub probe: Option<ProbeConfig>,
}

impl HarnessConfig {
    pub fn baseline(task: Task) -> Self {
        Self {
            cycles: CycleConfig::default(),
            task,
            action_space: ActionSpace::Velocity,
            status_medium: DelayModel::wired_default(),
            command_medium: DelayModel::NoDelay,
            action_delay_mean: None,
            actuation_delay_mean: None,
            clock: ClockMode::Virtual,
            total_steps: 150_000,
            ursim: UrSimConfig::default(),
            reset: ResetConfig { timeout: Duration::from_secs(8), ..ResetConfig::default() },
            actuator_phase: Duration::from_millis(1),
            safety: true,
            event_log: false,
            probe: None,
        }
    }
}

/// Random streams consumed by one run. The policy/critic streams are
/// handled by the caller when constructing the agent.
#[derive(Debug)]
pub struct HarnessSeeds {
    pub targets: ChaCha12Rng,
    pub medium_status: ChaCha12Rng,
    pub medium_command: ChaCha12Rng,
    pub injector_action: ChaCha12Rng,
    pub injector_actuation: ChaCha12Rng,
    pub sensor_noise: ChaCha12Rng,
}

/// The acting side of the RL process.
pub enum Agent {
    /// Uniform actions over the task velocity range.
    Random { rng: ChaCha12Rng },
    Trpo(TrpoAgent),
}

pub struct TrpoAgent {
    pub policy: GaussianPolicy,
    pub critic: Critic,
    pub cfg: TrpoConfig,
    pub exploration: ChaCha12Rng,
}

impl Agent {
    fn act(&mut self, obs: &[f64], n_act: usize, v_limit: f64) -> Vec<f64> {
        match self {
            Agent::Random { rng } => {
                (0..n_act).map(|_| rng.gen_range(-v_limit..v_limit)).collect()
            }
            Agent::Trpo(t) => {
                let (mean, std) = t.policy.forward(obs);
                sample_action(&mean, &std, &mut t.exploration)
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("startup-order bug: {0}")]
    Startup(#[from] MailboxError),
    #[error("scheduler error: {0}")]
    Scheduler(#[from] SchedulerError),
    #[error("channel error: {0}")]
    Channel(#[from] ChannelError),
    #[error("wire decode error: {0}")]
    Decode(#[from] DecodeError),
    #[error("controller fault at {at}: {source}")]
    Controller { at: Instant, source: CommandError },
    #[error("task error: {0}")]
    Task(#[from] TaskError),
    #[error("learner error: {0}")]
    Trpo(#[from] TrpoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogContext {
    Controller,
    Sensor,
    Actuator,
    Environment,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogKind {
    PacketEmitted,
    PacketReceived,
    ObsComputed,
    SafetyStop,
    ObsRead,
    ActionComputed,
    ActionDispatched,
    ActionWritten,
    Bookkeeping,
    LearnUpdate,
    EpisodeStart,
    EpisodeEnd,
    ResetStart,
    ResetDone,
    CommandSent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub t: Instant,
    pub ctx: LogContext,
    pub kind: LogKind,
    pub episode: u64,
    pub step: u64,
}

/// One actuator send, recorded when the event log is enabled.
#[derive(Debug, Clone, PartialEq)]
pub struct SendRecord {
    pub t: Instant,
    pub action_write_counter: u64,
    pub line: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchRow {
    pub batch: usize,
    pub steps: u64,
    pub mean_return: f64,
    pub std_return: f64,
    pub mean_final_distance: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TimingAudit {
    pub max_obs_age: Duration,
    pub obs_age_sum: Duration,
    pub obs_age_count: u64,
    pub dropped_commands: u64,
    pub watchdog_trips: u64,
    pub watchdog_dropped: u64,
    pub action_order_regressions: u64,
    pub safety_stops: u64,
    pub reset_faults: u64,
    pub max_box_excursion_m: f64,
    pub max_angle_excursion_rad: f64,
    pub actuator_sends: u64,
    pub min_sends_per_action: u64,
    pub max_sends_per_action: u64,
}

impl TimingAudit {
    pub fn mean_obs_age(&self) -> Duration {
        if self.obs_age_count == 0 {
            Duration::ZERO
        } else {
            self.obs_age_sum / self.obs_age_count as u32
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeLog {
    pub episode: u64,
    pub steps: u64,
    pub episode_return: f64,
    pub final_distance: f64,
}

/// Signals collected by a probe run, one row per controller tick plus one
/// action per agent step, index-aligned by time.
#[derive(Debug, Clone, Default)]
pub struct SignalProbeResult {
    pub n_act: usize,
    /// Controller tick index of agent step 0.
    pub start_tick: u64,
    /// Action cycle expressed in controller ticks.
    pub cycle_ticks: u64,
    pub actions: Vec<Vec<f64>>,
    pub qdd: Vec<Vec<f64>>,
    pub torque: Vec<Vec<f64>>,
    pub current: Vec<Vec<f64>>,
    /// Status-packet delivery instants at the sensor thread.
    pub deliveries: Vec<Instant>,
}

impl SignalProbeResult {
    /// Equal-length series `(actions[k], signal[start_tick + k*cycle])`
    /// for one actuated joint.
    pub fn aligned(&self, signal: &str, joint: usize) -> (Vec<f64>, Vec<f64>) {
        let sig = match signal {
            "qdd" => &self.qdd,
            "torque" => &self.torque,
            "current" => &self.current,
            other => panic!("unknown signal {other}"),
        };
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (k, a) in self.actions.iter().enumerate() {
            let tick = self.start_tick + k as u64 * self.cycle_ticks;
            if let Some(row) = sig.get(tick as usize) {
                x.push(a[joint]);
                y.push(row[joint]);
            }
        }
        x.truncate(y.len());
        (x, y)
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub rows: Vec<BatchRow>,
    pub steps_per_episode: u64,
    pub batch_episodes: u64,
    pub steps_done: u64,
    pub episodes: u64,
    pub updates: u64,
    pub agent_experience: Duration,
    pub sim_elapsed: Duration,
    pub audit: TimingAudit,
    pub update_reports: Vec<UpdateReport>,
    pub episode_logs: Vec<EpisodeLog>,
    pub event_log: Vec<LogEntry>,
    pub send_log: Vec<SendRecord>,
    pub reset_durations: Vec<Duration>,
    pub probe: Option<SignalProbeResult>,
}

const CTX_CONTROLLER: ContextId = ContextId(0);
const CTX_SENSOR: ContextId = ContextId(1);
const CTX_AGENT: ContextId = ContextId(2);
const CTX_ACTION_READY: ContextId = ContextId(3);
const CTX_ACTUATOR: ContextId = ContextId(4);

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Resetting { started: Instant },
    Episode,
    Probe,
    Finished,
}

#[derive(Debug, Clone)]
struct ObsSample {
    values: Vec<f64>,
    distance: f64,
    packet_ts: Instant,
}

/// Value carried by the action mailbox (read for its latest-value
/// semantics; the conversion path receives the action directly).
#[derive(Debug, Clone)]
#[allow(dead_code)]
struct ActionMsg {
    action: Vec<f64>,
    generation: u64,
}

#[derive(Debug, Clone)]
struct PendingAction {
    ready_at: Instant,
    generation: u64,
    action: Vec<f64>,
}

impl PartialEq for PendingAction {
    fn eq(&self, other: &Self) -> bool {
        (self.ready_at, self.generation) == (other.ready_at, other.generation)
    }
}
impl Eq for PendingAction {}
impl Ord for PendingAction {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.ready_at, self.generation).cmp(&(other.ready_at, other.generation))
    }
}
impl PartialOrd for PendingAction {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct EpisodeState {
    step: u64,
    obs: Vec<Vec<f64>>,
    actions: Vec<Vec<f64>>,
    rewards: Vec<f64>,
}

/// One experiment's live state: scheduler, arm, channels, mailboxes and
/// the four-context logic.
pub struct Runtime {
    cfg: HarnessConfig,
    sched: Scheduler,
    pacer: Option<RealTimePacer>,
    arm: UrSim,
    status_ch: Channel,
    cmd_ch: Channel,
    packet_mb: Mailbox<StatusPacket>,
    obs_mb: Mailbox<ObsSample>,
    action_mb: Mailbox<ActionMsg>,
    cmd_mb: Mailbox<ActuationCommand>,
    pending_actions: BinaryHeap<std::cmp::Reverse<PendingAction>>,
    action_delay: Option<(Exp<f64>, ChaCha12Rng)>,
    targets: ChaCha12Rng,
    agent: Agent,
    mode: Mode,
    episode: Option<EpisodeState>,
    episodes_done: u64,
    steps_done: u64,
    target: [f64; 3],
    prev_action: Vec<f64>,
    smoother: SmootherState,
    last_applied_generation: Option<u64>,
    // results
    rows: Vec<BatchRow>,
    batch: Batch,
    batch_returns: Vec<f64>,
    batch_final_distances: Vec<f64>,
    update_reports: Vec<UpdateReport>,
    episode_logs: Vec<EpisodeLog>,
    audit: TimingAudit,
    log: Vec<LogEntry>,
    send_log: Vec<SendRecord>,
    reset_durations: Vec<Duration>,
    sends_since_write: u64,
    write_in_episode: bool,
    probe: SignalProbeResult,
    controller_ticks: u64,
}

impl Runtime {
    pub fn new(cfg: HarnessConfig, agent: Agent, seeds: HarnessSeeds) -> Result<Self, HarnessError> {
        cfg.cycles.validate()?;
        let mut arm = UrSim::new(cfg.ursim, seeds.sensor_noise);
        arm.set_joint_state(cfg.task.q_start, crate::util::VEC6_ZERO)
            .map_err(|source| HarnessError::Controller { at: Instant::ZERO, source })?;

        let status_ch = Channel::new(vec![(cfg.status_medium, seeds.medium_status)])?;
        let mut cmd_stages = vec![(cfg.command_medium, seeds.medium_command)];
        if let Some(mean) = cfg.actuation_delay_mean {
            cmd_stages.push((
                DelayModel::ExponentialInjector { mean_ms: mean.as_secs_f64() * 1e3 },
                seeds.injector_actuation,
            ));
        }
        let cmd_ch = Channel::new(cmd_stages)?;

        let action_delay = cfg.action_delay_mean.map(|mean| {
            let exp = Exp::new(1.0 / (mean.as_secs_f64() * 1e3)).expect("positive mean");
            (exp, seeds.injector_action)
        });

        let n_act = cfg.task.n_actuated();
        let tau = cfg.cycles.action_cycle.as_secs_f64();
        let mode = if cfg.probe.is_some() { Mode::Probe } else { Mode::Resetting { started: Instant::ZERO } };
        let probe = SignalProbeResult { n_act, ..SignalProbeResult::default() };
        let target = {
            // Placeholder until the first episode starts; probes aim at
            // the box center.
            let mut c = [0.0; 3];
            for a in 0..3 {
                c[a] = (cfg.task.bounds.box_lo[a] + cfg.task.bounds.box_hi[a]) / 2.0;
            }
            c
        };

        let pacer = match cfg.clock {
            ClockMode::RealTime => Some(RealTimePacer::start()),
            ClockMode::Virtual => None,
        };
        let mut audit = TimingAudit::default();
        audit.min_sends_per_action = u64::MAX;

        Ok(Self {
            smoother: SmootherState::new(n_act, tau),
            prev_action: vec![0.0; n_act],
            cfg,
            sched: Scheduler::new(),
            pacer,
            arm,
            status_ch,
            cmd_ch,
            packet_mb: Mailbox::new(),
            obs_mb: Mailbox::new(),
            action_mb: Mailbox::new(),
            cmd_mb: Mailbox::new(),
            pending_actions: BinaryHeap::new(),
            action_delay,
            targets: seeds.targets,
            agent,
            mode,
            episode: None,
            episodes_done: 0,
            steps_done: 0,
            target,
            last_applied_generation: None,
            rows: Vec::new(),
            batch: Batch::default(),
            batch_returns: Vec::new(),
            batch_final_distances: Vec::new(),
            update_reports: Vec::new(),
            episode_logs: Vec::new(),
            audit,
            log: Vec::new(),
            send_log: Vec::new(),
            reset_durations: Vec::new(),
            sends_since_write: 0,
            write_in_episode: false,
            probe,
            controller_ticks: 0,
        })
    }

    pub fn now(&self) -> Instant {
        self.sched.now()
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    pub fn episodes_done(&self) -> u64 {
        self.episodes_done
    }

    /// Direct access to the simulated controller (test support).
    pub fn arm_mut(&mut self) -> &mut UrSim {
        &mut self.arm
    }

    fn logk(&mut self, ctx: LogContext, kind: LogKind) {
        if self.cfg.event_log {
            let (episode, step) = match &self.episode {
                Some(e) => (self.episodes_done, e.step),
                None => (self.episodes_done, 0),
            };
            self.log.push(LogEntry { t: self.sched.now(), ctx, kind, episode, step });
        }
    }

    /// Run the whole experiment to completion.
    pub fn run(mut self) -> Result<RunResult, HarnessError> {
        if self.cfg.total_steps == 0 && self.cfg.probe.is_none() {
            return Ok(self.into_result());
        }
        self.sched.schedule_at(Instant::ZERO, CTX_CONTROLLER)?;
        self.sched.schedule_at(Instant::ZERO + self.cfg.actuator_phase, CTX_ACTUATOR)?;
        if let Some(p) = self.cfg.probe {
            let t0 = Instant::ZERO + self.cfg.cycles.actuation_cycle * p.warmup_ticks as u32;
            self.probe.start_tick = p.warmup_ticks;
            self.probe.cycle_ticks = (self.cfg.cycles.action_cycle.as_nanos()
                / self.cfg.cycles.actuation_cycle.as_nanos())
                as u64;
            self.sched.schedule_at(t0, CTX_AGENT)?;
        }
        while self.mode != Mode::Finished {
            let Some(ev) = self.sched.advance_to_next() else { break };
            if let Some(pacer) = &self.pacer {
                pacer.wait_until(ev.fire_at);
            }
            self.dispatch(ev.context_id, ev.fire_at)?;
        }
        Ok(self.into_result())
    }

    fn into_result(self) -> RunResult {
        RunResult {
            rows: self.rows,
            steps_per_episode: self.cfg.cycles.steps_per_episode(),
            batch_episodes: self.cfg.cycles.batch_episodes as u64,
            steps_done: self.steps_done,
            episodes: self.episodes_done,
            updates: self.update_reports.len() as u64,
            agent_experience: self.cfg.cycles.action_cycle * self.steps_done as u32,
            sim_elapsed: self.sched.now().since(Instant::ZERO),
            audit: self.audit,
            update_reports: self.update_reports,
            episode_logs: self.episode_logs,
            event_log: self.log,
            send_log: self.send_log,
            reset_durations: self.reset_durations,
            probe: if self.cfg.probe.is_some() { Some(self.probe) } else { None },
        }
    }

    fn dispatch(&mut self, ctx: ContextId, now: Instant) -> Result<(), HarnessError> {
        match ctx {
            CTX_CONTROLLER => self.on_controller_tick(now),
            CTX_SENSOR => self.on_status_delivery(now),
            CTX_AGENT => self.on_agent_step(now),
            CTX_ACTION_READY => self.on_action_ready(now),
            CTX_ACTUATOR => self.on_actuator_send(now),
            other => unreachable!("unknown context {other:?}"),
        }
    }

    // ---- controller context -------------------------------------------

    fn on_controller_tick(&mut self, now: Instant) -> Result<(), HarnessError> {
        for (arrival, bytes) in self.cmd_ch.receive_ready(now) {
            let line = std::str::from_utf8(&bytes)
                .map_err(|_| HarnessError::Decode(DecodeError::Command("not utf-8".into())))?;
            let cmd = linksim::parse_command(line)?;
            self.arm
                .apply_command(cmd, arrival)
                .map_err(|source| HarnessError::Controller { at: now, source })?;
        }
        let pkt = self.arm.tick(now);
        self.controller_ticks += 1;
        self.audit.dropped_commands = self.arm.dropped_commands();
        self.audit.watchdog_trips = self.arm.watchdog_trips();
        self.audit.watchdog_dropped = self.arm.watchdog_dropped();
        self.logk(LogContext::Controller, LogKind::PacketEmitted);

        if self.cfg.probe.is_some() {
            self.record_probe_signals(&pkt);
            if self.controller_ticks >= self.cfg.probe.unwrap().ticks {
                self.mode = Mode::Finished;
                return Ok(());
            }
        }

        let delivery = self.status_ch.send(linksim::encode_status(&pkt), now)?;
        self.sched.schedule_at(delivery, CTX_SENSOR)?;
        if self.mode != Mode::Finished {
            self.sched.schedule_at(now + self.cfg.cycles.actuation_cycle, CTX_CONTROLLER)?;
        }
        Ok(())
    }

    fn record_probe_signals(&mut self, pkt: &StatusPacket) {
        let actuated = self.cfg.task.chain.actuated();
        let pick = |v: &Vec6| actuated.iter().map(|&j| v[j]).collect::<Vec<f64>>();
        self.probe.qdd.push(pick(&pkt.qdd_target));
        self.probe.torque.push(pick(&pkt.torque_target));
        self.probe.current.push(pick(&pkt.current));
    }

    // ---- sensor + environment contexts --------------------------------

    fn on_status_delivery(&mut self, now: Instant) -> Result<(), HarnessError> {
        for (arrival, bytes) in self.status_ch.receive_ready(now) {
            let pkt = linksim::decode_status(&bytes)?;
            if self.cfg.probe.is_some() {
                self.probe.deliveries.push(arrival);
            }
            self.packet_mb.write(pkt, now);
            self.logk(LogContext::Sensor, LogKind::PacketReceived);
            self.env_process_packet(&pkt, now)?;
        }
        Ok(())
    }

    fn env_process_packet(&mut self, pkt: &StatusPacket, now: Instant) -> Result<(), HarnessError> {
        let task = self.cfg.task.clone();
        let dim = task.chain.task_dim();
        let fingertip = crate::reacher::fingertip_position(&pkt.q, &task.chain);
        let exc = task.bounds.excursion(&fingertip, dim);
        self.audit.max_box_excursion_m = self.audit.max_box_excursion_m.max(exc);
        for &j in task.chain.actuated() {
            let over =
                (task.bounds.q_min[j] - pkt.q[j]).max(pkt.q[j] - task.bounds.q_max[j]).max(0.0);
            self.audit.max_angle_excursion_rad = self.audit.max_angle_excursion_rad.max(over);
        }

        match self.mode {
            Mode::Resetting { started } => {
                let err = task
                    .chain
                    .actuated()
                    .iter()
                    .fold(0.0f64, |m, &j| m.max((pkt.q[j] - task.q_start[j]).abs()));
                if err <= self.cfg.reset.tolerance {
                    self.logk(LogContext::Environment, LogKind::ResetDone);
                    self.reset_durations.push(now.since(started));
                    self.start_episode(now)?;
                } else if now.since(started) > self.cfg.reset.timeout {
                    self.audit.reset_faults += 1;
                    self.logk(LogContext::Environment, LogKind::ResetDone);
                    self.reset_durations.push(now.since(started));
                    self.start_episode(now)?;
                } else {
                    // Proportional drive toward the start posture, clipped
                    // to the task speed limit. The reset controller is the
                    // safety authority here: it may pull the arm back from
                    // outside the box, so no override applies.
                    let mut v = crate::util::VEC6_ZERO;
                    for j in 0..6 {
                        v[j] = clip(
                            self.cfg.reset.kp * (task.q_start[j] - pkt.q[j]),
                            -self.cfg.reset.speed_limit,
                            self.cfg.reset.speed_limit,
                        );
                    }
                    let cmd = ActuationCommand::speedj(
                        v,
                        task.bounds.a_task,
                        crate::reacher::COMMAND_VALIDITY,
                    );
                    self.cmd_mb.write(cmd, now);
                }
            }
            Mode::Episode | Mode::Probe => {
                if self.cfg.safety {
                    if let Ok((cur, _)) = self.cmd_mb.read_latest(now) {
                        let safe = safety_override(cur, pkt, &task);
                        if safe != cur {
                            self.cmd_mb.write(safe, now);
                            self.audit.safety_stops += 1;
                            self.logk(LogContext::Environment, LogKind::SafetyStop);
                        }
                    }
                }
                let obs = assemble_observation(pkt, &self.target, &self.prev_action, &task);
                self.obs_mb.write(
                    ObsSample { values: obs.values, distance: obs.distance, packet_ts: pkt.timestamp },
                    now,
                );
                self.logk(LogContext::Environment, LogKind::ObsComputed);
            }
            Mode::Finished => {}
        }
        Ok(())
    }

    fn start_episode(&mut self, now: Instant) -> Result<(), HarnessError> {
        let task = &self.cfg.task;
        self.target = sample_target(&mut self.targets, &task.bounds, task.chain.task_dim())?;
        self.smoother = SmootherState::new(task.n_actuated(), self.cfg.cycles.action_cycle.as_secs_f64());
        self.prev_action = vec![0.0; task.n_actuated()];
        self.write_in_episode = false;
        self.mode = Mode::Episode;
        self.episode = Some(EpisodeState {
            step: 0,
            obs: Vec::with_capacity(self.cfg.cycles.steps_per_episode() as usize),
            actions: Vec::with_capacity(self.cfg.cycles.steps_per_episode() as usize),
            rewards: Vec::with_capacity(self.cfg.cycles.steps_per_episode() as usize),
        });
        // Refresh the observation with the fresh target so step 0 acts on
        // current data.
        if let Ok((pkt, _)) = self.packet_mb.read_latest(now) {
            let obs = assemble_observation(&pkt, &self.target, &self.prev_action, task);
            self.obs_mb.write(
                ObsSample { values: obs.values, distance: obs.distance, packet_ts: pkt.timestamp },
                now,
            );
        }
        self.logk(LogContext::Environment, LogKind::EpisodeStart);
        self.sched.schedule_at(now, CTX_AGENT)?;
        Ok(())
    }

    // ---- agent context -------------------------------------------------

    fn on_agent_step(&mut self, now: Instant) -> Result<(), HarnessError> {
        if self.mode == Mode::Probe {
            return self.on_probe_step(now);
        }
        if self.mode != Mode::Episode {
            return Ok(());
        }
        let steps_per_episode = self.cfg.cycles.steps_per_episode();
        let (sample, _mb_age) = self.obs_mb.read_latest(now)?;
        let data_age = now.since(sample.packet_ts);
        self.logk(LogContext::Agent, LogKind::ObsRead);

        let step = self.episode.as_ref().unwrap().step;
        if step < steps_per_episode {
            self.audit.max_obs_age = self.audit.max_obs_age.max(data_age);
            self.audit.obs_age_sum += data_age;
            self.audit.obs_age_count += 1;

            let n_act = self.cfg.task.n_actuated();
            let v_limit = self.cfg.task.bounds.v_task;
            let action = self.agent.act(&sample.values, n_act, v_limit);
            self.logk(LogContext::Agent, LogKind::ActionComputed);
            let generation = self.steps_done;
            self.dispatch_action(action.clone(), generation, now)?;
            self.logk(LogContext::Agent, LogKind::ActionDispatched);

            // Learning bookkeeping strictly after the action is on its way.
            if step > 0 {
                let ep = self.episode.as_mut().unwrap();
                ep.rewards.push(-sample.distance);
                self.logk(LogContext::Agent, LogKind::Bookkeeping);
            }
            let ep = self.episode.as_mut().unwrap();
            ep.obs.push(sample.values);
            ep.actions.push(action);
            ep.step += 1;
            self.steps_done += 1;
            self.sched.schedule_at(now + self.cfg.cycles.action_cycle, CTX_AGENT)?;
        } else {
            // Terminal read: close the last transition, then run any due
            // learning update before the next reset begins.
            let ep = self.episode.as_mut().unwrap();
            ep.rewards.push(-sample.distance);
            self.logk(LogContext::Agent, LogKind::Bookkeeping);
            self.finish_episode(sample.distance, now)?;
        }
        Ok(())
    }

    fn on_probe_step(&mut self, now: Instant) -> Result<(), HarnessError> {
        let n_act = self.cfg.task.n_actuated();
        let v_limit = self.cfg.task.bounds.v_task;
        // The probe agent acts on whatever observation exists; random
        // agents ignore the values.
        let obs = self
            .obs_mb
            .read_latest(now)
            .map(|(s, _)| s.values)
            .unwrap_or_else(|_| vec![0.0; self.cfg.task.obs_dim()]);
        let action = self.agent.act(&obs, n_act, v_limit);
        self.probe.actions.push(action.clone());
        let generation = self.steps_done;
        self.steps_done += 1;
        self.dispatch_action(action, generation, now)?;
        self.sched.schedule_at(now + self.cfg.cycles.action_cycle, CTX_AGENT)?;
        Ok(())
    }

    fn dispatch_action(
        &mut self,
        action: Vec<f64>,
        generation: u64,
        now: Instant,
    ) -> Result<(), HarnessError> {
        match &mut self.action_delay {
            Some((exp, rng)) => {
                let delay_ms = exp.sample(rng);
                let ready_at = now + Duration::from_secs_f64(delay_ms / 1e3);
                self.pending_actions
                    .push(std::cmp::Reverse(PendingAction { ready_at, generation, action }));
                self.sched.schedule_at(ready_at, CTX_ACTION_READY)?;
            }
            None => self.apply_action_write(action, generation, now),
        }
        Ok(())
    }

    fn on_action_ready(&mut self, now: Instant) -> Result<(), HarnessError> {
        while let Some(std::cmp::Reverse(p)) = self.pending_actions.peek() {
            if p.ready_at > now {
                break;
            }
            let std::cmp::Reverse(p) = self.pending_actions.pop().unwrap();
            // Latest-write semantics: a slow older action that lands after
            // a newer one overwrites it. The audit counts the regressions.
            if self.last_applied_generation.is_some_and(|g| p.generation < g) {
                self.audit.action_order_regressions += 1;
            }
            self.apply_action_write(p.action, p.generation, now);
        }
        Ok(())
    }

    /// Environment half of the action path: write the action mailbox,
    /// convert through the action space, apply safety, and hand the
    /// command to the actuator mailbox.
    fn apply_action_write(&mut self, action: Vec<f64>, generation: u64, now: Instant) {
        self.action_mb.write(ActionMsg { action: action.clone(), generation }, now);
        self.last_applied_generation = Some(generation);
        self.logk(LogContext::Environment, LogKind::ActionWritten);

        let task = self.cfg.task.clone();
        let pkt = self.packet_mb.read_latest(now).map(|(p, _)| p);
        let cmd = match self.cfg.action_space {
            ActionSpace::Velocity => velocity_action_to_command(&action, &task),
            ActionSpace::SmoothedPosition => {
                let q = pkt.as_ref().map(|p| p.q).unwrap_or(task.q_start);
                smoothed_position_step(&mut self.smoother, &action, &q, &task)
            }
        };
        let cmd = match (&pkt, self.cfg.safety) {
            (Ok(p), true) => safety_override(cmd, p, &task),
            _ => cmd,
        };
        self.prev_action = action;
        // Interior sends-per-action accounting.
        if self.write_in_episode && self.sends_since_write > 0 {
            self.audit.min_sends_per_action =
                self.audit.min_sends_per_action.min(self.sends_since_write);
            self.audit.max_sends_per_action =
                self.audit.max_sends_per_action.max(self.sends_since_write);
        }
        self.sends_since_write = 0;
        self.write_in_episode = self.mode == Mode::Episode || self.mode == Mode::Probe;
        self.cmd_mb.write(cmd, now);
    }

    // ---- actuator context ----------------------------------------------

    fn on_actuator_send(&mut self, now: Instant) -> Result<(), HarnessError> {
        if let Ok((cmd, _)) = self.cmd_mb.read_latest(now) {
            let line = linksim::encode_command(&cmd);
            if self.cfg.event_log {
                self.send_log.push(SendRecord {
                    t: now,
                    action_write_counter: self.cmd_mb.counter(),
                    line: line.clone(),
                });
            }
            self.cmd_ch.send(line.into_bytes(), now)?;
            self.audit.actuator_sends += 1;
            self.sends_since_write += 1;
            self.logk(LogContext::Actuator, LogKind::CommandSent);
        }
        if self.mode != Mode::Finished {
            self.sched.schedule_at(now + self.cfg.cycles.actuation_cycle, CTX_ACTUATOR)?;
        }
        Ok(())
    }

    // ---- episode bookkeeping --------------------------------------------

    fn finish_episode(&mut self, final_distance: f64, now: Instant) -> Result<(), HarnessError> {
        let ep = self.episode.take().unwrap();
        let episode_return: f64 = ep.rewards.iter().sum();
        self.episodes_done += 1;
        self.logk(LogContext::Agent, LogKind::EpisodeEnd);
        self.episode_logs.push(EpisodeLog {
            episode: self.episodes_done - 1,
            steps: ep.step,
            episode_return,
            final_distance,
        });
        self.batch_returns.push(episode_return);
        self.batch_final_distances.push(final_distance);
        self.batch.push_episode(ep.obs, ep.actions, ep.rewards);

        if self.batch.episodes() >= self.cfg.cycles.batch_episodes {
            self.run_update()?;
        }

        if self.steps_done >= self.cfg.total_steps {
            self.mode = Mode::Finished;
        } else {
            self.mode = Mode::Resetting { started: now };
            self.logk(LogContext::Environment, LogKind::ResetStart);
        }
        Ok(())
    }

    /// One learning update, strictly between episodes, in the agent
    /// context.
    fn run_update(&mut self) -> Result<(), HarnessError> {
        let n = self.batch_returns.len() as f64;
        let mean_return = self.batch_returns.iter().sum::<f64>() / n;
        let var = self
            .batch_returns
            .iter()
            .map(|r| (r - mean_return) * (r - mean_return))
            .sum::<f64>()
            / n;
        let mean_final = self.batch_final_distances.iter().sum::<f64>() / n;

        if let Agent::Trpo(t) = &mut self.agent {
            self.batch.prepare(&t.critic, t.cfg.gamma);
            let report = trpo_update(&mut t.policy, &self.batch, &t.cfg)?;
            critic_fit(&mut t.critic, &self.batch.obs, &self.batch.returns, &t.cfg)?;
            self.update_reports.push(report);
            self.logk(LogContext::Agent, LogKind::LearnUpdate);
        } else {
            // A random agent performs no learning; the batch row is still
            // emitted so analyses see the same structure.
            self.update_reports.push(UpdateReport {
                accepted: false,
                kl: 0.0,
                surrogate_gain: 0.0,
                backtracks: 0,
            });
        }
        self.rows.push(BatchRow {
            batch: self.rows.len(),
            steps: self.steps_done,
            mean_return,
            std_return: var.sqrt(),
            mean_final_distance: mean_final,
        });
        self.batch = Batch::default();
        self.batch_returns.clear();
        self.batch_final_distances.clear();
        Ok(())
    }
}

/// Convenience wrapper: build a runtime and run it to completion.
pub fn run_experiment(
    cfg: HarnessConfig,
    agent: Agent,
    seeds: HarnessSeeds,
) -> Result<RunResult, HarnessError> {
    Runtime::new(cfg, agent, seeds)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xlab::SeedStreams;
    use rand::SeedableRng;

    fn seeds(master: u64) -> HarnessSeeds {
        SeedStreams::derive(master).harness_seeds()
    }

    fn random_agent(master: u64) -> Agent {
        Agent::Random { rng: ChaCha12Rng::seed_from_u64(master ^ 0x5eed) }
    }

    fn short_cfg(total_steps: u64) -> HarnessConfig {
        let mut cfg = HarnessConfig::baseline(Task::two_joint());
        cfg.total_steps = total_steps;
        cfg
    }

    #[test]
    fn mailbox_latest_value_semantics() {
        let mb = Mailbox::new();
        mb.write(1, Instant::ZERO);
        mb.write(2, Instant::from_millis(1));
        let (v, _) = mb.read_latest(Instant::from_millis(2)).unwrap();
        assert_eq!(v, 2);
    }

    #[test]
    fn mailbox_reads_are_idempotent() {
        let mb = Mailbox::new();
        mb.write(7, Instant::ZERO);
        let c = mb.counter();
        let a = mb.read_latest(Instant::from_millis(1)).unwrap();
        let b = mb.read_latest(Instant::from_millis(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(mb.counter(), c);
    }

    #[test]
    fn mailbox_read_before_write_is_error() {
        let mb: Mailbox<u32> = Mailbox::new();
        assert_eq!(mb.read_latest(Instant::ZERO), Err(MailboxError::Empty));
    }

    #[test]
    fn mailbox_age_is_exact_in_virtual_time() {
        let mb = Mailbox::new();
        mb.write(1, Instant::from_millis(10));
        let (_, age) = mb.read_latest(Instant::from_millis(13)).unwrap();
        assert_eq!(age, Duration::from_millis(3));
    }

    #[test]
    fn mailbox_never_tears_under_concurrency() {
        use std::sync::Arc;
        let mb = Arc::new(Mailbox::new());
        let writer = {
            let mb = Arc::clone(&mb);
            std::thread::spawn(move || {
                for i in 0..10_000u64 {
                    mb.write(vec![i; 8], Instant::from_nanos(i));
                }
            })
        };
        for _ in 0..10_000 {
            if let Ok((v, _)) = mb.read_latest(Instant::ZERO) {
                assert!(v.iter().all(|&x| x == v[0]), "torn read {v:?}");
            }
        }
        writer.join().unwrap();
    }

    #[test]
    fn cycle_config_counts_steps() {
        let c = CycleConfig::default();
        assert_eq!(c.steps_per_episode(), 100);
        let fast = CycleConfig { action_cycle: Duration::from_millis(8), ..c };
        assert_eq!(fast.steps_per_episode(), 500);
    }

    #[test]
    fn episode_length_must_divide() {
        let c = CycleConfig { action_cycle: Duration::from_millis(33), ..CycleConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn zero_step_budget_yields_empty_result() {
        let result =
            run_experiment(short_cfg(0), random_agent(0), seeds(0)).unwrap();
        assert_eq!(result.episodes, 0);
        assert_eq!(result.updates, 0);
        assert!(result.rows.is_empty());
    }

    #[test]
    fn one_batch_run_structure() {
        // 2000 steps = one 20-episode batch at 100 steps/episode.
        let mut cfg = short_cfg(2000);
        cfg.event_log = true;
        let result = run_experiment(cfg, random_agent(1), seeds(1)).unwrap();
        assert_eq!(result.episodes, 20);
        assert_eq!(result.rows.len(), 1);
        assert_eq!(result.steps_done, 2000);
        assert_eq!(result.agent_experience, Duration::from_secs(80));
        for ep in &result.episode_logs {
            assert_eq!(ep.steps, 100);
        }
        // Each 40 ms action is transmitted as exactly five 8 ms commands.
        assert_eq!(result.audit.min_sends_per_action, 5);
        assert_eq!(result.audit.max_sends_per_action, 5);
    }

    #[test]
    fn eight_ms_cycle_runs_500_steps_without_repetition() {
        let mut cfg = short_cfg(500);
        cfg.cycles.action_cycle = Duration::from_millis(8);
        let result = run_experiment(cfg, random_agent(2), seeds(2)).unwrap();
        assert_eq!(result.steps_per_episode, 500);
        assert_eq!(result.episodes, 1);
        assert_eq!(result.audit.min_sends_per_action, 1);
        assert_eq!(result.audit.max_sends_per_action, 1);
    }

    #[test]
    fn actuation_rate_is_independent_of_action_cycle() {
        let mut a = short_cfg(100);
        a.cycles.action_cycle = Duration::from_millis(40);
        let mut b = short_cfg(100);
        b.cycles.action_cycle = Duration::from_millis(80);
        let ra = run_experiment(a, random_agent(3), seeds(3)).unwrap();
        let rb = run_experiment(b, random_agent(3), seeds(4)).unwrap();
        let rate_a = ra.audit.actuator_sends as f64 / ra.sim_elapsed.as_secs_f64();
        let rate_b = rb.audit.actuator_sends as f64 / rb.sim_elapsed.as_secs_f64();
        assert!((rate_a - 125.0).abs() < 2.0, "rate {rate_a}");
        assert!((rate_b - 125.0).abs() < 2.0, "rate {rate_b}");
    }

    #[test]
    fn act_before_learn_ordering_holds() {
        let mut cfg = short_cfg(2 * 2000);
        cfg.cycles.batch_episodes = 5;
        cfg.total_steps = 1000;
        cfg.event_log = true;
        let result = run_experiment(cfg, random_agent(4), seeds(5)).unwrap();
        // Within every (episode, step): ActionDispatched precedes
        // Bookkeeping entries.
        let mut dispatch_at = std::collections::HashMap::new();
        for (i, e) in result.event_log.iter().enumerate() {
            if e.kind == LogKind::ActionDispatched {
                dispatch_at.insert((e.episode, e.step), i);
            }
        }
        for (i, e) in result.event_log.iter().enumerate() {
            if e.kind == LogKind::Bookkeeping {
                if let Some(&d) = dispatch_at.get(&(e.episode, e.step)) {
                    assert!(d < i, "bookkeeping before dispatch at {:?}", (e.episode, e.step));
                }
            }
        }
        // Updates only between episodes: LearnUpdate entries must not sit
        // between EpisodeStart and the matching EpisodeEnd.
        let mut in_episode = false;
        for e in &result.event_log {
            match e.kind {
                LogKind::EpisodeStart => in_episode = true,
                LogKind::EpisodeEnd => in_episode = false,
                LogKind::LearnUpdate => assert!(!in_episode, "update inside an episode"),
                _ => {}
            }
        }
    }

    #[test]
    fn repeated_commands_between_writes_are_identical() {
        let mut cfg = short_cfg(300);
        cfg.event_log = true;
        let result = run_experiment(cfg, random_agent(5), seeds(6)).unwrap();
        let mut by_counter: std::collections::HashMap<u64, &str> = std::collections::HashMap::new();
        for rec in &result.send_log {
            match by_counter.get(&rec.action_write_counter) {
                Some(line) => assert_eq!(*line, rec.line, "command changed between writes"),
                None => {
                    by_counter.insert(rec.action_write_counter, &rec.line);
                }
            }
        }
        assert!(result.send_log.len() > 100);
    }

    #[test]
    fn staleness_bound_with_no_delay_medium() {
        let mut cfg = short_cfg(400);
        cfg.status_medium = DelayModel::NoDelay;
        let result = run_experiment(cfg, random_agent(6), seeds(7)).unwrap();
        // Observation age at action computation is at most one actuation
        // cycle plus one environment-loop iteration.
        assert!(
            result.audit.max_obs_age <= Duration::from_millis(8) + Duration::from_micros(100),
            "max obs age {:?}",
            result.audit.max_obs_age
        );
    }

    #[test]
    fn reset_excluded_from_experience_steps() {
        let result = run_experiment(short_cfg(200), random_agent(7), seeds(8)).unwrap();
        assert_eq!(result.steps_done, 200);
        assert_eq!(result.agent_experience, Duration::from_secs(8));
        // Sim time includes resets, so it exceeds pure experience time.
        assert!(result.sim_elapsed > result.agent_experience);
        assert_eq!(result.reset_durations.len(), 2);
    }

    #[test]
    fn first_reset_from_start_posture_is_immediate() {
        let result = run_experiment(short_cfg(100), random_agent(8), seeds(9)).unwrap();
        // The arm starts at the start posture, so the first reset
        // converges on the first packet.
        assert!(result.reset_durations[0] <= Duration::from_millis(20));
    }

    #[test]
    fn reset_converges_in_about_a_second_from_small_displacement() {
        // Independent oracle: integrate the proportional law directly.
        let reset = ResetConfig::default();
        let mut err: f64 = 0.3;
        let mut t_oracle = 0.0;
        while err > reset.tolerance {
            let v = clip(reset.kp * err, -reset.speed_limit, reset.speed_limit);
            err -= v * 0.008;
            t_oracle += 0.008;
        }

        let mut cfg = short_cfg(100);
        cfg.status_medium = DelayModel::NoDelay;
        let mut rt = Runtime::new(cfg, random_agent(9), seeds(10)).unwrap();
        let mut q = rt.cfg.task.q_start;
        q[1] += 0.3;
        rt.arm_mut().set_joint_state(q, crate::util::VEC6_ZERO).unwrap();
        let result = rt.run().unwrap();
        let measured = result.reset_durations[0].as_secs_f64();
        assert!(
            (measured - t_oracle).abs() < 0.2,
            "reset took {measured}s, oracle {t_oracle}s"
        );
        assert!((0.8..1.6).contains(&measured), "{measured}");
    }

    #[test]
    fn virtual_runs_are_bit_deterministic() {
        let run = || {
            let r = run_experiment(short_cfg(600), random_agent(10), seeds(11)).unwrap();
            (
                r.episode_logs.iter().map(|e| e.episode_return).collect::<Vec<_>>(),
                r.audit,
            )
        };
        let (a_ret, a_audit) = run();
        let (b_ret, b_audit) = run();
        assert_eq!(a_ret, b_ret);
        assert_eq!(a_audit, b_audit);
    }

    #[test]
    fn trpo_agent_completes_updates() {
        let mut cfg = short_cfg(600);
        cfg.cycles.batch_episodes = 3;
        let streams = SeedStreams::derive(42);
        let mut policy_rng = streams.stream("policy");
        let task = Task::two_joint();
        let agent = Agent::Trpo(TrpoAgent {
            policy: GaussianPolicy::new(task.obs_dim(), 2, &[16, 16], &mut policy_rng),
            critic: Critic::new(task.obs_dim(), &[16, 16], &mut policy_rng),
            cfg: TrpoConfig::default(),
            exploration: streams.stream("exploration"),
        });
        let result = run_experiment(cfg, agent, streams.harness_seeds()).unwrap();
        assert_eq!(result.updates, 2);
        for rep in &result.update_reports {
            if rep.accepted {
                assert!(rep.kl <= 0.044);
            }
        }
    }

    #[test]
    fn real_time_mode_paces_against_wall_clock() {
        let mut cfg = short_cfg(5);
        cfg.clock = ClockMode::RealTime;
        cfg.cycles.action_cycle = Duration::from_millis(8);
        cfg.cycles.episode_length = Duration::from_millis(40);
        let wall = std::time::Instant::now();
        let result = run_experiment(cfg, random_agent(11), seeds(12)).unwrap();
        let elapsed = wall.elapsed();
        // Wall time must be at least the simulated span (no early firing).
        assert!(
            elapsed.as_secs_f64() >= result.sim_elapsed.as_secs_f64() * 0.9,
            "wall {elapsed:?} vs sim {:?}",
            result.sim_elapsed
        );
    }
}
