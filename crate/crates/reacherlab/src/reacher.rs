//! The reaching task: kinematics, observation assembly, reward, target
//! sampling, spatial/angular safety, and the two action spaces (direct
//! velocity control and smoothed position control).
//!
//! Two task variants exist. The planar variant actuates the second and
//! third joints from the base and confines the fingertip to a
//! 0.7 m x 0.5 m box; the six-joint variant actuates all joints inside a
//! 0.7 m x 0.5 m x 0.4 m box. The reward is the negative Euclidean
//! distance between fingertip and target.

use nalgebra::{Isometry3, Point3, Translation3, UnitQuaternion, Vector3};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::timebase::Duration;
use crate::ursim::{ActuationCommand, StatusPacket, DEFAULT_LOOKAHEAD, DEFAULT_SERVO_GAIN, TICK};
use crate::util::{clip, Vec6, VEC6_ZERO};

/// Task-level joint speed limit, rad/s.
pub const TASK_VELOCITY_LIMIT: f64 = 0.3;
/// Task-level leading-axis acceleration limit, rad/s^2.
pub const TASK_ACCEL_LIMIT: f64 = 1.4;
/// Box-enforcement margin, m.
pub const SAFETY_MARGIN: f64 = 0.02;
/// Deceleration limit used by protective stops, rad/s^2. Much harder
/// than the task limit so braking distance stays inside the margin.
pub const PROTECTIVE_DECEL: f64 = 10.0;
/// Commands stay valid for two actuation cycles, tolerating one missed
/// refresh before the controller decelerates.
pub const COMMAND_VALIDITY: Duration = Duration::from_millis(16);

/// Denavit-Hartenberg row: rotation `theta` about z, translation `d`
/// along z, translation `a` along x, rotation `alpha` about x.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DhRow {
    pub a: f64,
    pub d: f64,
    pub alpha: f64,
}

/// Standard UR5 DH table (configuration default, overridable).
pub const UR5_DH: [DhRow; 6] = [
    DhRow { a: 0.0, d: 0.089159, alpha: std::f64::consts::FRAC_PI_2 },
    DhRow { a: -0.425, d: 0.0, alpha: 0.0 },
    DhRow { a: -0.39225, d: 0.0, alpha: 0.0 },
    DhRow { a: 0.0, d: 0.10915, alpha: std::f64::consts::FRAC_PI_2 },
    DhRow { a: 0.0, d: 0.09465, alpha: -std::f64::consts::FRAC_PI_2 },
    DhRow { a: 0.0, d: 0.0823, alpha: 0.0 },
];

pub const TWO_JOINT_L1: f64 = 0.425;
pub const TWO_JOINT_L2: f64 = 0.392;

#[derive(Debug, Clone, PartialEq)]
pub enum KinematicChain {
    /// Planar two-link arm driven by joints 1 and 2 of the six-vector.
    TwoJoint { l1: f64, l2: f64 },
    SixJoint { dh: [DhRow; 6] },
}

impl KinematicChain {
    pub fn two_joint_default() -> Self {
        KinematicChain::TwoJoint { l1: TWO_JOINT_L1, l2: TWO_JOINT_L2 }
    }

    pub fn six_joint_default() -> Self {
        KinematicChain::SixJoint { dh: UR5_DH }
    }

    /// Dimension of the task space the fingertip lives in.
    pub fn task_dim(&self) -> usize {
        match self {
            KinematicChain::TwoJoint { .. } => 2,
            KinematicChain::SixJoint { .. } => 3,
        }
    }

    /// Indices of the actuated joints within the six-vector.
    pub fn actuated(&self) -> &'static [usize] {
        match self {
            KinematicChain::TwoJoint { .. } => &[1, 2],
            KinematicChain::SixJoint { .. } => &[0, 1, 2, 3, 4, 5],
        }
    }
}

/// Fingertip position for a joint configuration. The planar variant
/// returns `(x, y, 0)`; the spatial variant the flange point of the DH
/// chain.
pub fn fingertip_position(q: &Vec6, chain: &KinematicChain) -> [f64; 3] {
    match chain {
        KinematicChain::TwoJoint { l1, l2 } => {
            let (qa, qb) = (q[1], q[2]);
            [
                l1 * qa.cos() + l2 * (qa + qb).cos(),
                l1 * qa.sin() + l2 * (qa + qb).sin(),
                0.0,
            ]
        }
        KinematicChain::SixJoint { dh } => {
            let mut t = Isometry3::identity();
            for (row, theta) in dh.iter().zip(q.iter()) {
                let rot_z = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), *theta);
                let rot_x = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), row.alpha);
                let link = Isometry3::from_parts(Translation3::new(0.0, 0.0, row.d), rot_z)
                    * Isometry3::from_parts(Translation3::new(row.a, 0.0, 0.0), rot_x);
                t *= link;
            }
            let p = t.transform_point(&Point3::origin());
            [p.x, p.y, p.z]
        }
    }
}

/// Reward: negative Euclidean distance between fingertip and target over
/// the task dimensions.
pub fn reward(fingertip: &[f64; 3], target: &[f64; 3], dim: usize) -> f64 {
    -distance(fingertip, target, dim)
}

pub fn distance(a: &[f64; 3], b: &[f64; 3], dim: usize) -> f64 {
    a[..dim]
        .iter()
        .zip(&b[..dim])
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Error, PartialEq)]
pub enum TaskError {
    #[error("degenerate target box on axis {0}")]
    DegenerateBox(usize),
    #[error("two-link inverse kinematics target out of reach: {0}")]
    Unreachable(f64),
}

/// Spatial and angular safety envelope plus task motion limits.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskBounds {
    pub box_lo: [f64; 3],
    pub box_hi: [f64; 3],
    pub q_min: Vec6,
    pub q_max: Vec6,
    pub v_task: f64,
    pub a_task: f64,
    pub margin: f64,
}

impl TaskBounds {
    pub fn box_diagonal(&self, dim: usize) -> f64 {
        distance(&self.box_lo, &self.box_hi, dim)
    }

    pub fn contains(&self, p: &[f64; 3], dim: usize, slack: f64) -> bool {
        (0..dim).all(|a| p[a] >= self.box_lo[a] - slack && p[a] <= self.box_hi[a] + slack)
    }

    /// Largest per-axis excursion of `p` beyond the box (0 if inside).
    pub fn excursion(&self, p: &[f64; 3], dim: usize) -> f64 {
        (0..dim)
            .map(|a| (self.box_lo[a] - p[a]).max(p[a] - self.box_hi[a]).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// A fully specified task: chain, bounds and start posture.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub chain: KinematicChain,
    pub bounds: TaskBounds,
    pub q_start: Vec6,
}

/// Planar box center in the arm plane; chosen so the whole box lies in
/// the reachable annulus of the two-link arm.
pub const TWO_JOINT_BOX_CENTER: [f64; 2] = [0.4, 0.0];
/// Six-joint start posture (configuration constant); the task box is
/// centered on its fingertip position.
pub const SIX_JOINT_START: Vec6 = [0.0, -1.2, 1.6, -1.97, -std::f64::consts::FRAC_PI_2, 0.0];

impl Task {
    pub fn two_joint() -> Self {
        let chain = KinematicChain::two_joint_default();
        let (qa, qb) = two_link_ik(
            TWO_JOINT_BOX_CENTER[0],
            TWO_JOINT_BOX_CENTER[1],
            TWO_JOINT_L1,
            TWO_JOINT_L2,
        )
        .expect("box center is reachable");
        let q_start = [0.0, qa, qb, 0.0, 0.0, 0.0];
        let half = [0.35, 0.25, 0.0];
        let center = [TWO_JOINT_BOX_CENTER[0], TWO_JOINT_BOX_CENTER[1], 0.0];
        Self::with_bounds(chain, q_start, center, half)
    }

    pub fn six_joint() -> Self {
        let chain = KinematicChain::six_joint_default();
        let center = fingertip_position(&SIX_JOINT_START, &chain);
        Self::with_bounds(chain, SIX_JOINT_START, center, [0.35, 0.25, 0.2])
    }

    pub fn with_bounds(
        chain: KinematicChain,
        q_start: Vec6,
        center: [f64; 3],
        half: [f64; 3],
    ) -> Self {
        let mut q_min = VEC6_ZERO;
        let mut q_max = VEC6_ZERO;
        for j in 0..6 {
            q_min[j] = q_start[j] - std::f64::consts::FRAC_PI_2;
            q_max[j] = q_start[j] + std::f64::consts::FRAC_PI_2;
        }
        let mut box_lo = [0.0; 3];
        let mut box_hi = [0.0; 3];
        for a in 0..3 {
            box_lo[a] = center[a] - half[a];
            box_hi[a] = center[a] + half[a];
        }
        Task {
            chain,
            bounds: TaskBounds {
                box_lo,
                box_hi,
                q_min,
                q_max,
                v_task: TASK_VELOCITY_LIMIT,
                a_task: TASK_ACCEL_LIMIT,
                margin: SAFETY_MARGIN,
            },
            q_start,
        }
    }

    pub fn n_actuated(&self) -> usize {
        self.chain.actuated().len()
    }

    /// Observation length: angles + velocities + difference vector +
    /// previous action.
    pub fn obs_dim(&self) -> usize {
        2 * self.n_actuated() + self.chain.task_dim() + self.n_actuated()
    }
}

/// Closed-form planar two-link inverse kinematics, elbow-down branch.
pub fn two_link_ik(x: f64, y: f64, l1: f64, l2: f64) -> Result<(f64, f64), TaskError> {
    let d2 = x * x + y * y;
    let c = (d2 - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    if !(-1.0..=1.0).contains(&c) {
        return Err(TaskError::Unreachable(d2.sqrt()));
    }
    let qb = -c.acos();
    let qa = y.atan2(x) - (l2 * qb.sin()).atan2(l1 + l2 * qb.cos());
    Ok((qa, qb))
}

/// Uniform target inside the fingertip box, from the dedicated target
/// stream.
pub fn sample_target(
    rng: &mut ChaCha12Rng,
    bounds: &TaskBounds,
    dim: usize,
) -> Result<[f64; 3], TaskError> {
    let mut p = [0.0; 3];
    for a in 0..dim {
        if bounds.box_hi[a] <= bounds.box_lo[a] {
            return Err(TaskError::DegenerateBox(a));
        }
        p[a] = rng.gen_range(bounds.box_lo[a]..bounds.box_hi[a]);
    }
    Ok(p)
}

/// An observation plus the task-space quantities it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Scaled vector fed to the policy: angles / pi, velocities / v_task,
    /// (target - fingertip) / box diagonal, previous action as-is.
    pub values: Vec<f64>,
    pub fingertip: [f64; 3],
    pub distance: f64,
}

pub fn assemble_observation(
    packet: &StatusPacket,
    target: &[f64; 3],
    prev_action: &[f64],
    task: &Task,
) -> Observation {
    let actuated = task.chain.actuated();
    let dim = task.chain.task_dim();
    let fingertip = fingertip_position(&packet.q, &task.chain);
    let diag = task.bounds.box_diagonal(dim);
    let mut values = Vec::with_capacity(task.obs_dim());
    for &j in actuated {
        values.push(packet.q[j] / std::f64::consts::PI);
    }
    for &j in actuated {
        values.push(packet.qd[j] / task.bounds.v_task);
    }
    for a in 0..dim {
        values.push((target[a] - fingertip[a]) / diag);
    }
    values.extend_from_slice(prev_action);
    debug_assert_eq!(values.len(), task.obs_dim());
    let d = distance(&fingertip, target, dim);
    Observation { values, fingertip, distance: d }
}

/// Direct velocity control: clip to the task speed limit on actuated
/// joints, command zero elsewhere.
pub fn velocity_action_to_command(action: &[f64], task: &Task) -> ActuationCommand {
    let mut v = VEC6_ZERO;
    for (k, &j) in task.chain.actuated().iter().enumerate() {
        v[j] = clip(action[k], -task.bounds.v_task, task.bounds.v_task);
    }
    ActuationCommand::speedj(v, task.bounds.a_task, COMMAND_VALIDITY)
}

/// First-derivative state of the position smoother. Actions become a
/// proxy for the second derivative of the desired positions: the action
/// integrates (clipped) into `y`, and `y` integrates (clipped) into the
/// desired joint positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherState {
    pub y: Vec<f64>,
    pub tau: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl SmootherState {
    /// `tau` is the action cycle time in seconds.
    pub fn new(n: usize, tau: f64) -> Self {
        Self { y: vec![0.0; n], tau, y_min: -1.0, y_max: 1.0 }
    }
}

/// One smoothed-position step: update `y`, derive clipped desired
/// positions from the measured angles, and emit a position command.
pub fn smoothed_position_step(
    state: &mut SmootherState,
    action: &[f64],
    q_measured: &Vec6,
    task: &Task,
) -> ActuationCommand {
    let mut q_des = *q_measured;
    for (k, &j) in task.chain.actuated().iter().enumerate() {
        state.y[k] = clip(state.y[k] + state.tau * action[k], state.y_min, state.y_max);
        q_des[j] = clip(
            q_measured[j] + state.tau * state.y[k],
            task.bounds.q_min[j],
            task.bounds.q_max[j],
        );
    }
    let mut cmd =
        ActuationCommand::servoj(q_des, COMMAND_VALIDITY, DEFAULT_LOOKAHEAD, DEFAULT_SERVO_GAIN);
    cmd.accel_limit = task.bounds.a_task;
    cmd
}

/// Protective stop: a zero-velocity command with a hard deceleration
/// limit, expressible on the ordinary command wire.
pub fn protective_stop() -> ActuationCommand {
    ActuationCommand::speedj(VEC6_ZERO, PROTECTIVE_DECEL, COMMAND_VALIDITY)
}

/// Replace `cmd` with a protective stop if the packet shows the fingertip
/// outside the box (beyond margin), an actuated joint outside its angular
/// bounds, or motion that pushes further out while inside the margin band
/// of a face. The outward check is Jacobian-free: one tick of the
/// commanded motion is integrated through the forward kinematics.
pub fn safety_override(
    cmd: ActuationCommand,
    packet: &StatusPacket,
    task: &Task,
) -> ActuationCommand {
    use crate::ursim::CommandKind;
    let dim = task.chain.task_dim();
    let bounds = &task.bounds;
    let p = fingertip_position(&packet.q, &task.chain);

    for &j in task.chain.actuated() {
        if packet.q[j] < bounds.q_min[j] || packet.q[j] > bounds.q_max[j] {
            return protective_stop();
        }
    }
    if !bounds.contains(&p, dim, bounds.margin) {
        return protective_stop();
    }

    let dt = TICK.as_secs_f64();
    let v_eff: Vec6 = match cmd.kind {
        CommandKind::SpeedJ => cmd.values,
        CommandKind::ServoJ => {
            let horizon = cmd.lookahead.as_secs_f64().max(dt);
            let mut v = VEC6_ZERO;
            for j in 0..6 {
                v[j] = (cmd.values[j] - packet.q[j]) / horizon;
            }
            v
        }
        CommandKind::Stop => VEC6_ZERO,
    };
    let mut q_next = packet.q;
    for j in 0..6 {
        q_next[j] += v_eff[j] * dt;
    }
    let p_next = fingertip_position(&q_next, &task.chain);
    for a in 0..dim {
        let near_hi = p[a] > bounds.box_hi[a] - bounds.margin;
        let near_lo = p[a] < bounds.box_lo[a] + bounds.margin;
        if (near_hi && p_next[a] > p[a]) || (near_lo && p_next[a] < p[a]) {
            return protective_stop();
        }
    }
    cmd
}
