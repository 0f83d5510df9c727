//! Glue from an [`ExperimentConfig`] to a runnable harness setup, plus
//! directory-level run/replay entry points.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::harness::{
    run_experiment, Agent, CycleConfig, HarnessConfig, HarnessError, HarnessSeeds, ProbeConfig,
    ResetConfig, RunResult, TrpoAgent,
};
use crate::reacher::{fingertip_position, two_link_ik, Task, KinematicChain};
use crate::timebase::Duration;
use crate::trpo::{Critic, GaussianPolicy, TrpoConfig};
use crate::xlab::config::{AgentKind, ConfigError, ExperimentConfig, Medium, TaskVariant};
use crate::xlab::output::{
    write_arrivals_csv, write_metadata, write_run_csv, write_signal_csv, OutputError, RunMetadata,
};
use crate::xlab::SeedStreams;
use crate::linksim::DelayModel;

#[derive(Debug, Error)]
pub enum XlabError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Output(#[from] OutputError),
}

/// Construct the task for a config, applying kinematics/bounds overrides.
pub fn build_task(cfg: &ExperimentConfig) -> Task {
    let ov = &cfg.overrides;
    let mut task = match cfg.task {
        TaskVariant::TwoJoint => {
            let l1 = ov.l1.unwrap_or(crate::reacher::TWO_JOINT_L1);
            let l2 = ov.l2.unwrap_or(crate::reacher::TWO_JOINT_L2);
            let chain = KinematicChain::TwoJoint { l1, l2 };
            let center = [
                crate::reacher::TWO_JOINT_BOX_CENTER[0],
                crate::reacher::TWO_JOINT_BOX_CENTER[1],
                0.0,
            ];
            let (qa, qb) = two_link_ik(center[0], center[1], l1, l2)
                .expect("box center within reach");
            let half = ov.box_half.unwrap_or([0.35, 0.25, 0.0]);
            Task::with_bounds(chain, [0.0, qa, qb, 0.0, 0.0, 0.0], center, half)
        }
        TaskVariant::SixJoint => {
            let chain = KinematicChain::six_joint_default();
            let center = fingertip_position(&crate::reacher::SIX_JOINT_START, &chain);
            let half = ov.box_half.unwrap_or([0.35, 0.25, 0.2]);
            Task::with_bounds(chain, crate::reacher::SIX_JOINT_START, center, half)
        }
    };
    if let Some(r) = ov.angle_half_range {
        for j in 0..6 {
            task.bounds.q_min[j] = task.q_start[j] - r;
            task.bounds.q_max[j] = task.q_start[j] + r;
        }
    }
    if cfg.probe_ticks.is_some() {
        // Probes roam freely: the box and angular bounds are opened wide
        // so the measurement reflects the controller pipeline alone.
        for a in 0..3 {
            let c = (task.bounds.box_lo[a] + task.bounds.box_hi[a]) / 2.0;
            let half = (task.bounds.box_hi[a] - task.bounds.box_lo[a]) / 2.0;
            task.bounds.box_lo[a] = c - half * 1e3 - 10.0;
            task.bounds.box_hi[a] = c + half * 1e3 + 10.0;
        }
        for j in 0..6 {
            task.bounds.q_min[j] = task.q_start[j] - 1e3;
            task.bounds.q_max[j] = task.q_start[j] + 1e3;
        }
    }
    task
}

/// Build the harness configuration, the agent and the seed bundle for one
/// experiment.
pub fn prepare(cfg: &ExperimentConfig) -> Result<(HarnessConfig, Agent, HarnessSeeds), XlabError> {
    cfg.validate()?;
    let task = build_task(cfg);
    let streams = SeedStreams::derive(cfg.seed);

    let (status_medium, command_medium) = match cfg.medium {
        Medium::Wired => (DelayModel::wired_default(), DelayModel::NoDelay),
        Medium::Wireless => (
            DelayModel::wireless_status_default(),
            DelayModel::wireless_command_default(),
        ),
    };

    let harness = HarnessConfig {
        cycles: CycleConfig {
            action_cycle: Duration::from_millis(cfg.action_cycle_ms),
            actuation_cycle: Duration::from_millis(8),
            episode_length: Duration::from_millis(crate::xlab::config::EPISODE_MS),
            batch_episodes: cfg.batch_episodes,
        },
        action_space: cfg.action_space,
        status_medium,
        command_medium,
        action_delay_mean: cfg.action_delay_ms.map(|ms| Duration::from_secs_f64(ms / 1e3)),
        actuation_delay_mean: cfg.actuation_delay_ms.map(|ms| Duration::from_secs_f64(ms / 1e3)),
        clock: cfg.clock,
        total_steps: cfg.total_steps,
        ursim: crate::ursim::UrSimConfig::default(),
        reset: ResetConfig {
            timeout: Duration::from_secs_f64(cfg.reset_timeout_s),
            ..ResetConfig::default()
        },
        actuator_phase: Duration::from_millis(1),
        safety: cfg.probe_ticks.is_none(),
        event_log: false,
        probe: cfg.probe_ticks.map(|ticks| ProbeConfig { ticks, warmup_ticks: 10 }),
        task,
    };

    let agent = match cfg.agent {
        AgentKind::Random => Agent::Random { rng: streams.exploration() },
        AgentKind::Trpo => {
            let mut policy_rng = streams.policy();
            let obs_dim = harness.task.obs_dim();
            let act_dim = harness.task.n_actuated();
            let policy = GaussianPolicy::new(obs_dim, act_dim, &cfg.hidden, &mut policy_rng);
            let critic = Critic::new(obs_dim, &cfg.hidden, &mut policy_rng);
            Agent::Trpo(TrpoAgent {
                policy,
                critic,
                cfg: TrpoConfig { hidden: cfg.hidden, ..TrpoConfig::default() },
                exploration: streams.exploration(),
            })
        }
    };

    Ok((harness, agent, streams.harness_seeds()))
}

/// Run one experiment in memory.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunResult, XlabError> {
    let (harness, agent, seeds) = prepare(cfg)?;
    Ok(run_experiment(harness, agent, seeds)?)
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub result: RunResult,
    pub csv: PathBuf,
    pub metadata: PathBuf,
    pub signals: Option<PathBuf>,
    pub arrivals: Option<PathBuf>,
}

/// Run and write `results.csv` + `metadata.json` (plus `signals.csv` and
/// `arrivals.csv` for probe runs) into `dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<RunArtifacts, XlabError> {
    std::fs::create_dir_all(dir).map_err(|source| {
        XlabError::Output(OutputError::Io { path: dir.to_path_buf(), source })
    })?;
    let result = execute(cfg)?;
    let csv = dir.join("results.csv");
    write_run_csv(&result, &csv)?;
    let metadata = dir.join("metadata.json");
    write_metadata(&RunMetadata::new(cfg), &metadata)?;
    let mut signals = None;
    let mut arrivals = None;
    if let Some(probe) = &result.probe {
        let spath = dir.join("signals.csv");
        write_signal_csv(probe, &spath)?;
        signals = Some(spath);
        let apath = dir.join("arrivals.csv");
        write_arrivals_csv(&probe.deliveries, &apath)?;
        arrivals = Some(apath);
    }
    Ok(RunArtifacts { result, csv, metadata, signals, arrivals })
}

/// Re-execute a run from its metadata sidecar.
pub fn replay(metadata_path: &Path, out_dir: &Path) -> Result<RunArtifacts, XlabError> {
    let meta = crate::xlab::output::read_metadata(metadata_path)?;
    run_to_dir(&meta.config, out_dir)
}
