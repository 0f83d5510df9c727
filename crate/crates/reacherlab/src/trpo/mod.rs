//! From-scratch trust-region policy optimization.
//!
//! The policy is a diagonal Gaussian whose mean and log standard
//! deviation are two heads of a tanh MLP; the critic shares the trunk
//! shape with a scalar head. Updates maximize the importance-sampled
//! surrogate under a mean-KL constraint: the natural-gradient direction
//! comes from conjugate gradient against an analytic Fisher-vector
//! product (tangent pass, Gaussian metric weighting, reverse pass), the
//! step length from a backtracking line search that accepts the first
//! candidate improving the surrogate within the KL bound.

pub mod checkpoint;
pub mod net;

use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use net::Mlp;

pub const LOGSTD_MIN: f64 = -5.0;
pub const LOGSTD_MAX: f64 = 2.0;
const LN_2PI: f64 = 1.8378770664093453;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrpoConfig {
    pub gamma: f64,
    /// KL trust-region radius per update.
    pub delta: f64,
    pub cg_iters: usize,
    pub cg_damping: f64,
    pub backtrack_ratio: f64,
    pub max_backtracks: usize,
    pub critic_epochs: usize,
    pub critic_lr: f64,
    pub hidden: [usize; 2],
}

impl Default for TrpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.995,
            delta: 0.04,
            cg_iters: 10,
            cg_damping: 1e-5,
            backtrack_ratio: 0.8,
            max_backtracks: 10,
            critic_epochs: 5,
            critic_lr: 1e-3,
            hidden: [64, 64],
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TrpoError {
    #[error("non-finite value in {0}; parameters unchanged")]
    NonFinite(&'static str),
}

/// Gaussian MLP policy: mean head plus clamped log-std head.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub net: Mlp,
    pub obs_dim: usize,
    pub act_dim: usize,
}

impl GaussianPolicy {
    /// Mean head starts near zero; log-std head starts at -1 so initial
    /// exploration noise is moderate relative to the clipped action range.
    pub fn new(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut ChaCha12Rng) -> Self {
        let net = Mlp::init(obs_dim, hidden, &[(act_dim, 0.01, 0.0), (act_dim, 0.01, -1.0)], rng);
        Self { net, obs_dim, act_dim }
    }

    pub fn zeroed(obs_dim: usize, act_dim: usize, hidden: &[usize]) -> Self {
        Self { net: Mlp::zeros(obs_dim, hidden, &[act_dim, act_dim]), obs_dim, act_dim }
    }

    /// Deterministic forward pass: `(mean, std)` with
    /// `std = exp(clamp(logstd))`.
    pub fn forward(&self, obs: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(obs.len(), self.obs_dim, "observation dimension mismatch");
        let cache = self.net.forward(obs);
        let mean = cache.head_out[0].clone();
        let std = cache.head_out[1]
            .iter()
            .map(|l| l.clamp(LOGSTD_MIN, LOGSTD_MAX).exp())
            .collect();
        (mean, std)
    }
}

/// Value network with the same trunk shape as the policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Critic {
    pub net: Mlp,
    pub obs_dim: usize,
}

impl Critic {
    pub fn new(obs_dim: usize, hidden: &[usize], rng: &mut ChaCha12Rng) -> Self {
        Self { net: Mlp::init(obs_dim, hidden, &[(1, 1.0, 0.0)], rng), obs_dim }
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.net.forward(obs).head_out[0][0]
    }
}

pub fn sample_action(mean: &[f64], std: &[f64], rng: &mut ChaCha12Rng) -> Vec<f64> {
    mean.iter()
        .zip(std)
        .map(|(m, s)| {
            let z: f64 = StandardNormal.sample(rng);
            m + s * z
        })
        .collect()
}

/// Diagonal-Gaussian log density.
pub fn log_prob(mean: &[f64], std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(std)
        .zip(action)
        .map(|((m, s), a)| {
            let d = (a - m) / s;
            -0.5 * d * d - s.ln() - 0.5 * LN_2PI
        })
        .sum()
}

/// Discounted returns by backward recursion over one episode.
pub fn compute_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (i, r) in rewards.iter().enumerate().rev() {
        acc = r + gamma * acc;
        out[i] = acc;
    }
    out
}

/// Baseline-subtracted returns, standardized over the batch. A batch with
/// (numerically) constant raw advantages comes back as all zeros.
pub fn compute_advantages(returns: &[f64], values: &[f64]) -> Vec<f64> {
    assert_eq!(returns.len(), values.len());
    let n = returns.len();
    let raw: Vec<f64> = returns.iter().zip(values).map(|(g, v)| g - v).collect();
    let mean = raw.iter().sum::<f64>() / n as f64;
    let var = raw.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
    let sd = var.sqrt();
    if sd < 1e-8 {
        return vec![0.0; n];
    }
    raw.iter().map(|a| (a - mean) / (sd + 1e-8)).collect()
}

/// Per-sample KL(old || new) for diagonal Gaussians, summed over
/// dimensions.
pub fn gaussian_kl(old_mean: &[f64], old_std: &[f64], new_mean: &[f64], new_std: &[f64]) -> f64 {
    let mut kl = 0.0;
    for j in 0..old_mean.len() {
        let (m, s) = (old_mean[j], old_std[j]);
        let (m2, s2) = (new_mean[j], new_std[j]);
        kl += (s2 / s).ln() + (s * s + (m - m2) * (m - m2)) / (2.0 * s2 * s2) - 0.5;
    }
    kl
}

/// Fit the critic to the returns by full-batch gradient descent.
pub fn critic_fit(
    critic: &mut Critic,
    obs: &[Vec<f64>],
    returns: &[f64],
    cfg: &TrpoConfig,
) -> Result<(), TrpoError> {
    assert_eq!(obs.len(), returns.len());
    if obs.is_empty() || cfg.critic_epochs == 0 {
        return Ok(());
    }
    let n = obs.len() as f64;
    let saved = critic.net.flat_params();
    for _ in 0..cfg.critic_epochs {
        let mut grad = vec![0.0; critic.net.param_count()];
        let mut loss = 0.0;
        for (o, g) in obs.iter().zip(returns) {
            let cache = critic.net.forward(o);
            let v = cache.head_out[0][0];
            let err = v - g;
            loss += err * err / n;
            critic.net.backward(&cache, &[vec![2.0 * err / n]], &mut grad);
        }
        if !loss.is_finite() {
            critic.net.set_flat_params(&saved);
            return Err(TrpoError::NonFinite("critic loss"));
        }
        let mut theta = critic.net.flat_params();
        for (t, g) in theta.iter_mut().zip(&grad) {
            *t -= cfg.critic_lr * g;
        }
        critic.net.set_flat_params(&theta);
    }
    Ok(())
}

/// Approximately solve `F x = b` for a symmetric positive semi-definite
/// operator by conjugate gradient.
pub fn conjugate_gradient(
    mut fvp: impl FnMut(&[f64]) -> Vec<f64>,
    b: &[f64],
    iters: usize,
    residual_tol: f64,
) -> Result<Vec<f64>, TrpoError> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = b.to_vec();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    for _ in 0..iters {
        if rr.sqrt() < residual_tol {
            break;
        }
        let fp = fvp(&p);
        let pfp: f64 = p.iter().zip(&fp).map(|(a, b)| a * b).sum();
        if !pfp.is_finite() || pfp <= 0.0 {
            return Err(TrpoError::NonFinite("conjugate gradient curvature"));
        }
        let alpha = rr / pfp;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * fp[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        if !rr_new.is_finite() {
            return Err(TrpoError::NonFinite("conjugate gradient residual"));
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Ok(x)
}

/// Flattened transitions from one update batch.
#[derive(Debug, Clone, Default)]
pub struct Batch {
    pub obs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub rewards: Vec<f64>,
    pub episode_lens: Vec<usize>,
    pub returns: Vec<f64>,
    pub values: Vec<f64>,
    pub advantages: Vec<f64>,
}

impl Batch {
    pub fn push_episode(&mut self, obs: Vec<Vec<f64>>, actions: Vec<Vec<f64>>, rewards: Vec<f64>) {
        assert_eq!(obs.len(), actions.len());
        assert_eq!(obs.len(), rewards.len());
        self.episode_lens.push(obs.len());
        self.obs.extend(obs);
        self.actions.extend(actions);
        self.rewards.extend(rewards);
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn episodes(&self) -> usize {
        self.episode_lens.len()
    }

    /// Compute per-episode returns (no bootstrapping across boundaries),
    /// critic values and normalized advantages.
    pub fn prepare(&mut self, critic: &Critic, gamma: f64) {
        self.returns.clear();
        let mut off = 0;
        for &len in &self.episode_lens {
            self.returns.extend(compute_returns(&self.rewards[off..off + len], gamma));
            off += len;
        }
        self.values = self.obs.iter().map(|o| critic.value(o)).collect();
        self.advantages = compute_advantages(&self.returns, &self.values);
    }
}

/// Surrogate objective `mean[exp(logpi - logpi_old) * A]` and its
/// gradient at the current parameters.
pub fn surrogate_and_grad(
    policy: &GaussianPolicy,
    batch: &Batch,
    logp_old: &[f64],
) -> (f64, Vec<f64>) {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; policy.net.param_count()];
    let mut surr = 0.0;
    for i in 0..batch.len() {
        let cache = policy.net.forward(&batch.obs[i]);
        let mean = &cache.head_out[0];
        let raw_logstd = &cache.head_out[1];
        let std: Vec<f64> =
            raw_logstd.iter().map(|l| l.clamp(LOGSTD_MIN, LOGSTD_MAX).exp()).collect();
        let lp = log_prob(mean, &std, &batch.actions[i]);
        let ratio = (lp - logp_old[i]).exp();
        let w = ratio * batch.advantages[i] / n;
        surr += ratio * batch.advantages[i] / n;
        let mut d_mean = vec![0.0; policy.act_dim];
        let mut d_logstd = vec![0.0; policy.act_dim];
        for j in 0..policy.act_dim {
            let z = (batch.actions[i][j] - mean[j]) / std[j];
            d_mean[j] = w * z / std[j];
            let inside = (LOGSTD_MIN..LOGSTD_MAX).contains(&raw_logstd[j]);
            d_logstd[j] = if inside { w * (z * z - 1.0) } else { 0.0 };
        }
        policy.net.backward(&cache, &[d_mean, d_logstd], &mut grad);
    }
    (surr, grad)
}

pub fn surrogate_value(policy: &GaussianPolicy, batch: &Batch, logp_old: &[f64]) -> f64 {
    let n = batch.len() as f64;
    (0..batch.len())
        .map(|i| {
            let (mean, std) = policy.forward(&batch.obs[i]);
            let lp = log_prob(&mean, &std, &batch.actions[i]);
            (lp - logp_old[i]).exp() * batch.advantages[i] / n
        })
        .sum()
}

/// Mean KL(old || current) over the batch.
pub fn kl_mean(policy: &GaussianPolicy, batch: &Batch, old: &[(Vec<f64>, Vec<f64>)]) -> f64 {
    let n = batch.len() as f64;
    (0..batch.len())
        .map(|i| {
            let (mean, std) = policy.forward(&batch.obs[i]);
            gaussian_kl(&old[i].0, &old[i].1, &mean, &std)
        })
        .sum::<f64>()
        / n
}

/// Gradient of the mean KL(old || current) w.r.t. the current parameters.
pub fn kl_grad(policy: &GaussianPolicy, batch: &Batch, old: &[(Vec<f64>, Vec<f64>)]) -> Vec<f64> {
    let n = batch.len() as f64;
    let mut grad = vec![0.0; policy.net.param_count()];
    for i in 0..batch.len() {
        let cache = policy.net.forward(&batch.obs[i]);
        let mean = &cache.head_out[0];
        let raw_logstd = &cache.head_out[1];
        let (old_mean, old_std) = &old[i];
        let mut d_mean = vec![0.0; policy.act_dim];
        let mut d_logstd = vec![0.0; policy.act_dim];
        for j in 0..policy.act_dim {
            let l = raw_logstd[j].clamp(LOGSTD_MIN, LOGSTD_MAX);
            let s_new = l.exp();
            let dm = mean[j] - old_mean[j];
            d_mean[j] = dm / (s_new * s_new) / n;
            let inside = (LOGSTD_MIN..LOGSTD_MAX).contains(&raw_logstd[j]);
            let dl = 1.0 - (old_std[j] * old_std[j] + dm * dm) / (s_new * s_new);
            d_logstd[j] = if inside { dl / n } else { 0.0 };
        }
        policy.net.backward(&cache, &[d_mean, d_logstd], &mut grad);
    }
    grad
}

/// Fisher-vector product of the mean KL at the current parameters:
/// a forward-mode tangent pass through the network, the Gaussian metric
/// weighting (`1/sigma^2` on mean coordinates, `2` on log-std
/// coordinates), then a reverse pass, plus damping.
pub fn fisher_vector_product(
    policy: &GaussianPolicy,
    obs: &[Vec<f64>],
    v: &[f64],
    damping: f64,
) -> Vec<f64> {
    let n = obs.len() as f64;
    let mut out = vec![0.0; policy.net.param_count()];
    for o in obs {
        let cache = policy.net.forward(o);
        let raw_logstd = &cache.head_out[1];
        let tangents = policy.net.jvp(o, v);
        let mut w_mean = vec![0.0; policy.act_dim];
        let mut w_logstd = vec![0.0; policy.act_dim];
        for j in 0..policy.act_dim {
            let inside = (LOGSTD_MIN..LOGSTD_MAX).contains(&raw_logstd[j]);
            let s = raw_logstd[j].clamp(LOGSTD_MIN, LOGSTD_MAX).exp();
            w_mean[j] = tangents[0][j] / (s * s) / n;
            w_logstd[j] = if inside { 2.0 * tangents[1][j] / n } else { 0.0 };
        }
        policy.net.backward(&cache, &[w_mean, w_logstd], &mut out);
    }
    for (o, vi) in out.iter_mut().zip(v) {
        *o += damping * vi;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateReport {
    pub accepted: bool,
    pub kl: f64,
    pub surrogate_gain: f64,
    pub backtracks: usize,
}

impl UpdateReport {
    fn unchanged() -> Self {
        Self { accepted: false, kl: 0.0, surrogate_gain: 0.0, backtracks: 0 }
    }
}

/// One KL-constrained natural-gradient update. On any failure (zero
/// gradient, bad curvature, exhausted line search) the policy parameters
/// are left exactly as they were.
pub fn trpo_update(
    policy: &mut GaussianPolicy,
    batch: &Batch,
    cfg: &TrpoConfig,
) -> Result<UpdateReport, TrpoError> {
    assert_eq!(batch.advantages.len(), batch.len(), "batch must be prepared");
    if batch.is_empty() {
        return Ok(UpdateReport::unchanged());
    }
    let old: Vec<(Vec<f64>, Vec<f64>)> =
        batch.obs.iter().map(|o| policy.forward(o)).collect();
    let logp_old: Vec<f64> = (0..batch.len())
        .map(|i| log_prob(&old[i].0, &old[i].1, &batch.actions[i]))
        .collect();

    let (surr0, g) = surrogate_and_grad(policy, batch, &logp_old);
    if g.iter().any(|x| !x.is_finite()) {
        return Err(TrpoError::NonFinite("surrogate gradient"));
    }
    let gmax = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if gmax < 1e-12 {
        return Ok(UpdateReport::unchanged());
    }

    let s = conjugate_gradient(
        |v| fisher_vector_product(policy, &batch.obs, v, cfg.cg_damping),
        &g,
        cfg.cg_iters,
        1e-10,
    )?;
    let fs = fisher_vector_product(policy, &batch.obs, &s, cfg.cg_damping);
    let shs: f64 = s.iter().zip(&fs).map(|(a, b)| a * b).sum();
    if !shs.is_finite() || shs <= 0.0 {
        return Err(TrpoError::NonFinite("step curvature"));
    }
    let full_step = (2.0 * cfg.delta / shs).sqrt();

    let theta_old = policy.net.flat_params();
    let mut scale = full_step;
    for k in 0..=cfg.max_backtracks {
        let theta: Vec<f64> =
            theta_old.iter().zip(&s).map(|(t, si)| t + scale * si).collect();
        policy.net.set_flat_params(&theta);
        let kl = kl_mean(policy, batch, &old);
        let surr = surrogate_value(policy, batch, &logp_old);
        if kl.is_finite() && surr.is_finite() && kl <= cfg.delta && surr - surr0 > 0.0 {
            return Ok(UpdateReport {
                accepted: true,
                kl,
                surrogate_gain: surr - surr0,
                backtracks: k,
            });
        }
        scale *= cfg.backtrack_ratio;
    }
    policy.net.set_flat_params(&theta_old);
    Ok(UpdateReport::unchanged())
}
