//! Model predictive path integral planning over any [`DynamicsModel`].
//!
//! The plan buffer holds the last `ω̄` executed actions followed by `N`
//! planned actions, all in physical units. Each call perturbs the planned part
//! with correlated Gaussian noise in normalized units (actions divided by
//! `a_max`), rolls every perturbed plan through the model with the full
//! history window, and moves the plan towards the exponentially
//! return-weighted average perturbation.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::envs::{raw_from_observation, reward_raw, EnvSpec};
use crate::error::{Error, Result};
use crate::models::{DynamicsModel, HistoryBatch, StateSpace};

/// Reward added for every rollout step whose state violates the constraint.
pub const CONSTRAINT_PENALTY: f64 = -1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct MppiConfig {
    /// Planning steps N.
    pub horizon: usize,
    /// Sampled rollouts M.
    pub rollouts: usize,
    pub lambda: f64,
    pub sigma: f64,
    /// Planning interval δ in seconds.
    pub delta: f64,
    /// Executed actions kept in front of the plan (ω̄).
    pub history_steps: usize,
    pub a_max: Vec<f64>,
}

impl MppiConfig {
    pub fn new(spec: &EnvSpec, delta: f64) -> Self {
        Self {
            horizon: 40,
            rollouts: 1000,
            lambda: 1.0,
            sigma: 1.0,
            delta,
            history_steps: history_steps(spec),
            a_max: spec.a_max.clone(),
        }
    }

    /// Horizon H = δ·N in seconds.
    pub fn horizon_seconds(&self) -> f64 {
        self.delta * self.horizon as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 || self.rollouts == 0 {
            return Err(Error::Config("MPPI needs N ≥ 1 and M ≥ 1".into()));
        }
        if !(self.lambda > 0.0) || !(self.sigma >= 0.0) || !(self.delta > 0.0) {
            return Err(Error::Config(format!("invalid MPPI constants λ={} σ={} δ={}", self.lambda, self.sigma, self.delta)));
        }
        if self.a_max.is_empty() || self.a_max.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Config("a_max must be positive".into()));
        }
        Ok(())
    }
}

/// Past plan rows kept in front of the plan: ω/Δ̄ steps whatever the planning interval,
/// so the per-evaluation cost does not depend on δ.
pub fn history_steps(spec: &EnvSpec) -> usize {
    ((spec.omega / spec.delta_bar).round() as usize).min(crate::models::MAX_HISTORY - 1)
}

/// Action-noise covariance Σ with its Cholesky factor and inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseCovariance {
    pub dim: usize,
    pub cov: Vec<f64>,
    pub chol: Vec<f64>,
    pub inv: Vec<f64>,
}

impl NoiseCovariance {
    /// `[σ²]` for one action, `[[σ², σ²/2], [σ²/2, σ²]]` for two.
    pub fn new(dim: usize, sigma: f64) -> Result<Self> {
        let s2 = sigma * sigma;
        let cov = match dim {
            1 => vec![s2],
            2 => vec![s2, 0.5 * s2, 0.5 * s2, s2],
            _ => return Err(Error::Config(format!("no noise covariance for {dim} action dimensions"))),
        };
        if sigma == 0.0 {
            return Ok(Self { dim, chol: vec![0.0; dim * dim], inv: vec![0.0; dim * dim], cov });
        }
        let (chol, inv) = match dim {
            1 => (vec![sigma], vec![1.0 / s2]),
            _ => {
                let l11 = cov[0].sqrt();
                let l21 = cov[2] / l11;
                let l22 = (cov[3] - l21 * l21).sqrt();
                let det = cov[0] * cov[3] - cov[1] * cov[2];
                (vec![l11, 0.0, l21, l22], vec![cov[3] / det, -cov[1] / det, -cov[2] / det, cov[0] / det])
            }
        };
        Ok(Self { dim, cov, chol, inv })
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let mut z = [0.0; 2];
        for v in z.iter_mut().take(self.dim) {
            *v = StandardNormal.sample(rng);
        }
        for i in 0..self.dim {
            out[i] = (0..=i).map(|j| self.chol[i * self.dim + j] * z[j]).sum();
        }
    }

    /// `aᵀ Σ⁻¹ e`.
    pub fn quad(&self, a: &[f64], e: &[f64]) -> f64 {
        let d = self.dim;
        (0..d).map(|i| a[i] * (0..d).map(|j| self.inv[i * d + j] * e[j]).sum::<f64>()).sum()
    }
}

/// Executed-action tail followed by the planned actions, physical units.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanBuffer {
    pub past: usize,
    pub horizon: usize,
    pub action_dim: usize,
    data: Vec<f64>,
}

impl PlanBuffer {
    pub fn zeros(past: usize, horizon: usize, action_dim: usize) -> Self {
        Self { past, horizon, action_dim, data: vec![0.0; (past + horizon) * action_dim] }
    }

    pub fn for_config(cfg: &MppiConfig) -> Self {
        Self::zeros(cfg.history_steps, cfg.horizon, cfg.a_max.len())
    }

    pub fn len(&self) -> usize {
        self.past + self.horizon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row `i` with `i ∈ [−past, horizon)`; negative rows are executed actions.
    pub fn row(&self, i: isize) -> &[f64] {
        let r = (i + self.past as isize) as usize;
        &self.data[r * self.action_dim..(r + 1) * self.action_dim]
    }

    pub fn row_mut(&mut self, i: isize) -> &mut [f64] {
        let r = (i + self.past as isize) as usize;
        &mut self.data[r * self.action_dim..(r + 1) * self.action_dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Moves every row one step earlier and appends a zero action.
    pub fn shift(&mut self) {
        let d = self.action_dim;
        self.data.drain(..d);
        self.data.extend(std::iter::repeat(0.0).take(d));
    }

    /// Overwrites the most recent executed action.
    pub fn record_executed(&mut self, action: &[f64]) {
        if self.past > 0 {
            self.row_mut(-1).copy_from_slice(action);
        }
    }
}

/// State predicate; `true` means the constraint is violated.
pub type Constraint = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Counters accumulated over the planner's lifetime.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MppiStats {
    pub policy_steps: u64,
    pub model_calls: u64,
    pub model_evaluations: u64,
    pub non_finite_returns: u64,
}

/// Normalized weights `exp((R_m − max R)/λ) / Σ`, zero for non-finite returns.
///
/// Shifting by the maximum leaves the normalized weights unchanged and keeps
/// every exponent non-positive.
pub fn return_weights(returns: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let kappa = returns.iter().copied().filter(|r| r.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !kappa.is_finite() {
        return None;
    }
    let mut w: Vec<f64> = returns.iter().map(|&r| if r.is_finite() { ((r - kappa) / lambda).exp() } else { 0.0 }).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Some(w)
}

/// Planner reward evaluated on a model-space state.
pub fn planner_reward(spec: &EnvSpec, space: StateSpace, state: &[f64], action: &[f64]) -> f64 {
    match space {
        StateSpace::Raw => reward_raw(spec, state, action, true),
        StateSpace::Observation => {
            let mut raw = [0.0; 4];
            let n = spec.state_dim();
            raw_from_observation(spec, state, &mut raw[..n]);
            reward_raw(spec, &raw[..n], action, true)
        }
    }
}

pub struct Mppi {
    pub cfg: MppiConfig,
    pub spec: EnvSpec,
    pub noise: NoiseCovariance,
    pub constraint: Option<Constraint>,
    pub stats: MppiStats,
    rng: ChaCha8Rng,
}

/// Per-rollout returns and the sampled (post-clip) noise of one optimization.
#[derive(Clone, Debug)]
pub struct RolloutBatch {
    pub returns: Vec<f64>,
    /// `[M × N × d]`, normalized units.
    pub noise: Vec<f64>,
}

impl Mppi {
    pub fn new(spec: &EnvSpec, cfg: MppiConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if cfg.a_max.len() != spec.action_dim() {
            return Err(Error::Config("a_max does not match the environment's action dimension".into()));
        }
        let noise = NoiseCovariance::new(cfg.a_max.len(), cfg.sigma)?;
        Ok(Self { cfg, spec: spec.clone(), noise, constraint: None, stats: MppiStats::default(), rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn with_constraint(mut self, c: Constraint) -> Self {
        self.constraint = Some(c);
        self
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Samples perturbations and evaluates every rollout from state `x`.
    pub fn rollouts(&mut self, model: &dyn DynamicsModel, x: &[f64], plan: &PlanBuffer) -> Result<RolloutBatch> {
        let (m_count, n_steps, p) = (self.cfg.rollouts, self.cfg.horizon, self.cfg.history_steps);
        let d = self.cfg.a_max.len();
        let dx = model.state_dim();
        if plan.horizon != n_steps || plan.past != p || plan.action_dim != d || model.action_dim() != d || x.len() != dx {
            return Err(Error::Dimension { op: "mppi", detail: "plan buffer, model and configuration disagree".into() });
        }
        let a_max = &self.cfg.a_max;
        let nominal: Vec<f64> = (0..n_steps as isize)
            .flat_map(|n| plan.row(n).iter().zip(a_max).map(|(a, m)| a / m).collect::<Vec<_>>())
            .collect();
        let past: Vec<f64> = (-(p as isize)..0)
            .flat_map(|j| plan.row(j).iter().zip(a_max).map(|(a, m)| a / m).collect::<Vec<_>>())
            .collect();

        // perturbed plans A' and post-clip noise, both normalized
        let mut perturbed = vec![0.0; m_count * n_steps * d];
        let mut noise = vec![0.0; m_count * n_steps * d];
        let mut eps = [0.0; 2];
        for m in 0..m_count {
            for n in 0..n_steps {
                self.noise.sample(&mut self.rng, &mut eps[..d]);
                for i in 0..d {
                    let o = (m * n_steps + n) * d + i;
                    let a = nominal[n * d + i];
                    let ap = (a + eps[i]).clamp(-1.0, 1.0);
                    perturbed[o] = ap;
                    noise[o] = ap - a;
                }
            }
        }

        let space = model.state_space();
        let mut states: Vec<f64> = x.iter().copied().cycle().take(m_count * dx).collect();
        let mut returns = vec![0.0; m_count];
        let mut hist = HistoryBatch::uniform(m_count, p + 1, d);
        for m in 0..m_count {
            for k in 0..=p {
                hist.rel_times[m * (p + 1) + k] = (k as f64 - p as f64) * self.cfg.delta;
            }
        }
        let mut phys = vec![0.0; d];
        for n in 0..n_steps {
            for m in 0..m_count {
                for k in 0..=p {
                    let j = n as isize + k as isize - p as isize;
                    let src = if j < 0 {
                        &past[((j + p as isize) as usize) * d..((j + p as isize) as usize + 1) * d]
                    } else {
                        let o = (m * n_steps + j as usize) * d;
                        &perturbed[o..o + d]
                    };
                    let dst = hist.action_mut(m, k);
                    for i in 0..d {
                        dst[i] = src[i] * a_max[i];
                    }
                }
            }
            let next = model.predict_batch(&states, &hist, self.cfg.delta)?;
            self.stats.model_calls += 1;
            self.stats.model_evaluations += m_count as u64;
            for m in 0..m_count {
                let s = &next[m * dx..(m + 1) * dx];
                let a = &nominal[n * d..(n + 1) * d];
                for i in 0..d {
                    phys[i] = a[i] * a_max[i];
                }
                let e = &noise[(m * n_steps + n) * d..(m * n_steps + n + 1) * d];
                let mut r = planner_reward(&self.spec, space, s, &phys) - self.cfg.lambda * self.noise.quad(a, e);
                if let Some(c) = &self.constraint {
                    if c(s) {
                        r += CONSTRAINT_PENALTY;
                    }
                }
                returns[m] += r;
            }
            states = next;
        }
        Ok(RolloutBatch { returns, noise })
    }

    /// One return-weighted update of the planned part of `plan`.
    pub fn optimize_trajectory(&mut self, model: &dyn DynamicsModel, x: &[f64], plan: &PlanBuffer) -> Result<PlanBuffer> {
        let batch = self.rollouts(model, x, plan)?;
        self.stats.non_finite_returns += batch.returns.iter().filter(|r| !r.is_finite()).count() as u64;
        let mut out = plan.clone();
        let Some(w) = return_weights(&batch.returns, self.cfg.lambda) else {
            log::warn!("every MPPI rollout returned a non-finite value; plan left unchanged");
            return Ok(out);
        };
        let (n_steps, d) = (self.cfg.horizon, self.cfg.a_max.len());
        for n in 0..n_steps {
            for i in 0..d {
                let mut acc = 0.0;
                for (m, wm) in w.iter().enumerate() {
                    acc += wm * batch.noise[(m * n_steps + n) * d + i];
                }
                let a_max = self.cfg.a_max[i];
                let a = plan.row(n as isize)[i] / a_max;
                out.row_mut(n as isize)[i] = ((a + acc).clamp(-1.0, 1.0)) * a_max;
            }
        }
        Ok(out)
    }

    /// Optimizes, returns the first planned action and advances the buffer.
    pub fn policy_step(&mut self, model: &dyn DynamicsModel, x: &[f64], plan: &mut PlanBuffer) -> Result<Vec<f64>> {
        *plan = self.optimize_trajectory(model, x, plan)?;
        let action = plan.row(0).to_vec();
        plan.shift();
        self.stats.policy_steps += 1;
        Ok(action)
    }
}
