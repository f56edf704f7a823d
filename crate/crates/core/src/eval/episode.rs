use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envs::{raw_from_observation, reward_raw, EnvSpec, EnvState};
use crate::error::{Error, Result};
use crate::policy::{Observed, Policy};

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeConfig {
    /// Fixed observation interval δ.
    pub delta: f64,
    pub seconds: f64,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn new(spec: &EnvSpec, seed: u64) -> Self {
        Self { delta: spec.delta_bar, seconds: 10.0, seed }
    }

    pub fn steps(&self) -> usize {
        (self.seconds / self.delta - 1e-9).ceil() as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult {
    pub seed: u64,
    /// Un-discounted sum of the exponential-form reward.
    pub reward: f64,
    /// Sum of the planner-form reward, for reference.
    pub planner_reward: f64,
    pub steps: usize,
    /// Mean wall-clock seconds per `act` call.
    pub planning_seconds: f64,
    /// The environment diverged; rewards are partial.
    pub failed: bool,
    /// Raw states at every decision time plus the final state.
    pub states: Vec<Vec<f64>>,
}

impl EpisodeResult {
    pub fn average_reward(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.reward / self.steps as f64
        }
    }
}

/// Closed loop at fixed interval: observe, plan, act, advance the delayed environment by δ.
///
/// Each step is scored with the post-transition state and the executed action.
pub fn run_episode(policy: &mut dyn Policy, spec: &EnvSpec, cfg: &EpisodeConfig) -> Result<EpisodeResult> {
    if !(cfg.delta > 0.0) || !(cfg.seconds > 0.0) {
        return Err(Error::Config(format!("invalid episode δ={} length={}", cfg.delta, cfg.seconds)));
    }
    let mut env = EnvState::reset(spec, cfg.seed);
    let mut obs_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0b5e_47a7_10b5);
    policy.reset(cfg.seed);
    let mut out = EpisodeResult {
        seed: cfg.seed,
        reward: 0.0,
        planner_reward: 0.0,
        steps: 0,
        planning_seconds: 0.0,
        failed: false,
        states: vec![env.raw()],
    };
    let mut raw = vec![0.0; spec.state_dim()];
    let mut planning = 0.0;
    for _ in 0..cfg.steps() {
        let obs = env.observe(spec, &mut obs_rng);
        raw_from_observation(spec, &obs, &mut raw);
        let t0 = Instant::now();
        let action = policy.act(&Observed { time: env.time, raw: &raw, obs: &obs })?;
        planning += t0.elapsed().as_secs_f64();
        let executed: Vec<f64> = action.iter().zip(&spec.a_max).map(|(&a, &m)| a.clamp(-m, m)).collect();
        policy.record_executed(&executed);
        out.steps += 1;
        match env.step(spec, &executed, cfg.delta) {
            Ok(_) => {}
            Err(Error::Divergence { time }) => {
                log::warn!("episode seed {} diverged at t={time:.3}", cfg.seed);
                out.failed = true;
                break;
            }
            Err(e) => return Err(e),
        }
        let x = env.raw();
        out.reward += reward_raw(spec, &x, &executed, false);
        out.planner_reward += reward_raw(spec, &x, &executed, true);
        out.states.push(x);
    }
    out.planning_seconds = planning / out.steps.max(1) as f64;
    Ok(out)
}
