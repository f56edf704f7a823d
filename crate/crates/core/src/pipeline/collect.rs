//! Offline data collection with a noisy expert.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::dataset::{Dataset, DatasetManifest, TrajectorySample};
use crate::envs::{raw_from_observation, sample_interval, EnvSpec, EnvState, Sampling};
use crate::error::{Error, Result};
use crate::models::OracleModel;
use crate::mppi::MppiConfig;
use crate::policy::{MppiPolicy, Observed, Policy};

#[derive(Clone, Debug, PartialEq)]
pub struct CollectConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub episode_seconds: f64,
    pub sampling: Sampling,
    /// Action-noise standard deviation as a multiple of `a_max`.
    pub noise_scale: f64,
}

impl CollectConfig {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        Self { n_samples, seed, episode_seconds: 10.0, sampling: Sampling::Irregular, noise_scale: 1.0 }
    }
}

/// Oracle-model MPPI planning on the Δ̄ grid.
pub fn oracle_expert(spec: &EnvSpec) -> Result<MppiPolicy> {
    let cfg = MppiConfig::new(spec, spec.delta_bar);
    MppiPolicy::new(spec, cfg, Arc::new(OracleModel::new(spec.clone())))
}

/// Adds `N(0, (scale·a_max)²)` to each component of `nominal`.
///
/// Returns the clipped action to execute and the unclipped perturbed action.
pub fn perturb_action(nominal: &[f64], a_max: &[f64], scale: f64, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let noisy: Vec<f64> = nominal
        .iter()
        .zip(a_max)
        .map(|(&a, &m)| {
            let e: f64 = StandardNormal.sample(rng);
            a + scale * m * e
        })
        .collect();
    let clipped = noisy.iter().zip(a_max).map(|(&a, &m)| a.clamp(-m, m)).collect();
    (clipped, noisy)
}

/// Runs `expert` with action noise until `cfg.n_samples` records are gathered.
///
/// Each episode starts from a fresh reset and lasts `episode_seconds`; the
/// record at each decision time holds the observation and the executed
/// (noisy, clipped) action. Diverging episodes are dropped.
pub fn collect(spec: &EnvSpec, expert: &mut dyn Policy, cfg: &CollectConfig) -> Result<Dataset> {
    spec.validate()?;
    if cfg.n_samples == 0 {
        return Err(Error::Config("n_samples must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut data = Dataset::new(DatasetManifest::for_spec(spec, cfg.seed, cfg.noise_scale, cfg.sampling));
    let mut trajectory = 0u64;
    let mut raw = vec![0.0; spec.state_dim()];
    while data.len() < cfg.n_samples {
        let mut env = EnvState::reset(spec, rng.gen());
        expert.reset(rng.gen());
        let mut episode = Vec::new();
        let mut failed = false;
        while env.time < cfg.episode_seconds && data.len() + episode.len() < cfg.n_samples {
            let obs = env.observe(spec, &mut rng);
            raw_from_observation(spec, &obs, &mut raw);
            let nominal = expert.act(&Observed { time: env.time, raw: &raw, obs: &obs })?;
            let (action, _) = perturb_action(&nominal, &spec.a_max, cfg.noise_scale, &mut rng);
            expert.record_executed(&action);
            episode.push(TrajectorySample { trajectory, t: env.time, x: obs, a: action.clone() });
            let dt = sample_interval(spec, cfg.sampling, &mut rng);
            match env.step(spec, &action, dt) {
                Ok(_) => {}
                Err(Error::Divergence { time }) => {
                    log::warn!("episode {trajectory} diverged at t={time:.3}; discarded");
                    failed = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if !failed {
            data.records.extend(episode);
            trajectory += 1;
        }
    }
    log::info!("collected {} samples in {trajectory} episodes", data.len());
    Ok(data)
}
