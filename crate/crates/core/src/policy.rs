//! Closed-loop policies.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envs::EnvSpec;
use crate::error::Result;
use crate::models::{DynamicsModel, StateSpace};
use crate::mppi::{Mppi, MppiConfig, MppiStats, PlanBuffer};

/// What a policy sees at a decision time.
#[derive(Clone, Copy, Debug)]
pub struct Observed<'a> {
    pub time: f64,
    /// Raw state `[q, q̇]` (with the same additive noise as the observation, if any).
    pub raw: &'a [f64],
    pub obs: &'a [f64],
}

pub trait Policy {
    fn name(&self) -> String;
    /// Prepares for a new episode.
    fn reset(&mut self, seed: u64);
    fn act(&mut self, o: &Observed) -> Result<Vec<f64>>;
    /// Informs the policy of the action actually applied after `act`.
    fn record_executed(&mut self, _action: &[f64]) {}
    /// Model evaluations performed so far.
    fn model_evaluations(&self) -> u64 {
        0
    }
}

/// Uniformly random actions inside the actuator box.
pub struct RandomPolicy {
    a_max: Vec<f64>,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(spec: &EnvSpec) -> Self {
        Self { a_max: spec.a_max.clone(), rng: ChaCha8Rng::seed_from_u64(0) }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> String {
        "random".into()
    }

    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_5a11);
    }

    fn act(&mut self, _o: &Observed) -> Result<Vec<f64>> {
        Ok(self.a_max.iter().map(|&m| self.rng.gen_range(-m..=m)).collect())
    }
}

/// MPPI planning over a dynamics model.
pub struct MppiPolicy {
    pub mppi: Mppi,
    pub model: Arc<dyn DynamicsModel>,
    pub plan: PlanBuffer,
}

impl MppiPolicy {
    pub fn new(spec: &EnvSpec, cfg: MppiConfig, model: Arc<dyn DynamicsModel>) -> Result<Self> {
        let plan = PlanBuffer::for_config(&cfg);
        Ok(Self { mppi: Mppi::new(spec, cfg, 0)?, model, plan })
    }

    pub fn stats(&self) -> MppiStats {
        self.mppi.stats
    }
}

impl Policy for MppiPolicy {
    fn name(&self) -> String {
        self.model.kind().name().into()
    }

    fn reset(&mut self, seed: u64) {
        self.plan = PlanBuffer::for_config(&self.mppi.cfg);
        self.mppi.reseed(seed);
    }

    fn act(&mut self, o: &Observed) -> Result<Vec<f64>> {
        let x = match self.model.state_space() {
            StateSpace::Raw => o.raw,
            StateSpace::Observation => o.obs,
        };
        self.mppi.policy_step(self.model.as_ref(), x, &mut self.plan)
    }

    fn record_executed(&mut self, action: &[f64]) {
        self.plan.record_executed(action);
    }

    fn model_evaluations(&self) -> u64 {
        self.mppi.stats.model_evaluations
    }
}
