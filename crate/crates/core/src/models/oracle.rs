//! True dynamics behind the model interface.

use super::history::HistoryBatch;
use super::{DynamicsModel, ModelKind, StateSpace};
use crate::envs::dynamics::MAX_STATE;
use crate::envs::integrator::{integrate_delayed, RK4_MAX_STEP};
use crate::envs::EnvSpec;
use crate::error::{dim_err, Error, Result};

/// Integrates the environment's own equations under the supplied action history.
#[derive(Clone, Debug)]
pub struct OracleModel {
    pub spec: EnvSpec,
    pub h_max: f64,
}

impl OracleModel {
    pub fn new(spec: EnvSpec) -> Self {
        Self { spec, h_max: RK4_MAX_STEP }
    }

    /// Next raw state after `delta` seconds from `x` under `rel_times`/`actions`.
    pub fn predict_one(&self, x: &[f64], rel_times: &[f64], actions: &[f64], delta: f64) -> Result<Vec<f64>> {
        let n = self.spec.state_dim();
        if x.len() != n || actions.len() != rel_times.len() * self.spec.action_dim() {
            return dim_err("oracle predict", format!("state {} actions {}", x.len(), actions.len()));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("prediction interval must be positive, got {delta}")));
        }
        let mut s = [0.0; MAX_STATE];
        s[..n].copy_from_slice(x);
        integrate_delayed(&self.spec, &mut s[..n], rel_times, actions, delta, self.h_max);
        Ok(s[..n].to_vec())
    }
}

impl DynamicsModel for OracleModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Oracle
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::Raw
    }

    fn state_dim(&self) -> usize {
        self.spec.state_dim()
    }

    fn action_dim(&self) -> usize {
        self.spec.action_dim()
    }

    fn predict_batch(&self, states: &[f64], hist: &HistoryBatch, delta: f64) -> Result<Vec<f64>> {
        hist.validate()?;
        let n = self.spec.state_dim();
        let d = self.spec.action_dim();
        if states.len() != hist.batch * n || hist.action_dim != d {
            return dim_err("oracle predict", format!("{} state values for batch {}", states.len(), hist.batch));
        }
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("prediction interval must be positive, got {delta}")));
        }
        let mut out = Vec::with_capacity(states.len());
        let mut s = [0.0; MAX_STATE];
        for b in 0..hist.batch {
            let l = hist.lens[b];
            let o = b * hist.max_len;
            s[..n].copy_from_slice(&states[b * n..(b + 1) * n]);
            integrate_delayed(&self.spec, &mut s[..n], &hist.rel_times[o..o + l], &hist.actions[o * d..(o + l) * d], delta, self.h_max);
            out.extend_from_slice(&s[..n]);
        }
        Ok(out)
    }
}
