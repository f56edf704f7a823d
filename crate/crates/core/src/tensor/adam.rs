use super::array::Array;
use super::params::Params;
use crate::error::{dim_err, Error, Result};

/// Adam optimizer state with bias-corrected moment estimates.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Array>,
    v: Vec<Array>,
}

impl AdamState {
    pub fn new(params: &Params, lr: f64) -> Self {
        let zeros = || params.values().iter().map(|p| Array::zeros(p.shape())).collect::<Vec<_>>();
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, step: 0, m: zeros(), v: zeros() }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update. Parameters are left untouched if any gradient is non-finite.
    pub fn step(&mut self, params: &mut Params, grads: &[Array]) -> Result<()> {
        if grads.len() != params.len() {
            return dim_err("adam_step", format!("{} gradients for {} parameters", grads.len(), params.len()));
        }
        for (id, g) in params.ids().zip(grads) {
            if g.shape() != params.get(id).shape() {
                return dim_err("adam_step", format!("gradient {:?} for `{}`", g.shape(), params.name(id)));
            }
            if !g.all_finite() {
                return Err(Error::NonFiniteGradient { param: params.name(id).to_string() });
            }
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (i, g) in grads.iter().enumerate() {
            let p = params.values_mut()[i].data_mut();
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for j in 0..p.len() {
                let gj = g.data()[j];
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gj * gj;
                let mh = m[j] / bc1;
                let vh = v[j] / bc2;
                p[j] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
