use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::dynamics::{self, angle_indices, MAX_STATE};
use super::integrator::{integrate_delayed, RK4_MAX_STEP};
use super::spec::EnvSpec;
use crate::error::{Error, Result};

/// Time-stamped record of applied actions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DelayBuffer {
    times: Vec<f64>,
    actions: Vec<f64>,
    action_dim: usize,
}

impl DelayBuffer {
    pub fn new(action_dim: usize) -> Self {
        Self { times: Vec::new(), actions: Vec::new(), action_dim }
    }

    pub fn push(&mut self, time: f64, action: &[f64]) {
        debug_assert_eq!(action.len(), self.action_dim);
        self.times.push(time);
        self.actions.extend_from_slice(action);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn actions(&self) -> &[f64] {
        &self.actions
    }

    /// Action in effect at absolute time `t` (zero-order hold, zero before the first entry).
    pub fn action_at(&self, t: f64) -> Vec<f64> {
        let d = self.action_dim;
        match self.times.iter().rposition(|&tj| tj <= t) {
            Some(j) => self.actions[j * d..(j + 1) * d].to_vec(),
            None => vec![0.0; d],
        }
    }

    /// Drops entries superseded before absolute time `t`.
    fn prune_before(&mut self, t: f64) {
        if let Some(j) = self.times.iter().rposition(|&tj| tj <= t) {
            if j > 0 {
                self.times.drain(..j);
                self.actions.drain(..j * self.action_dim);
            }
        }
    }
}

/// Full simulator state.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub q: Vec<f64>,
    pub q_dot: Vec<f64>,
    pub buffer: DelayBuffer,
    pub time: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepInfo {
    /// The requested action was outside the actuator box and was clipped.
    pub clipped: bool,
}

impl EnvState {
    /// Uniform start in ±x_init around the hanging-down configuration.
    pub fn reset(spec: &EnvSpec, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: Vec<f64> = spec
            .x_init
            .iter()
            .map(|&w| if w > 0.0 { rng.gen_range(-w..=w) } else { 0.0 })
            .collect();
        for &i in angle_indices(spec.kind()) {
            x[i] += std::f64::consts::PI;
        }
        Self::from_raw(spec, &x)
    }

    /// State at clock zero with an all-zero action history.
    pub fn from_raw(spec: &EnvSpec, x: &[f64]) -> Self {
        let n = spec.state_dim() / 2;
        let mut buffer = DelayBuffer::new(spec.action_dim());
        buffer.push(-spec.omega, &vec![0.0; spec.action_dim()]);
        Self { q: x[..n].to_vec(), q_dot: x[n..].to_vec(), buffer, time: 0.0 }
    }

    /// Raw state vector `[q, q̇]`.
    pub fn raw(&self) -> Vec<f64> {
        let mut v = self.q.clone();
        v.extend_from_slice(&self.q_dot);
        v
    }

    fn set_raw(&mut self, x: &[f64]) {
        let n = self.q.len();
        self.q.copy_from_slice(&x[..n]);
        self.q_dot.copy_from_slice(&x[n..]);
    }

    /// Applies `action` from now on (reaching the plant after τ) and advances by `dt`.
    pub fn step(&mut self, spec: &EnvSpec, action: &[f64], dt: f64) -> Result<StepInfo> {
        self.step_with(spec, action, dt, RK4_MAX_STEP)
    }

    /// [`EnvState::step`] with an explicit maximum RK4 step.
    pub fn step_with(&mut self, spec: &EnvSpec, action: &[f64], dt: f64, h_max: f64) -> Result<StepInfo> {
        if action.len() != spec.action_dim() {
            return Err(Error::Dimension { op: "step", detail: format!("action of length {}", action.len()) });
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain(format!("step interval must be positive, got {dt}")));
        }
        let mut clipped = false;
        let a: Vec<f64> = action
            .iter()
            .zip(&spec.a_max)
            .map(|(&a, &m)| {
                let c = if a.is_nan() { 0.0 } else { a.clamp(-m, m) };
                clipped |= c != a;
                c
            })
            .collect();
        self.buffer.push(self.time, &a);
        let rel: Vec<f64> = self.buffer.times().iter().map(|&tj| tj - self.time).collect();
        let mut x = [0.0; MAX_STATE];
        let n = spec.state_dim();
        x[..n].copy_from_slice(&self.raw());
        integrate_delayed(spec, &mut x[..n], &rel, self.buffer.actions(), dt, h_max);
        if x[..n].iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { time: self.time + dt });
        }
        self.set_raw(&x[..n]);
        self.time += dt;
        self.buffer.prune_before(self.time - spec.tau);
        Ok(StepInfo { clipped })
    }

    /// Observation with optional additive Gaussian noise.
    pub fn observe(&self, spec: &EnvSpec, rng: &mut impl Rng) -> Vec<f64> {
        let mut o = dynamics::observation(spec, &self.raw());
        add_noise(&mut o, spec.obs_noise_std, rng);
        o
    }

    /// Goal-space coordinates.
    pub fn goal_coords(&self, spec: &EnvSpec) -> Vec<f64> {
        dynamics::goal_coords(spec, &self.raw())
    }
}

pub(crate) fn add_noise(v: &mut [f64], std: f64, rng: &mut impl Rng) {
    if std > 0.0 {
        let normal = Normal::new(0.0, std).expect("positive std");
        v.iter_mut().for_each(|x| *x += normal.sample(rng));
    }
}

/// Reward for goal-space position `q`, velocities `q_dot` and action `a`.
///
/// The exponential form is `exp(−‖q−q*‖² − b‖q̇‖²) − c‖a‖²`; the planner form
/// drops the exponential.
pub fn reward(spec: &EnvSpec, q: &[f64], q_dot: &[f64], a: &[f64], planner_form: bool) -> f64 {
    let dist: f64 = q.iter().zip(&spec.q_star).map(|(x, y)| (x - y) * (x - y)).sum();
    let vel: f64 = q_dot.iter().map(|v| v * v).sum();
    let act: f64 = a.iter().map(|v| v * v).sum();
    let inner = -dist - spec.b * vel;
    if planner_form {
        inner - spec.c * act
    } else {
        inner.exp() - spec.c * act
    }
}

/// [`reward`] evaluated on a raw state.
pub fn reward_raw(spec: &EnvSpec, x: &[f64], a: &[f64], planner_form: bool) -> f64 {
    let q = dynamics::goal_coords(spec, x);
    reward(spec, &q, dynamics::velocities(spec, x), a, planner_form)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Intervals drawn from an exponential distribution with mean Δ̄.
    #[default]
    Irregular,
    /// Every interval equals Δ̄.
    Regular,
}

/// Next observation interval.
pub fn sample_interval(spec: &EnvSpec, mode: Sampling, rng: &mut impl Rng) -> f64 {
    match mode {
        Sampling::Regular => spec.delta_bar,
        Sampling::Irregular => loop {
            let d: f64 = Exp::new(1.0 / spec.delta_bar).expect("positive rate").sample(rng);
            if d > 0.0 {
                break d;
            }
        },
    }
}
