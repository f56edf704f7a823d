//! Delayed continuous-time control environments.

pub mod dynamics;
mod env;
pub mod integrator;
mod spec;

pub use dynamics::{goal_coords, observation, raw_from_observation, wrap_angle};
pub use env::{reward, reward_raw, sample_interval, DelayBuffer, EnvState, Sampling, StepInfo};
pub use spec::{EnvKind, EnvSpec, Physics, DELTA_BAR};
