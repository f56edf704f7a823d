//! Fixed-step RK4 under a zero-order-hold action schedule with input delay.

use super::dynamics::{derivative, MAX_ACTION, MAX_STATE};
use super::spec::EnvSpec;

/// Largest internal RK4 step in seconds.
pub const RK4_MAX_STEP: f64 = 0.005;

/// One RK4 step of size `h` with action `a` held constant.
#[inline]
fn rk4_step(spec: &EnvSpec, x: &mut [f64], a: &[f64], h: f64) {
    let n = x.len();
    let mut k1 = [0.0; MAX_STATE];
    let mut k2 = [0.0; MAX_STATE];
    let mut k3 = [0.0; MAX_STATE];
    let mut k4 = [0.0; MAX_STATE];
    let mut tmp = [0.0; MAX_STATE];
    derivative(spec, x, a, &mut k1[..n]);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    derivative(spec, &tmp[..n], a, &mut k2[..n]);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    derivative(spec, &tmp[..n], a, &mut k3[..n]);
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    derivative(spec, &tmp[..n], a, &mut k4[..n]);
    for i in 0..n {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Integrates over `len` seconds with `a` held, using equal steps no longer than `h_max`.
pub fn rk4_hold(spec: &EnvSpec, x: &mut [f64], a: &[f64], len: f64, h_max: f64) {
    if !(len > 0.0) {
        return;
    }
    let steps = ((len / h_max) - 1e-9).ceil().max(1.0) as usize;
    let h = len / steps as f64;
    for _ in 0..steps {
        rk4_step(spec, x, a, h);
    }
}

/// Integrates `ẋ = f(x, a(s − τ))` for `s ∈ [0, dt]`.
///
/// `rel_times` (ascending) and `actions` (row-major, one row per entry) give
/// the applied action history relative to the current time; before the first
/// entry the action is zero. The integration is split at every instant where
/// the delayed action switches.
pub fn integrate_delayed(spec: &EnvSpec, x: &mut [f64], rel_times: &[f64], actions: &[f64], dt: f64, h_max: f64) {
    let d = spec.action_dim();
    debug_assert_eq!(rel_times.len() * d, actions.len());
    let tau = spec.tau;
    let mut current = [0.0; MAX_ACTION];
    let mut first_future = rel_times.len();
    for (j, &r) in rel_times.iter().enumerate() {
        if r + tau <= 0.0 {
            current[..d].copy_from_slice(&actions[j * d..(j + 1) * d]);
        } else {
            first_future = j;
            break;
        }
    }
    let mut s0 = 0.0;
    for j in first_future..rel_times.len() {
        let w = rel_times[j] + tau;
        if w >= dt {
            break;
        }
        rk4_hold(spec, x, &current[..d], w - s0, h_max);
        s0 = w;
        current[..d].copy_from_slice(&actions[j * d..(j + 1) * d]);
    }
    rk4_hold(spec, x, &current[..d], dt - s0, h_max);
}
