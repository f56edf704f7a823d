//! Equations of motion, goal-space maps and observation maps.
//!
//! Raw states are `[q, q̇]`. Angles are measured from the upright position.
//!
//! * pendulum: `q = [θ]`, a uniform rod pivoting at one end, torque input.
//! * cartpole: `q = [x, θ]`, a uniform pole of length L on a cart, force input.
//! * acrobot: `q = [θ₁, θ₂]` (both absolute), two uniform links with a torque at
//!   each joint; the elbow torque acts on the relative angle θ₂ − θ₁.

use super::spec::{EnvKind, EnvSpec};

/// Largest raw-state dimension over all environments.
pub const MAX_STATE: usize = 4;
/// Largest action dimension over all environments.
pub const MAX_ACTION: usize = 2;

/// Writes `ẋ = f(x, a)` into `dx`.
#[inline]
pub fn derivative(spec: &EnvSpec, x: &[f64], a: &[f64], dx: &mut [f64]) {
    let p = &spec.physics;
    let g = p.gravity;
    let l = p.length;
    match spec.name {
        EnvKind::Pendulum => {
            let m = p.mass;
            dx[0] = x[1];
            dx[1] = 1.5 * g / l * x[0].sin() + 3.0 * a[0] / (m * l * l);
        }
        EnvKind::Cartpole => {
            let (mp, mc) = (p.mass, p.cart_mass);
            let total = mp + mc;
            let half = 0.5 * l;
            let (th, xd, thd) = (x[1], x[2], x[3]);
            let (s, c) = th.sin_cos();
            let temp = (a[0] + mp * half * thd * thd * s) / total;
            let th_acc = (g * s - c * temp) / (half * (4.0 / 3.0 - mp * c * c / total));
            let x_acc = temp - mp * half * th_acc * c / total;
            dx[0] = xd;
            dx[1] = thd;
            dx[2] = x_acc;
            dx[3] = th_acc;
        }
        EnvKind::Acrobot => {
            let m = p.mass;
            let lc = 0.5 * l;
            let inertia = m * l * l / 12.0;
            let (t1, t2, w1, w2) = (x[0], x[1], x[2], x[3]);
            let (s12, c12) = (t1 - t2).sin_cos();
            let m11 = m * lc * lc + inertia + m * l * l;
            let m12 = m * l * lc * c12;
            let m22 = m * lc * lc + inertia;
            let q1 = a[0] - a[1];
            let q2 = a[1];
            let r1 = q1 - m * l * lc * s12 * w2 * w2 + (m * lc + m * l) * g * t1.sin();
            let r2 = q2 + m * l * lc * s12 * w1 * w1 + m * g * lc * t2.sin();
            let det = m11 * m22 - m12 * m12;
            dx[0] = w1;
            dx[1] = w2;
            dx[2] = (m22 * r1 - m12 * r2) / det;
            dx[3] = (m11 * r2 - m12 * r1) / det;
        }
    }
}

/// Total mechanical energy of a raw state.
pub fn energy(spec: &EnvSpec, x: &[f64]) -> f64 {
    let p = &spec.physics;
    let (g, l) = (p.gravity, p.length);
    match spec.name {
        EnvKind::Pendulum => {
            let m = p.mass;
            m * l * l / 6.0 * x[1] * x[1] + m * g * 0.5 * l * x[0].cos()
        }
        EnvKind::Cartpole => {
            let (mp, mc) = (p.mass, p.cart_mass);
            let half = 0.5 * l;
            let (th, xd, thd) = (x[1], x[2], x[3]);
            let vx = xd + half * thd * th.cos();
            let vy = -half * thd * th.sin();
            0.5 * mc * xd * xd + 0.5 * mp * (vx * vx + vy * vy) + 0.5 * (mp * l * l / 12.0) * thd * thd + mp * g * half * th.cos()
        }
        EnvKind::Acrobot => {
            let m = p.mass;
            let lc = 0.5 * l;
            let inertia = m * l * l / 12.0;
            let (t1, t2, w1, w2) = (x[0], x[1], x[2], x[3]);
            let kin = 0.5 * (m * lc * lc + inertia + m * l * l) * w1 * w1
                + 0.5 * (m * lc * lc + inertia) * w2 * w2
                + m * l * lc * (t1 - t2).cos() * w1 * w2;
            let pot = m * g * lc * t1.cos() + m * g * (l * t1.cos() + lc * t2.cos());
            kin + pot
        }
    }
}

/// Goal-space coordinates `q` compared against `q*` in the reward.
pub fn goal_coords(spec: &EnvSpec, x: &[f64]) -> Vec<f64> {
    let l = spec.physics.length;
    match spec.name {
        EnvKind::Pendulum => vec![l * x[0].sin(), l * x[0].cos()],
        EnvKind::Cartpole => vec![x[0], x[0] + l * x[1].sin(), l * x[1].cos()],
        EnvKind::Acrobot => vec![l * x[0].sin() + l * x[1].sin(), l * x[0].cos() + l * x[1].cos()],
    }
}

/// Generalized velocities of a raw state.
pub fn velocities<'a>(spec: &EnvSpec, x: &'a [f64]) -> &'a [f64] {
    let n = spec.state_dim() / 2;
    &x[n..2 * n]
}

/// Noise-free observation of a raw state.
pub fn observation(spec: &EnvSpec, x: &[f64]) -> Vec<f64> {
    match spec.name {
        EnvKind::Pendulum => vec![x[0].sin(), x[0].cos(), x[1]],
        EnvKind::Cartpole => vec![x[0], x[2], x[1].cos(), x[1].sin(), x[3]],
        EnvKind::Acrobot => vec![x[0].sin(), x[0].cos(), x[2], x[1].sin(), x[1].cos(), x[3]],
    }
}

/// Recovers a raw state from an observation (angles wrapped to (−π, π]).
pub fn raw_from_observation(spec: &EnvSpec, o: &[f64], out: &mut [f64]) {
    match spec.name {
        EnvKind::Pendulum => {
            out[0] = o[0].atan2(o[1]);
            out[1] = o[2];
        }
        EnvKind::Cartpole => {
            out[0] = o[0];
            out[1] = o[3].atan2(o[2]);
            out[2] = o[1];
            out[3] = o[4];
        }
        EnvKind::Acrobot => {
            out[0] = o[0].atan2(o[1]);
            out[1] = o[3].atan2(o[4]);
            out[2] = o[2];
            out[3] = o[5];
        }
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let r = a - two_pi * ((a + std::f64::consts::PI) / two_pi).floor();
    if r <= -std::f64::consts::PI {
        r + two_pi
    } else {
        r
    }
}

/// Indices of pole angles within the raw state.
pub fn angle_indices(kind: EnvKind) -> &'static [usize] {
    match kind {
        EnvKind::Pendulum => &[0],
        EnvKind::Cartpole => &[1],
        EnvKind::Acrobot => &[0, 1],
    }
}
