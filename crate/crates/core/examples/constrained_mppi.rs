//! MPPI driven by hand, with and without a state constraint on the cart position.
//!
//! Rollouts that leave |x| ≤ 0.05 are penalized, so the constrained planner
//! keeps the cart closer to the origin.

use std::sync::Arc;

use laplace_control::envs::{EnvKind, EnvSpec, EnvState};
use laplace_control::models::OracleModel;
use laplace_control::mppi::{Mppi, MppiConfig, PlanBuffer};

fn run(spec: &EnvSpec, constrained: bool) -> laplace_control::Result<f64> {
    let mut cfg = MppiConfig::new(spec, spec.delta_bar);
    cfg.rollouts = 300;
    let model = OracleModel::new(spec.clone());
    let mut mppi = Mppi::new(spec, cfg.clone(), 0)?;
    if constrained {
        mppi = mppi.with_constraint(Arc::new(|x: &[f64]| x[0].abs() > 0.05));
    }
    let mut plan = PlanBuffer::for_config(&cfg);
    let mut env = EnvState::reset(spec, 0);
    let mut widest: f64 = 0.0;
    for _ in 0..60 {
        let a = mppi.policy_step(&model, &env.raw(), &mut plan)?;
        plan.record_executed(&a);
        env.step(spec, &a, cfg.delta)?;
        widest = widest.max(env.raw()[0].abs());
    }
    Ok(widest)
}

fn main() -> laplace_control::Result<()> {
    let spec = EnvSpec::new(EnvKind::Cartpole).with_delay_steps(1);
    println!("max |x| over 3s: free {:.3}, constrained {:.3}", run(&spec, false)?, run(&spec, true)?);
    Ok(())
}
