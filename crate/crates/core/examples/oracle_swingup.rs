//! Oracle-model MPPI swing-up on the delayed pendulum.

use std::sync::Arc;

use laplace_control::envs::{EnvKind, EnvSpec};
use laplace_control::eval::{run_episode, EpisodeConfig};
use laplace_control::models::OracleModel;
use laplace_control::mppi::MppiConfig;
use laplace_control::policy::MppiPolicy;

fn main() -> laplace_control::Result<()> {
    let kind: EnvKind = std::env::args().nth(1).unwrap_or_else(|| "pendulum".into()).parse()?;
    let spec = EnvSpec::new(kind).with_delay_steps(1);
    let cfg = MppiConfig::new(&spec, spec.delta_bar);
    let mut policy = MppiPolicy::new(&spec, cfg, Arc::new(OracleModel::new(spec.clone())))?;
    for seed in 0..2 {
        let r = run_episode(&mut policy, &spec, &EpisodeConfig::new(&spec, seed))?;
        let tail = &r.states[r.states.len() - 20..];
        println!(
            "seed {seed}: reward {:.3}  planning {:.4}s/action  final state {:?}",
            r.reward,
            r.planning_seconds,
            tail.last().unwrap()
        );
    }
    Ok(())
}
