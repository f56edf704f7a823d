//! A delayed cartpole: an action takes effect τ seconds after it is applied.

use laplace_control::envs::{EnvKind, EnvSpec, EnvState};

fn main() -> laplace_control::Result<()> {
    let spec = EnvSpec::new(EnvKind::Cartpole).with_delay_steps(2);
    println!("τ = {}s, Δ̄ = {}s, a_max = {:?}", spec.tau, spec.delta_bar, spec.a_max);
    let start = EnvState::reset(&spec, 0).raw();
    let mut pushed = EnvState::from_raw(&spec, &start);
    let mut idle = EnvState::from_raw(&spec, &start);
    // one full push at t = 0, then nothing; irregular step sizes are fine
    for (i, dt) in [0.03, 0.05, 0.02, 0.07, 0.05, 0.08].into_iter().enumerate() {
        let a = if i == 0 { spec.a_max.clone() } else { vec![0.0] };
        pushed.step(&spec, &a, dt)?;
        idle.step(&spec, &[0.0], dt)?;
        let dx = pushed.raw()[0] - idle.raw()[0];
        println!("t = {:.2}  cart offset from idle run {dx:+.3e}", pushed.time);
    }
    Ok(())
}
