//! Collects a noisy-expert dataset and writes it in binary and text form.
//!
//! `cargo run --release --example collect_dataset -- cartpole 1000 /tmp/cartpole.bin`

use laplace_control::envs::{EnvKind, EnvSpec};
use laplace_control::pipeline::{collect, oracle_expert, CollectConfig};

fn main() -> laplace_control::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let kind: EnvKind = args.next().unwrap_or_else(|| "pendulum".into()).parse()?;
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let out = args.next().unwrap_or_else(|| format!("{kind}.bin"));
    let spec = EnvSpec::new(kind).with_delay_steps(1);
    let mut expert = oracle_expert(&spec)?;
    let data = collect(&spec, &mut expert, &CollectConfig::new(n, 0))?;
    data.save(&out)?;
    let mut text = Vec::new();
    data.write_text(&mut text)?;
    std::fs::write(format!("{out}.csv"), text)?;
    let spans: Vec<f64> = data.trajectories().iter().map(|t| t.last().unwrap().t).collect();
    println!("{} records, {} trajectories, longest {:.2}s -> {out}", data.len(), spans.len(), spans.iter().cloned().fold(0.0, f64::max));
    Ok(())
}
