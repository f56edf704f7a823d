//! Next-step error against the prediction interval for a quickly trained model.
//!
//! `cargo run --release --example interval_sweep -- [samples] [epochs]`

use laplace_control::envs::{EnvKind, EnvSpec};
use laplace_control::eval::sweep_delta_mse;
use laplace_control::models::ModelKind;
use laplace_control::pipeline::{collect, fit, oracle_expert, Budget, CollectConfig, TrainConfig};

fn main() -> laplace_control::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(400);
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5);
    let spec = EnvSpec::new(EnvKind::Pendulum).with_delay_steps(1);
    let mut expert = oracle_expert(&spec)?;
    let train = collect(&spec, &mut expert, &CollectConfig::new(n, 0))?;
    let validation = collect(&spec, &mut expert, &CollectConfig::new(n / 4, 1))?;
    let deltas = [0.01, 0.034, 0.05, 0.1, 0.2];
    for kind in [ModelKind::Nlc, ModelKind::Rnn] {
        let (model, report) = fit(kind, &train, &TrainConfig::new(Budget::Epochs(epochs)), 0)?;
        let rows = sweep_delta_mse(model.as_dynamics(), &spec, &validation, &deltas, 500)?;
        let cells: Vec<String> = rows.iter().map(|r| format!("{}:{:.2e}", r.delta, r.mse)).collect();
        println!("{kind} (loss {:.3e}): {}", report.final_loss(), cells.join("  "));
    }
    Ok(())
}
