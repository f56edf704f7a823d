//! Trains a model on a saved dataset and plans with it on the delayed environment.
//!
//! `cargo run --release --example train_and_plan -- data.bin nlc 10 2 [model.ckpt]`

use laplace_control::eval::{evaluate_policy, Baselines};
use laplace_control::models::ModelKind;
use laplace_control::mppi::MppiConfig;
use laplace_control::pipeline::{fit, Budget, Dataset, TrainConfig};
use laplace_control::policy::MppiPolicy;

fn main() -> laplace_control::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let path = args.next().expect("dataset path");
    let kind: ModelKind = args.next().unwrap_or_else(|| "nlc".into()).parse()?;
    let epochs: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(10);
    let seeds: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);
    let save = args.next();
    let data = Dataset::load(&path)?;
    let spec = data.manifest.env_spec();
    let tc = TrainConfig::new(Budget::Epochs(epochs));
    let (model, report) = fit(kind, &data, &tc, 0)?;
    println!("initial loss {:.4e}, per-epoch {:?}, {:.1}s", report.initial_loss, report.epoch_losses, report.seconds);
    if let Some(out) = save {
        model.save(&out)?;
    }
    if seeds == 0 {
        return Ok(());
    }
    let cfg = MppiConfig::new(&spec, spec.delta_bar);
    let seed_list: Vec<u64> = (0..seeds).collect();
    let base = Baselines::compute(&spec, &cfg, 10.0, &seed_list)?;
    println!("random {:?}\noracle {:?}", base.random, base.oracle);
    let mut policy = MppiPolicy::new(&spec, cfg, model.into_shared())?;
    for e in evaluate_policy(&mut policy, &spec, spec.delta_bar, 10.0, &seed_list)? {
        println!("seed {}: avg reward {:.4}, score {:.2}, {:.3}s/action", e.seed, e.average_reward(), base.score(e.average_reward())?, e.planning_seconds);
    }
    Ok(())
}
