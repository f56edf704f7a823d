//! Command-line front end: data collection, training, evaluation and sweeps.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use laplace_control::envs::{EnvKind, EnvSpec, Sampling};
use laplace_control::eval::{
    evaluate_policy, fmt_f64, horizon_grid, sweep_delta_mse, sweep_horizon, sweep_samples, Baselines,
    HorizonMode, HorizonRow, HorizonSweep, ResultsCsv, SamplesRow, SamplesSweep, ScoreTable,
};
use laplace_control::models::{DynamicsModel, LearnedModel, ModelKind, OracleModel};
use laplace_control::mppi::MppiConfig;
use laplace_control::pipeline::{collect, fit_windows, make_windows, oracle_expert, standardize, Budget, CollectConfig, Dataset, TrainConfig};
use laplace_control::policy::{MppiPolicy, Policy, RandomPolicy};
use laplace_control::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "nlc", version, about = "Laplace-domain dynamics models and MPPI control of delayed systems")]
struct Cli {
    /// Full-scale defaults: 1e6 samples, 2h15m training, 20 seeds.
    #[arg(long, global = true)]
    full: bool,
    /// Repeat for more logging.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Collect a noisy-expert dataset.
    Collect(CollectArgs),
    /// Train a dynamics model on a dataset.
    Train(TrainArgs),
    /// Evaluate policies in closed loop and write normalized scores.
    Eval(EvalArgs),
    #[command(subcommand)]
    Sweep(SweepCmd),
    /// Aggregate evaluation CSVs into a markdown score table.
    ScoreTable(ScoreTableArgs),
}

#[derive(Subcommand, Debug)]
enum SweepCmd {
    /// Next-step validation error against the prediction interval.
    DeltaMse(DeltaMseArgs),
    /// Reward and planning time against the planning horizon.
    Horizon(HorizonArgs),
    /// Score against the number of training samples.
    Samples(SamplesArgs),
}

#[derive(Args, Debug, Clone)]
struct EnvArgs {
    #[arg(long, default_value = "cartpole")]
    env: EnvKind,
    /// Action delay as a multiple of Δ̄.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(0..=3))]
    tau: u32,
    #[arg(long, default_value_t = 0.05)]
    delta_bar: f64,
    /// History window in seconds (default 4Δ̄).
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    obs_noise: f64,
    /// TOML environment description; overrides the flags above.
    #[arg(long)]
    env_config: Option<PathBuf>,
}

impl EnvArgs {
    fn spec(&self) -> Result<EnvSpec> {
        if let Some(p) = &self.env_config {
            require_file(p)?;
            return EnvSpec::load(p);
        }
        let mut s = EnvSpec::new(self.env);
        s.delta_bar = self.delta_bar;
        s.omega = self.omega.unwrap_or(4.0 * self.delta_bar);
        let s = s.with_delay_steps(self.tau).with_obs_noise(self.obs_noise);
        s.validate()?;
        Ok(s)
    }
}

#[derive(Args, Debug, Clone)]
struct PlanArgs {
    /// Planning steps N.
    #[arg(long, default_value_t = 40)]
    horizon: usize,
    /// Rollouts M.
    #[arg(long, default_value_t = 1000)]
    rollouts: usize,
    /// Planning and control interval δ (default Δ̄).
    #[arg(long)]
    delta: Option<f64>,
}

impl PlanArgs {
    fn config(&self, spec: &EnvSpec) -> MppiConfig {
        let mut c = MppiConfig::new(spec, self.delta.unwrap_or(spec.delta_bar));
        c.horizon = self.horizon;
        c.rollouts = self.rollouts;
        c
    }
}

#[derive(Args, Debug)]
struct CollectArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// Number of records (default 10,000; 1e6 with --full).
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fixed Δ̄ intervals instead of exponential ones.
    #[arg(long)]
    regular: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write a comma-separated text export.
    #[arg(long)]
    text: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "nlc")]
    model: ModelKind,
    /// Epoch budget (default 10 unless --minutes or --full).
    #[arg(long)]
    epochs: Option<usize>,
    /// Wall-clock budget in minutes.
    #[arg(long)]
    minutes: Option<f64>,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Per-epoch loss curve as CSV.
    #[arg(long)]
    loss_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[command(flatten)]
    plan: PlanArgs,
    /// Trained checkpoints to evaluate next to the random and oracle baselines.
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    /// Number of seeds (default 5; 20 with --full).
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, default_value_t = 10.0)]
    seconds: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DeltaMseArgs {
    #[arg(long = "model", required = true)]
    models: Vec<PathBuf>,
    /// Held-out dataset collected with a different seed.
    #[arg(long)]
    validation: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.02, 0.034, 0.05, 0.075, 0.1, 0.15, 0.2])]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    anchors: usize,
    /// Include the true dynamics as a reference row.
    #[arg(long)]
    with_oracle: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct HorizonArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    #[arg(long, default_value = "fixed-n")]
    mode: HorizonMode,
    /// Horizons in seconds (fixed-n) or intervals δ (fixed-h).
    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 2.0, 4.0, 8.0, 12.0])]
    grid: Vec<f64>,
    /// N for fixed-n mode.
    #[arg(long, default_value_t = 40)]
    steps: usize,
    /// H for fixed-h mode.
    #[arg(long, default_value_t = 2.0)]
    horizon_seconds: f64,
    #[arg(long, default_value_t = 1000)]
    rollouts: usize,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, default_value_t = 10.0)]
    seconds: f64,
    /// Skip the random/oracle baseline runs.
    #[arg(long)]
    no_normalize: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SamplesArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[command(flatten)]
    plan: PlanArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [ModelKind::Nlc, ModelKind::Rnn])]
    models: Vec<ModelKind>,
    #[arg(long, value_delimiter = ',', default_values_t = [200usize, 1000, 10000])]
    grid: Vec<usize>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    lr: f64,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long, default_value_t = 10.0)]
    seconds: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ScoreTableArgs {
    /// CSV files written by `eval`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Errors that should exit with the usage status.
fn usage(msg: String) -> Error {
    Error::Config(msg)
}

fn require_file(p: &Path) -> Result<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(usage(format!("no such file: {}", p.display())))
    }
}

fn seed_list(n: Option<u64>, full: bool) -> Vec<u64> {
    (0..n.unwrap_or(if full { 20 } else { 5 })).collect()
}

fn markdown_path(csv: &Path) -> PathBuf {
    csv.with_extension("md")
}

fn write_markdown_rows(path: &Path, title: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut s = format!("# {title}\n\n| {} |\n|{}\n", columns.join(" | "), "---|".repeat(columns.len()));
    for r in rows {
        s.push_str(&format!("| {} |\n", r.join(" | ")));
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn short(v: f64) -> String {
    format!("{v:.4}")
}

fn run_collect(a: &CollectArgs, full: bool) -> Result<()> {
    let spec = a.env.spec()?;
    let mut cfg = CollectConfig::new(a.samples.unwrap_or(if full { 1_000_000 } else { 10_000 }), a.seed);
    if a.regular {
        cfg.sampling = Sampling::Regular;
    }
    let mut expert = oracle_expert(&spec)?;
    let data = collect(&spec, &mut expert, &cfg)?;
    data.save(&a.out)?;
    if let Some(t) = &a.text {
        let mut f = std::io::BufWriter::new(std::fs::File::create(t)?);
        data.write_text(&mut f)?;
    }
    println!("wrote {} records to {}", data.len(), a.out.display());
    Ok(())
}

fn run_train(a: &TrainArgs, full: bool) -> Result<()> {
    require_file(&a.data)?;
    let data = Dataset::load(&a.data)?;
    let budget = match (a.epochs, a.minutes) {
        (Some(_), Some(_)) => return Err(usage("give either --epochs or --minutes".into())),
        (Some(e), None) => Budget::Epochs(e),
        (None, Some(m)) => Budget::WallClock(Duration::from_secs_f64(m * 60.0)),
        (None, None) if full => Budget::WallClock(Duration::from_secs(135 * 60)),
        (None, None) => Budget::Epochs(10),
    };
    let cfg = TrainConfig { budget, lr: a.lr, batch_size: a.batch_size, seed: a.seed, clip_norm: None };
    let (std_data, norm) = standardize(&data)?;
    let windows = make_windows(&std_data, data.manifest.omega);
    let (model, report) = fit_windows(a.model, norm, data.manifest.omega, &windows, &cfg, a.seed)?;
    model.save(&a.out)?;
    if let Some(p) = &a.loss_csv {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(["epoch", "loss"])?;
        w.write_record(["0".to_string(), fmt_f64(report.initial_loss)])?;
        for (i, l) in report.epoch_losses.iter().enumerate() {
            w.write_record([(i + 1).to_string(), fmt_f64(*l)])?;
        }
        w.flush()?;
    }
    println!(
        "trained {} on {} windows: loss {:.4e} -> {:.4e} in {:.1}s; saved {}",
        a.model,
        windows.len(),
        report.initial_loss,
        report.final_loss(),
        report.seconds,
        a.out.display()
    );
    Ok(())
}

const EVAL_COLUMNS: [&str; 10] =
    ["env", "tau_steps", "model", "seed", "reward", "avg_reward", "score", "planning_seconds", "steps", "failed"];

fn run_eval(a: &EvalArgs, full: bool) -> Result<()> {
    let spec = a.env.spec()?;
    let cfg = a.plan.config(&spec);
    let seeds = seed_list(a.seeds, full);
    let mut learned = Vec::new();
    for p in &a.models {
        require_file(p)?;
        let m = LearnedModel::load(p)?;
        let name = format!("{}:{}", m.kind(), p.file_stem().and_then(|s| s.to_str()).unwrap_or("model"));
        learned.push((name, m.into_shared()));
    }
    let config = format!("eval {:?} {:?} {:?} {:?} {}", spec, cfg, a.models, seeds, a.seconds);
    let mut csv = ResultsCsv::open(&a.out, &config, &EVAL_COLUMNS, 4)?;
    let baselines = Baselines::compute(&spec, &cfg, a.seconds, &seeds)?;
    let env = spec.kind().name().to_string();
    let tau = a.env.tau.to_string();
    let mut policies: Vec<(String, Box<dyn Policy>)> = vec![
        ("random".into(), Box::new(RandomPolicy::new(&spec))),
        ("oracle".into(), Box::new(MppiPolicy::new(&spec, cfg.clone(), Arc::new(OracleModel::new(spec.clone())))?)),
    ];
    for (name, m) in learned {
        policies.push((name, Box::new(MppiPolicy::new(&spec, cfg.clone(), m)?)));
    }
    for (name, policy) in &mut policies {
        for &seed in &seeds {
            let key = vec![env.clone(), tau.clone(), name.clone(), seed.to_string()];
            if csv.contains(&key) {
                continue;
            }
            let e = &evaluate_policy(policy.as_mut(), &spec, cfg.delta, a.seconds, &[seed])?[0];
            let score = baselines.score(e.average_reward())?;
            let mut row = key;
            row.extend([fmt_f64(e.reward), fmt_f64(e.average_reward()), fmt_f64(score), fmt_f64(e.planning_seconds)]);
            row.extend([e.steps.to_string(), e.failed.to_string()]);
            csv.append(row)?;
        }
    }
    let table = score_table(&[a.out.clone()])?;
    std::fs::write(markdown_path(&a.out), table.to_markdown())?;
    print!("{}", table.to_markdown());
    Ok(())
}

fn score_table(inputs: &[PathBuf]) -> Result<ScoreTable> {
    let mut groups: Vec<((String, u32, String), Vec<f64>)> = Vec::new();
    for p in inputs {
        require_file(p)?;
        let text = std::fs::read_to_string(p)?;
        let body: String = text.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let headers = rd.headers()?.clone();
        let col = |name: &str| {
            headers.iter().position(|h| h == name).ok_or_else(|| Error::Format(format!("{} lacks column `{name}`", p.display())))
        };
        let (ce, ct, cm, cs) = (col("env")?, col("tau_steps")?, col("model")?, col("score")?);
        for rec in rd.records() {
            let rec = rec?;
            let key = (rec[ce].to_string(), rec[ct].parse().unwrap_or(0), rec[cm].to_string());
            let score: f64 = rec[cs].parse().map_err(|_| Error::Format("bad score".into()))?;
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, v)) => v.push(score),
                None => groups.push((key, vec![score])),
            }
        }
    }
    let mut table = ScoreTable::default();
    for ((env, tau, model), scores) in groups {
        table.push(&env, tau, &model, &scores);
    }
    Ok(table)
}

fn run_score_table(a: &ScoreTableArgs) -> Result<()> {
    let md = score_table(&a.inputs)?.to_markdown();
    match &a.out {
        Some(p) => std::fs::write(p, &md)?,
        None => print!("{md}"),
    }
    Ok(())
}

fn run_delta_mse(a: &DeltaMseArgs) -> Result<()> {
    require_file(&a.validation)?;
    let val = Dataset::load(&a.validation)?;
    let spec = val.manifest.env_spec();
    let mut models: Vec<(String, Arc<dyn DynamicsModel>)> = Vec::new();
    for p in &a.models {
        require_file(p)?;
        let m = LearnedModel::load(p)?;
        models.push((format!("{}:{}", m.kind(), p.display()), m.into_shared()));
    }
    if a.with_oracle {
        models.push(("oracle".into(), Arc::new(OracleModel::new(spec.clone()))));
    }
    let config = format!("delta-mse {:?} {:?} {:?} {}", a.models, a.validation, a.deltas, a.anchors);
    let columns = ["model", "delta", "mse", "anchors"];
    let mut csv = ResultsCsv::open(&a.out, &config, &columns, 2)?;
    for (name, m) in &models {
        let todo: Vec<f64> = a.deltas.iter().copied().filter(|d| !csv.contains(&[name.clone(), fmt_f64(*d)])).collect();
        if todo.is_empty() {
            continue;
        }
        for r in sweep_delta_mse(m.as_ref(), &spec, &val, &todo, a.anchors)? {
            csv.append(vec![name.clone(), fmt_f64(r.delta), fmt_f64(r.mse), r.anchors.to_string()])?;
        }
    }
    let rows: Vec<Vec<String>> =
        csv.rows().iter().map(|r| vec![r[0].clone(), short(r[1].parse().unwrap_or(f64::NAN)), format!("{:.4e}", r[2].parse::<f64>().unwrap_or(f64::NAN)), r[3].clone()]).collect();
    write_markdown_rows(&markdown_path(&a.out), "Next-step MSE against δ", &columns, &rows)
}

fn run_horizon(a: &HorizonArgs, full: bool) -> Result<()> {
    let spec = a.env.spec()?;
    let mut models: Vec<(String, Arc<dyn DynamicsModel>)> = Vec::new();
    for p in &a.models {
        require_file(p)?;
        let m = LearnedModel::load(p)?;
        models.push((format!("{}:{}", m.kind(), p.display()), m.into_shared()));
    }
    if models.is_empty() {
        models.push(("oracle".into(), Arc::new(OracleModel::new(spec.clone()))));
    }
    let sweep = HorizonSweep {
        points: horizon_grid(a.mode, a.steps, a.horizon_seconds, &a.grid),
        rollouts: a.rollouts,
        seeds: seed_list(a.seeds, full),
        seconds: a.seconds,
        normalize: !a.no_normalize,
    };
    let config = format!("horizon {:?} {:?} {:?}", spec, a.models, sweep);
    let mut csv = ResultsCsv::open(&a.out, &config, &HorizonRow::COLUMNS, 3)?;
    let rows = sweep_horizon(&models, &spec, &sweep, Some(&mut csv))?;
    let md: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.model.clone(),
                short(r.delta),
                r.steps.to_string(),
                short(r.horizon),
                short(r.avg_reward),
                format!("{:.2}", r.score),
                format!("{:.4}", r.planning_seconds),
                format!("{}", r.evaluations_per_step),
            ]
        })
        .collect();
    write_markdown_rows(&markdown_path(&a.out), "Planning horizon sweep", &HorizonRow::COLUMNS, &md)
}

fn run_samples(a: &SamplesArgs, full: bool) -> Result<()> {
    let spec = a.env.spec()?;
    let mut train = TrainConfig::new(Budget::Epochs(a.epochs));
    train.batch_size = a.batch_size;
    train.lr = a.lr;
    let sweep = SamplesSweep {
        kinds: a.models.clone(),
        grid: a.grid.clone(),
        seeds: seed_list(a.seeds, full),
        train,
        data_seed: a.data_seed,
        mppi: a.plan.config(&spec),
        seconds: a.seconds,
    };
    let config = format!("samples {:?} {:?}", spec, sweep);
    let mut csv = ResultsCsv::open(&a.out, &config, &SamplesRow::COLUMNS, 2)?;
    let rows = sweep_samples(&spec, &sweep, Some(&mut csv))?;
    let md: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![r.model.clone(), r.samples.to_string(), format!("{:.2}", r.score_mean), format!("{:.2}", r.score_std), format!("{:.4e}", r.final_loss), r.seeds.to_string()])
        .collect();
    write_markdown_rows(&markdown_path(&a.out), "Score against training samples", &SamplesRow::COLUMNS, &md)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Cmd::Collect(a) => run_collect(a, cli.full),
        Cmd::Train(a) => run_train(a, cli.full),
        Cmd::Eval(a) => run_eval(a, cli.full),
        Cmd::Sweep(SweepCmd::DeltaMse(a)) => run_delta_mse(a),
        Cmd::Sweep(SweepCmd::Horizon(a)) => run_horizon(a, cli.full),
        Cmd::Sweep(SweepCmd::Samples(a)) => run_samples(a, cli.full),
        Cmd::ScoreTable(a) => run_score_table(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

