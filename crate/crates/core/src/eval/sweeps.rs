//! Parameter sweeps: interval generalization, planning horizon and sample count.

use std::sync::Arc;

use super::episode::{run_episode, EpisodeConfig, EpisodeResult};
use super::output::{fmt_f64, ResultsCsv};
use super::score::{mean_std, normalized_score};
use crate::envs::{observation, raw_from_observation, EnvSpec};
use crate::error::{Error, Result};
use crate::models::{ActionHistory, DynamicsModel, ModelKind, OracleModel, StateSpace};
use crate::mppi::MppiConfig;
use crate::pipeline::{collect, fit, oracle_expert, CollectConfig, Dataset, TrainConfig};
use crate::policy::{MppiPolicy, Policy, RandomPolicy};

fn parse_f(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Format(format!("bad number `{s}` in results file")))
}

/// Runs one episode per seed.
pub fn evaluate_policy(policy: &mut dyn Policy, spec: &EnvSpec, delta: f64, seconds: f64, seeds: &[u64]) -> Result<Vec<EpisodeResult>> {
    seeds.iter().map(|&seed| run_episode(policy, spec, &EpisodeConfig { delta, seconds, seed })).collect()
}

/// Seed-matched average rewards per step of the random and oracle policies.
#[derive(Clone, Debug, PartialEq)]
pub struct Baselines {
    pub random: Vec<f64>,
    pub oracle: Vec<f64>,
}

impl Baselines {
    pub fn compute(spec: &EnvSpec, cfg: &MppiConfig, seconds: f64, seeds: &[u64]) -> Result<Self> {
        let mut random = RandomPolicy::new(spec);
        let r = evaluate_policy(&mut random, spec, cfg.delta, seconds, seeds)?;
        let mut oracle = MppiPolicy::new(spec, cfg.clone(), Arc::new(OracleModel::new(spec.clone())))?;
        let o = evaluate_policy(&mut oracle, spec, cfg.delta, seconds, seeds)?;
        Ok(Self { random: r.iter().map(|e| e.average_reward()).collect(), oracle: o.iter().map(|e| e.average_reward()).collect() })
    }

    /// Normalized score of one average reward against the seed-averaged baselines.
    pub fn score(&self, avg_reward: f64) -> Result<f64> {
        normalized_score(avg_reward, mean_std(&self.random).0, mean_std(&self.oracle).0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeltaMseRow {
    pub delta: f64,
    pub mse: f64,
    pub anchors: usize,
}

/// Next-step error of `model` at each interval in `deltas`.
///
/// Anchors are evenly strided records of `validation` (raw units). Targets
/// come from the true dynamics integrated from the anchor under the same
/// history window the model receives. Errors are measured on observations.
pub fn sweep_delta_mse(
    model: &dyn DynamicsModel,
    spec: &EnvSpec,
    validation: &Dataset,
    deltas: &[f64],
    max_anchors: usize,
) -> Result<Vec<DeltaMseRow>> {
    let m = &validation.manifest;
    let oracle = OracleModel::new(spec.clone());
    let mut anchors: Vec<(Vec<f64>, ActionHistory)> = Vec::new();
    for tr in validation.trajectories() {
        let times: Vec<f64> = tr.iter().map(|r| r.t).collect();
        let actions: Vec<f64> = tr.iter().flat_map(|r| r.a.iter().copied()).collect();
        for i in 0..tr.len() {
            let h = ActionHistory::from_log(&times[..=i], &actions[..(i + 1) * m.action_dim], m.action_dim, times[i], m.omega, m.delta_bar);
            anchors.push((tr[i].x.clone(), h));
        }
    }
    if anchors.is_empty() {
        return Err(Error::Contract("validation dataset is empty".into()));
    }
    let stride = anchors.len().div_ceil(max_anchors.max(1));
    let picked: Vec<&(Vec<f64>, ActionHistory)> = anchors.iter().step_by(stride).collect();
    let mut raw = vec![0.0; spec.state_dim()];
    let mut rows = Vec::new();
    for &delta in deltas {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (obs, h) in &picked {
            raw_from_observation(spec, obs, &mut raw);
            let target = observation(spec, &oracle.predict_one(&raw, &h.rel_times, &h.actions, delta)?);
            let pred = match model.state_space() {
                StateSpace::Raw => observation(spec, &model.predict(&raw, h, delta)?),
                StateSpace::Observation => model.predict(obs, h, delta)?,
            };
            sum += pred.iter().zip(&target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
            count += target.len();
        }
        rows.push(DeltaMseRow { delta, mse: sum / count as f64, anchors: picked.len() });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HorizonMode {
    /// N fixed, δ = H/N grows with the horizon.
    FixedSteps,
    /// H fixed, N = H/δ shrinks as δ grows.
    FixedHorizon,
}

impl std::str::FromStr for HorizonMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed-n" => Ok(Self::FixedSteps),
            "fixed-h" => Ok(Self::FixedHorizon),
            _ => Err(Error::Config(format!("unknown horizon mode `{s}` (fixed-n | fixed-h)"))),
        }
    }
}

/// `(δ, N)` pairs for a sweep. `grid` holds horizons in seconds for
/// [`HorizonMode::FixedSteps`] and intervals for [`HorizonMode::FixedHorizon`].
pub fn horizon_grid(mode: HorizonMode, steps: usize, horizon: f64, grid: &[f64]) -> Vec<(f64, usize)> {
    grid.iter()
        .map(|&g| match mode {
            HorizonMode::FixedSteps => (g / steps as f64, steps),
            HorizonMode::FixedHorizon => (g, ((horizon / g).round() as usize).max(1)),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HorizonRow {
    pub model: String,
    pub delta: f64,
    pub steps: usize,
    pub horizon: f64,
    pub avg_reward: f64,
    /// NaN when baselines were not computed.
    pub score: f64,
    pub planning_seconds: f64,
    pub evaluations_per_step: f64,
}

impl HorizonRow {
    pub const COLUMNS: [&'static str; 8] =
        ["model", "delta", "steps", "horizon", "avg_reward", "score", "planning_seconds", "evaluations_per_step"];

    fn key(model: &str, delta: f64, steps: usize) -> Vec<String> {
        vec![model.to_string(), fmt_f64(delta), steps.to_string()]
    }

    fn fields(&self) -> Vec<String> {
        let mut f = Self::key(&self.model, self.delta, self.steps);
        f.extend([self.horizon, self.avg_reward, self.score, self.planning_seconds, self.evaluations_per_step].map(fmt_f64));
        f
    }

    fn parse(f: &[String]) -> Result<Self> {
        Ok(Self {
            model: f[0].clone(),
            delta: parse_f(&f[1])?,
            steps: parse_f(&f[2])? as usize,
            horizon: parse_f(&f[3])?,
            avg_reward: parse_f(&f[4])?,
            score: parse_f(&f[5])?,
            planning_seconds: parse_f(&f[6])?,
            evaluations_per_step: parse_f(&f[7])?,
        })
    }
}

#[derive(Clone, Debug)]
pub struct HorizonSweep {
    pub points: Vec<(f64, usize)>,
    pub rollouts: usize,
    pub seeds: Vec<u64>,
    pub seconds: f64,
    /// Also run the random and oracle policies at each point to normalize scores.
    pub normalize: bool,
}

/// Plans with each model at every `(δ, N)` point and reports reward and planning cost.
pub fn sweep_horizon(
    models: &[(String, Arc<dyn DynamicsModel>)],
    spec: &EnvSpec,
    sweep: &HorizonSweep,
    mut csv: Option<&mut ResultsCsv>,
) -> Result<Vec<HorizonRow>> {
    let mut rows = Vec::new();
    for &(delta, steps) in &sweep.points {
        let mut cfg = MppiConfig::new(spec, delta);
        cfg.horizon = steps;
        cfg.rollouts = sweep.rollouts;
        let mut baselines = None;
        for (name, model) in models {
            let key = HorizonRow::key(name, delta, steps);
            if let Some(c) = csv.as_deref() {
                if let Some(f) = c.rows().iter().find(|r| r[..3] == key[..]) {
                    rows.push(HorizonRow::parse(f)?);
                    continue;
                }
            }
            if sweep.normalize && baselines.is_none() {
                baselines = Some(Baselines::compute(spec, &cfg, sweep.seconds, &sweep.seeds)?);
            }
            let mut policy = MppiPolicy::new(spec, cfg.clone(), model.clone())?;
            let eps = evaluate_policy(&mut policy, spec, delta, sweep.seconds, &sweep.seeds)?;
            let stats = policy.stats();
            let avg: Vec<f64> = eps.iter().map(|e| e.average_reward()).collect();
            let avg_reward = mean_std(&avg).0;
            let score = match &baselines {
                Some(b) => b.score(avg_reward)?,
                None => f64::NAN,
            };
            let row = HorizonRow {
                model: name.clone(),
                delta,
                steps,
                horizon: delta * steps as f64,
                avg_reward,
                score,
                planning_seconds: mean_std(&eps.iter().map(|e| e.planning_seconds).collect::<Vec<_>>()).0,
                evaluations_per_step: stats.model_evaluations as f64 / stats.policy_steps.max(1) as f64,
            };
            if let Some(c) = csv.as_deref_mut() {
                c.append(row.fields())?;
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplesRow {
    pub model: String,
    pub samples: usize,
    pub score_mean: f64,
    pub score_std: f64,
    pub final_loss: f64,
    pub seeds: usize,
}

impl SamplesRow {
    pub const COLUMNS: [&'static str; 6] = ["model", "samples", "score_mean", "score_std", "final_loss", "seeds"];

    fn key(model: &str, samples: usize) -> Vec<String> {
        vec![model.to_string(), samples.to_string()]
    }

    fn fields(&self) -> Vec<String> {
        let mut f = Self::key(&self.model, self.samples);
        f.extend([self.score_mean, self.score_std, self.final_loss].map(fmt_f64));
        f.push(self.seeds.to_string());
        f
    }

    fn parse(f: &[String]) -> Result<Self> {
        Ok(Self {
            model: f[0].clone(),
            samples: parse_f(&f[1])? as usize,
            score_mean: parse_f(&f[2])?,
            score_std: parse_f(&f[3])?,
            final_loss: parse_f(&f[4])?,
            seeds: parse_f(&f[5])? as usize,
        })
    }
}

#[derive(Clone, Debug)]
pub struct SamplesSweep {
    pub kinds: Vec<ModelKind>,
    pub grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    pub data_seed: u64,
    pub mppi: MppiConfig,
    pub seconds: f64,
}

/// Collects, trains and evaluates one model per (sample count, kind).
pub fn sweep_samples(spec: &EnvSpec, sweep: &SamplesSweep, mut csv: Option<&mut ResultsCsv>) -> Result<Vec<SamplesRow>> {
    let mut baselines = None;
    let mut rows = Vec::new();
    for &n in &sweep.grid {
        let mut data = None;
        for &kind in &sweep.kinds {
            let key = SamplesRow::key(kind.name(), n);
            if let Some(c) = csv.as_deref() {
                if let Some(f) = c.rows().iter().find(|r| r[..2] == key[..]) {
                    rows.push(SamplesRow::parse(f)?);
                    continue;
                }
            }
            if baselines.is_none() {
                baselines = Some(Baselines::compute(spec, &sweep.mppi, sweep.seconds, &sweep.seeds)?);
            }
            let b = baselines.as_ref().expect("computed above");
            if data.is_none() {
                let mut expert = oracle_expert(spec)?;
                data = Some(collect(spec, &mut expert, &CollectConfig::new(n, sweep.data_seed))?);
            }
            let (model, report) = fit(kind, data.as_ref().expect("collected above"), &sweep.train, sweep.train.seed)?;
            let mut policy = MppiPolicy::new(spec, sweep.mppi.clone(), model.into_shared())?;
            let eps = evaluate_policy(&mut policy, spec, sweep.mppi.delta, sweep.seconds, &sweep.seeds)?;
            let scores = eps.iter().map(|e| b.score(e.average_reward())).collect::<Result<Vec<_>>>()?;
            let (score_mean, score_std) = mean_std(&scores);
            let row = SamplesRow { model: kind.name().into(), samples: n, score_mean, score_std, final_loss: report.final_loss(), seeds: scores.len() };
            if let Some(c) = csv.as_deref_mut() {
                c.append(row.fields())?;
            }
            rows.push(row);
        }
    }
    Ok(rows)
}
