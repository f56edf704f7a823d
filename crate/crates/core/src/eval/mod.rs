//! Closed-loop evaluation, score normalization and sweeps.

mod episode;
mod output;
mod score;
mod sweeps;

pub use episode::{run_episode, EpisodeConfig, EpisodeResult};
pub use output::{config_hash, fmt_f64, ResultsCsv};
pub use score::{mean_std, normalized_score, ScoreRow, ScoreTable};
pub use sweeps::{
    evaluate_policy, horizon_grid, sweep_delta_mse, sweep_horizon, sweep_samples, Baselines, DeltaMseRow, HorizonMode,
    HorizonRow, HorizonSweep, SamplesRow, SamplesSweep,
};
