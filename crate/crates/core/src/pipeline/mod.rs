//! Offline data, standardization, windowing and training.

mod collect;
mod dataset;
mod norm;
mod train;
mod windows;

pub use collect::{collect, oracle_expert, perturb_action, CollectConfig};
pub use dataset::{Dataset, DatasetManifest, TrajectorySample};
pub use norm::{NormStats, STD_FLOOR};
pub use train::{evaluate_loss, train, Budget, TrainConfig, TrainReport};
pub use windows::{make_windows, standardize, TrainingWindow, WindowBatch};

use crate::error::Result;
use crate::models::{LearnedModel, ModelKind};

/// Standardizes `data`, windows it and trains a fresh model of `kind`.
pub fn fit(kind: ModelKind, data: &Dataset, cfg: &TrainConfig, init_seed: u64) -> Result<(LearnedModel, TrainReport)> {
    let (std_data, norm) = standardize(data)?;
    let windows = make_windows(&std_data, data.manifest.omega);
    fit_windows(kind, norm, data.manifest.omega, &windows, cfg, init_seed)
}

/// Trains a fresh model of `kind` on already standardized windows.
pub fn fit_windows(
    kind: ModelKind,
    norm: NormStats,
    omega: f64,
    windows: &[TrainingWindow],
    cfg: &TrainConfig,
    init_seed: u64,
) -> Result<(LearnedModel, TrainReport)> {
    let mut model = LearnedModel::new(kind, norm, omega, init_seed)?;
    let report = train(model.as_trainable_mut(), windows, cfg)?;
    Ok((model, report))
}
