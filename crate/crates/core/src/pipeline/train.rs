//! Minibatch Adam training on next-step windows.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::windows::{TrainingWindow, WindowBatch};
use crate::error::{Error, Result};
use crate::models::Trainable;
use crate::tensor::{AdamState, Array, Tape};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Epochs(usize),
    /// Trains whole epochs until the elapsed time exceeds the budget.
    WallClock(Duration),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub budget: Budget,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Rescales the gradient when its global norm exceeds this value.
    pub clip_norm: Option<f64>,
}

impl TrainConfig {
    pub fn new(budget: Budget) -> Self {
        Self { budget, lr: 1e-4, batch_size: 32, seed: 0, clip_norm: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    /// Mean loss over all windows before the first update.
    pub initial_loss: f64,
    /// Mean minibatch loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
    pub seconds: f64,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(self.initial_loss)
    }
}

fn batch_loss(model: &dyn Trainable, ws: &[&TrainingWindow]) -> Result<(Tape, crate::tensor::Var)> {
    let batch = WindowBatch::from_windows(ws)?;
    let mut tape = Tape::new();
    let pred = model.forward_batch(&mut tape, &batch)?;
    let loss = tape.mse(pred, &batch.target)?;
    Ok((tape, loss))
}

/// Mean squared error of `model` over `windows`, in standardized units.
pub fn evaluate_loss(model: &dyn Trainable, windows: &[TrainingWindow], batch_size: usize) -> Result<f64> {
    if windows.is_empty() {
        return Err(Error::Contract("no windows to evaluate".into()));
    }
    let refs: Vec<&TrainingWindow> = windows.iter().collect();
    let mut total = 0.0;
    for chunk in refs.chunks(batch_size.max(1)) {
        let (tape, loss) = batch_loss(model, chunk)?;
        total += tape.value(loss).data()[0] * chunk.len() as f64;
    }
    Ok(total / windows.len() as f64)
}

fn clip_gradients(grads: &mut [Array], max_norm: f64) {
    let norm = grads.iter().flat_map(|g| g.data()).map(|v| v * v).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| g.data_mut().iter_mut().for_each(|v| *v *= s));
    }
}

/// Fits `model` to `windows` by minimizing next-step MSE.
///
/// Epoch order is shuffled from `cfg.seed`, so identical seeds give identical
/// loss curves.
pub fn train(model: &mut dyn Trainable, windows: &[TrainingWindow], cfg: &TrainConfig) -> Result<TrainReport> {
    if windows.is_empty() {
        return Err(Error::Contract("training needs at least one window".into()));
    }
    if cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(Error::Config("batch size and learning rate must be positive".into()));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(model.params(), cfg.lr);
    let mut report = TrainReport { initial_loss: evaluate_loss(model, windows, 256)?, ..Default::default() };
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut epoch = 0;
    loop {
        let done = match cfg.budget {
            Budget::Epochs(n) => epoch >= n,
            Budget::WallClock(d) => start.elapsed() >= d,
        };
        if done {
            break;
        }
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let ws: Vec<&TrainingWindow> = chunk.iter().map(|&i| &windows[i]).collect();
            let (tape, loss_var) = batch_loss(model, &ws)?;
            let loss = tape.value(loss_var).data()[0];
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, step, loss });
            }
            let mut grads = tape.backward(loss_var)?.for_params(model.params());
            if let Some(c) = cfg.clip_norm {
                clip_gradients(&mut grads, c);
            }
            adam.step(model.params_mut(), &grads)?;
            sum += loss * chunk.len() as f64;
            report.steps += 1;
        }
        let mean = sum / windows.len() as f64;
        log::info!("epoch {epoch}: loss {mean:.6e}");
        report.epoch_losses.push(mean);
        epoch += 1;
    }
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
