//! Standardization and next-step training windows.

use super::dataset::Dataset;
use super::norm::{column_stats, NormStats};
use crate::error::{Error, Result};
use crate::models::{ActionHistory, HistoryBatch};
use crate::tensor::Array;

/// Fits [`NormStats`] on `d` and returns the standardized copy.
///
/// Interval statistics come from consecutive records within each trajectory.
pub fn standardize(d: &Dataset) -> Result<(Dataset, NormStats)> {
    if d.is_empty() {
        return Err(Error::Contract("cannot standardize an empty dataset".into()));
    }
    let m = &d.manifest;
    let xs: Vec<f64> = d.records.iter().flat_map(|r| r.x.iter().copied()).collect();
    let as_: Vec<f64> = d.records.iter().flat_map(|r| r.a.iter().copied()).collect();
    let deltas: Vec<f64> = d.trajectories().iter().flat_map(|tr| tr.windows(2).map(|w| w[1].t - w[0].t)).collect();
    let (state_mean, state_std, f1) = column_stats(&xs, m.state_dim);
    let (action_mean, action_std, f2) = column_stats(&as_, m.action_dim);
    let (dm, ds, f3) = column_stats(&deltas, 1);
    if f1 || f2 || f3 {
        log::warn!("dataset has a constant dimension; its standard deviation was floored");
    }
    let norm = NormStats { state_mean, state_std, action_mean, action_std, delta_mean: dm[0], delta_std: ds[0] };
    let mut out = d.clone();
    for r in &mut out.records {
        norm.standardize_states(&mut r.x);
        norm.standardize_actions(&mut r.a);
    }
    let mut zero = d.manifest.zero_action.clone();
    norm.standardize_actions(&mut zero);
    out.manifest.zero_action = zero;
    Ok((out, norm))
}

/// One next-step example `(x_i, H_i, δ) → x_{i+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingWindow {
    pub x: Vec<f64>,
    pub history: ActionHistory,
    /// Interval in seconds.
    pub delta: f64,
    pub target: Vec<f64>,
}

/// One window per consecutive record pair of each trajectory.
///
/// Histories cover `[t_i − ω, t_i]` of the same trajectory; grid slots before
/// the episode start hold the dataset's zero action.
pub fn make_windows(d: &Dataset, omega: f64) -> Vec<TrainingWindow> {
    let m = &d.manifest;
    let mut out = Vec::new();
    for tr in d.trajectories() {
        let times: Vec<f64> = tr.iter().map(|r| r.t).collect();
        let actions: Vec<f64> = tr.iter().flat_map(|r| r.a.iter().copied()).collect();
        for i in 0..tr.len().saturating_sub(1) {
            let history = ActionHistory::from_log_padded(
                &times[..=i],
                &actions[..(i + 1) * m.action_dim],
                m.action_dim,
                times[i],
                omega,
                m.delta_bar,
                &m.zero_action,
            );
            out.push(TrainingWindow {
                x: tr[i].x.clone(),
                history,
                delta: times[i + 1] - times[i],
                target: tr[i + 1].x.clone(),
            });
        }
    }
    out
}

/// Stacked windows ready for a forward pass.
#[derive(Clone, Debug)]
pub struct WindowBatch {
    /// `[B, d_X]`
    pub x: Array,
    pub hist: HistoryBatch,
    pub deltas: Vec<f64>,
    /// `[B, d_X]`
    pub target: Array,
}

impl WindowBatch {
    pub fn from_windows(ws: &[&TrainingWindow]) -> Result<Self> {
        let Some(first) = ws.first() else {
            return Err(Error::Contract("empty window batch".into()));
        };
        let (b, dx) = (ws.len(), first.x.len());
        let x = Array::new(&[b, dx], ws.iter().flat_map(|w| w.x.iter().copied()).collect())?;
        let target = Array::new(&[b, dx], ws.iter().flat_map(|w| w.target.iter().copied()).collect())?;
        let hs: Vec<&ActionHistory> = ws.iter().map(|w| &w.history).collect();
        Ok(Self { x, hist: HistoryBatch::from_histories(&hs)?, deltas: ws.iter().map(|w| w.delta).collect(), target })
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}
