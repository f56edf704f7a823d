use crate::error::{Error, Result};

/// Smallest standard deviation used for scaling.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-dimension affine normalization constants.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub state_mean: Vec<f64>,
    pub state_std: Vec<f64>,
    pub action_mean: Vec<f64>,
    pub action_std: Vec<f64>,
    pub delta_mean: f64,
    pub delta_std: f64,
}

/// Mean and (population) standard deviation of each column, std floored.
pub(crate) fn column_stats(data: &[f64], cols: usize) -> (Vec<f64>, Vec<f64>, bool) {
    let rows = if cols == 0 { 0 } else { data.len() / cols };
    let mut mean = vec![0.0; cols];
    let mut std = vec![0.0; cols];
    if rows == 0 {
        return (mean, vec![1.0; cols], true);
    }
    for r in data.chunks_exact(cols) {
        mean.iter_mut().zip(r).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= rows as f64);
    for r in data.chunks_exact(cols) {
        std.iter_mut().zip(r.iter().zip(&mean)).for_each(|(s, (v, m))| *s += (v - m) * (v - m));
    }
    let mut floored = false;
    for s in &mut std {
        *s = (*s / rows as f64).sqrt();
        if !(*s >= STD_FLOOR) {
            *s = STD_FLOOR;
            floored = true;
        }
    }
    (mean, std, floored)
}

impl NormStats {
    /// Identity normalization.
    pub fn identity(state_dim: usize, action_dim: usize) -> Self {
        Self {
            state_mean: vec![0.0; state_dim],
            state_std: vec![1.0; state_dim],
            action_mean: vec![0.0; action_dim],
            action_std: vec![1.0; action_dim],
            delta_mean: 0.0,
            delta_std: 1.0,
        }
    }

    pub fn state_dim(&self) -> usize {
        self.state_mean.len()
    }

    pub fn action_dim(&self) -> usize {
        self.action_mean.len()
    }

    pub fn standardize_states(&self, x: &mut [f64]) {
        standardize(x, &self.state_mean, &self.state_std);
    }

    pub fn destandardize_states(&self, x: &mut [f64]) {
        destandardize(x, &self.state_mean, &self.state_std);
    }

    pub fn standardize_actions(&self, a: &mut [f64]) {
        standardize(a, &self.action_mean, &self.action_std);
    }

    pub fn destandardize_actions(&self, a: &mut [f64]) {
        destandardize(a, &self.action_mean, &self.action_std);
    }

    pub fn standardize_delta(&self, d: f64) -> f64 {
        (d - self.delta_mean) / self.delta_std
    }

    /// Flattened `(name, values)` pairs for checkpoint storage.
    pub fn to_named(&self) -> Vec<(&'static str, Vec<f64>)> {
        vec![
            ("norm.state_mean", self.state_mean.clone()),
            ("norm.state_std", self.state_std.clone()),
            ("norm.action_mean", self.action_mean.clone()),
            ("norm.action_std", self.action_std.clone()),
            ("norm.delta", vec![self.delta_mean, self.delta_std]),
        ]
    }

    pub fn from_named(get: impl Fn(&str) -> Option<Vec<f64>>) -> Result<Self> {
        let need = |k: &str| get(k).ok_or_else(|| Error::Format(format!("missing normalization array `{k}`")));
        let delta = need("norm.delta")?;
        if delta.len() != 2 {
            return Err(Error::Format("norm.delta must hold mean and std".into()));
        }
        Ok(Self {
            state_mean: need("norm.state_mean")?,
            state_std: need("norm.state_std")?,
            action_mean: need("norm.action_mean")?,
            action_std: need("norm.action_std")?,
            delta_mean: delta[0],
            delta_std: delta[1],
        })
    }
}

fn standardize(x: &mut [f64], mean: &[f64], std: &[f64]) {
    for row in x.chunks_exact_mut(mean.len()) {
        for ((v, m), s) in row.iter_mut().zip(mean).zip(std) {
            *v = (*v - m) / s;
        }
    }
}

fn destandardize(x: &mut [f64], mean: &[f64], std: &[f64]) {
    for row in x.chunks_exact_mut(mean.len()) {
        for ((v, m), s) in row.iter_mut().zip(mean).zip(std) {
            *v = *v * s + m;
        }
    }
}
