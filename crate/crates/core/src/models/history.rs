use crate::error::{Error, Result};

/// Longest history fed to a learned encoder; older entries are dropped.
pub const MAX_HISTORY: usize = 16;

/// Past actions with times relative to the anchor time, oldest first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ActionHistory {
    pub rel_times: Vec<f64>,
    pub actions: Vec<f64>,
    pub action_dim: usize,
}

impl ActionHistory {
    pub fn new(action_dim: usize) -> Self {
        Self { rel_times: Vec::new(), actions: Vec::new(), action_dim }
    }

    pub fn push(&mut self, rel_time: f64, action: &[f64]) {
        debug_assert_eq!(action.len(), self.action_dim);
        self.rel_times.push(rel_time);
        self.actions.extend_from_slice(action);
    }

    pub fn len(&self) -> usize {
        self.rel_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rel_times.is_empty()
    }

    pub fn action(&self, j: usize) -> &[f64] {
        &self.actions[j * self.action_dim..(j + 1) * self.action_dim]
    }

    /// Stable sort of the entries by relative time.
    pub fn canonicalize(&mut self) {
        let d = self.action_dim;
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.rel_times[a].total_cmp(&self.rel_times[b]));
        let times = idx.iter().map(|&i| self.rel_times[i]).collect();
        let actions = idx.iter().flat_map(|&i| self.actions[i * d..(i + 1) * d].to_vec()).collect();
        self.rel_times = times;
        self.actions = actions;
    }

    /// Window `[anchor − ω, anchor]` of an episode's action log.
    ///
    /// `times`/`actions` hold the absolute decision times and actions of one
    /// episode starting at time zero. Grid positions `−kΔ̄` that fall inside
    /// the window before the episode start are filled with zero actions, and
    /// at most [`MAX_HISTORY`] of the newest entries are kept.
    pub fn from_log(times: &[f64], actions: &[f64], action_dim: usize, anchor: f64, omega: f64, delta_bar: f64) -> Self {
        Self::from_log_padded(times, actions, action_dim, anchor, omega, delta_bar, &vec![0.0; action_dim])
    }

    /// [`ActionHistory::from_log`] with `pad` in place of the zero action.
    pub fn from_log_padded(
        times: &[f64],
        actions: &[f64],
        action_dim: usize,
        anchor: f64,
        omega: f64,
        delta_bar: f64,
        pad: &[f64],
    ) -> Self {
        const SLACK: f64 = 1e-9;
        let lo = anchor - omega - SLACK;
        let mut h = Self::new(action_dim);
        let start = times.first().copied().unwrap_or(0.0).min(0.0);
        let mut k = ((start - lo) / delta_bar).floor() as i64;
        while k >= 1 {
            let t = start - k as f64 * delta_bar;
            if t >= lo {
                h.push(t - anchor, pad);
            }
            k -= 1;
        }
        for (j, &t) in times.iter().enumerate() {
            if t >= lo && t <= anchor + SLACK {
                h.push(t - anchor, &actions[j * action_dim..(j + 1) * action_dim]);
            }
        }
        if h.len() > MAX_HISTORY {
            let drop = h.len() - MAX_HISTORY;
            h.rel_times.drain(..drop);
            h.actions.drain(..drop * action_dim);
        }
        h
    }
}

/// A batch of histories padded to a common length.
///
/// Row `b` holds `lens[b]` valid entries, oldest first, starting at slot 0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HistoryBatch {
    pub batch: usize,
    pub max_len: usize,
    pub action_dim: usize,
    /// `[batch × max_len × action_dim]`
    pub actions: Vec<f64>,
    /// `[batch × max_len]`
    pub rel_times: Vec<f64>,
    pub lens: Vec<usize>,
}

impl HistoryBatch {
    /// Empty batch where every row has exactly `len` entries.
    pub fn uniform(batch: usize, len: usize, action_dim: usize) -> Self {
        Self {
            batch,
            max_len: len,
            action_dim,
            actions: vec![0.0; batch * len * action_dim],
            rel_times: vec![0.0; batch * len],
            lens: vec![len; batch],
        }
    }

    pub fn from_histories(hs: &[&ActionHistory]) -> Result<Self> {
        let Some(first) = hs.first() else {
            return Err(Error::Contract("empty history batch".into()));
        };
        let d = first.action_dim;
        let max_len = hs.iter().map(|h| h.len()).max().unwrap_or(0);
        let mut out = Self::uniform(hs.len(), max_len, d);
        for (b, h) in hs.iter().enumerate() {
            if h.is_empty() {
                return Err(Error::Contract("history must contain at least one entry".into()));
            }
            if h.action_dim != d {
                return Err(Error::Dimension { op: "HistoryBatch", detail: "mixed action dimensions".into() });
            }
            out.lens[b] = h.len();
            out.rel_times[b * max_len..b * max_len + h.len()].copy_from_slice(&h.rel_times);
            out.actions[b * max_len * d..(b * max_len + h.len()) * d].copy_from_slice(&h.actions);
        }
        Ok(out)
    }

    pub fn single(h: &ActionHistory) -> Result<Self> {
        Self::from_histories(&[h])
    }

    pub fn all_full(&self) -> bool {
        self.lens.iter().all(|&l| l == self.max_len)
    }

    pub fn action(&self, b: usize, j: usize) -> &[f64] {
        let o = (b * self.max_len + j) * self.action_dim;
        &self.actions[o..o + self.action_dim]
    }

    pub fn action_mut(&mut self, b: usize, j: usize) -> &mut [f64] {
        let o = (b * self.max_len + j) * self.action_dim;
        &mut self.actions[o..o + self.action_dim]
    }

    pub fn rel_time(&self, b: usize, j: usize) -> f64 {
        self.rel_times[b * self.max_len + j]
    }

    pub fn row(&self, b: usize) -> ActionHistory {
        let l = self.lens[b];
        let o = b * self.max_len;
        ActionHistory {
            rel_times: self.rel_times[o..o + l].to_vec(),
            actions: self.actions[o * self.action_dim..(o + l) * self.action_dim].to_vec(),
            action_dim: self.action_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lens.len() != self.batch
            || self.rel_times.len() != self.batch * self.max_len
            || self.actions.len() != self.batch * self.max_len * self.action_dim
        {
            return Err(Error::Dimension { op: "HistoryBatch", detail: "inconsistent buffer sizes".into() });
        }
        if self.lens.iter().any(|&l| l == 0 || l > self.max_len) {
            return Err(Error::Contract("every history needs between 1 and max_len entries".into()));
        }
        Ok(())
    }
}
