use std::fmt::Write as _;

use crate::error::{Error, Result};

/// `100·(raw − random)/(oracle − random)`, clamped below at zero.
pub fn normalized_score(raw: f64, raw_random: f64, raw_oracle: f64) -> Result<f64> {
    let den = raw_oracle - raw_random;
    if !(den.abs() > 1e-12) || !den.is_finite() {
        return Err(Error::DegenerateScore(den));
    }
    Ok((100.0 * (raw - raw_random) / den).max(0.0))
}

/// Mean and sample standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreRow {
    pub env: String,
    /// Delay as a multiple of Δ̄.
    pub tau_steps: u32,
    pub model: String,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    /// Adds a row from per-seed normalized scores.
    pub fn push(&mut self, env: &str, tau_steps: u32, model: &str, scores: &[f64]) {
        let (mean, std) = mean_std(scores);
        self.rows.push(ScoreRow { env: env.into(), tau_steps, model: model.into(), mean, std, seeds: scores.len() });
    }

    /// One row per model, one column per (env, τ) pair, cells `mean±std`.
    pub fn to_markdown(&self) -> String {
        let mut cols: Vec<(String, u32)> = Vec::new();
        let mut models: Vec<String> = Vec::new();
        for r in &self.rows {
            if !cols.contains(&(r.env.clone(), r.tau_steps)) {
                cols.push((r.env.clone(), r.tau_steps));
            }
            if !models.contains(&r.model) {
                models.push(r.model.clone());
            }
        }
        let mut s = String::from("| model |");
        for (e, t) in &cols {
            let _ = write!(s, " {e} τ={t}Δ̄ |");
        }
        s.push_str("\n|---|");
        s.push_str(&"---|".repeat(cols.len()));
        s.push('\n');
        for m in &models {
            let _ = write!(s, "| {m} |");
            for (e, t) in &cols {
                match self.rows.iter().find(|r| &r.model == m && &r.env == e && r.tau_steps == *t) {
                    Some(r) => {
                        let _ = write!(s, " {:.2}±{:.2} |", r.mean, r.std);
                    }
                    None => s.push_str(" – |"),
                }
            }
            s.push('\n');
        }
        s
    }
}
