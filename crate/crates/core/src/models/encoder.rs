//! Stacked GRU over an action history.

use rand::Rng;

use super::history::HistoryBatch;
use crate::error::Result;
use crate::tensor::{Array, GruLayer, GruScratch, GruVars, Params, Tape, Var};

/// Recurrent encoder over `(action, relative time / ω)` entries.
#[derive(Clone, Debug)]
pub struct SeqEncoder {
    pub layers: Vec<GruLayer>,
    /// Newest entry first when set.
    pub reverse: bool,
    pub omega: f64,
    pub action_dim: usize,
}

impl SeqEncoder {
    pub fn new(params: &mut Params, name: &str, action_dim: usize, hidden: usize, layers: usize, reverse: bool, omega: f64, rng: &mut impl Rng) -> Self {
        let layers = (0..layers)
            .map(|l| {
                let inputs = if l == 0 { action_dim + 1 } else { hidden };
                GruLayer::new(params, &format!("{name}.gru{l}"), inputs, hidden, rng)
            })
            .collect();
        Self { layers, reverse, omega, action_dim }
    }

    pub fn hidden(&self) -> usize {
        self.layers.last().map_or(0, |l| l.hidden)
    }

    /// Inputs at sequence position `s` and the rows for which `s` is a valid position.
    fn step_inputs(&self, hist: &HistoryBatch, s: usize, out: &mut Vec<f64>, active: &mut Vec<bool>) {
        let d = self.action_dim;
        out.clear();
        out.resize(hist.batch * (d + 1), 0.0);
        active.clear();
        for b in 0..hist.batch {
            let len = hist.lens[b];
            let on = s < len;
            active.push(on);
            if on {
                let j = if self.reverse { len - 1 - s } else { s };
                let row = &mut out[b * (d + 1)..(b + 1) * (d + 1)];
                row[..d].copy_from_slice(hist.action(b, j));
                row[d] = hist.rel_time(b, j) / self.omega;
            }
        }
    }

    pub fn bind(&self, tape: &mut Tape, params: &Params) -> Vec<GruVars> {
        self.layers.iter().map(|l| l.bind(tape, params)).collect()
    }

    /// Final hidden state of the top layer, `[batch × hidden]`.
    pub fn forward_tape(&self, tape: &mut Tape, vars: &[GruVars], hist: &HistoryBatch) -> Result<Var> {
        hist.validate()?;
        let b = hist.batch;
        let mut hs: Vec<Var> = self.layers.iter().map(|l| tape.constant(Array::zeros(&[b, l.hidden]))).collect();
        let mut buf = Vec::new();
        let mut active = Vec::new();
        for s in 0..hist.max_len {
            self.step_inputs(hist, s, &mut buf, &mut active);
            let all = active.iter().all(|&a| a);
            let mut x = tape.constant(Array::new(&[b, self.action_dim + 1], buf.clone())?);
            for (l, layer) in self.layers.iter().enumerate() {
                let h_new = layer.cell(tape, &vars[l], x, hs[l])?;
                hs[l] = if all { h_new } else { tape.select_rows(&active, h_new, hs[l])? };
                x = hs[l];
            }
        }
        Ok(*hs.last().expect("at least one layer"))
    }

    /// Inference twin of [`SeqEncoder::forward_tape`].
    pub fn infer(&self, params: &Params, hist: &HistoryBatch) -> Result<Vec<f64>> {
        hist.validate()?;
        let b = hist.batch;
        let mut hs: Vec<Vec<f64>> = self.layers.iter().map(|l| vec![0.0; b * l.hidden]).collect();
        let mut scratch = GruScratch::default();
        let mut buf = Vec::new();
        let mut active = Vec::new();
        let mut prev = Vec::new();
        for s in 0..hist.max_len {
            self.step_inputs(hist, s, &mut buf, &mut active);
            let all = active.iter().all(|&a| a);
            for (l, layer) in self.layers.iter().enumerate() {
                let hd = layer.hidden;
                if !all {
                    prev.clone_from(&hs[l]);
                }
                let mut h = std::mem::take(&mut hs[l]);
                let input = if l == 0 { &buf } else { &hs[l - 1] };
                layer.step(params, input, &mut h, b, &mut scratch)?;
                if !all {
                    for (r, &on) in active.iter().enumerate() {
                        if !on {
                            h[r * hd..(r + 1) * hd].copy_from_slice(&prev[r * hd..(r + 1) * hd]);
                        }
                    }
                }
                hs[l] = h;
            }
        }
        Ok(hs.pop().expect("at least one layer"))
    }
}
