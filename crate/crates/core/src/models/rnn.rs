//! Recurrent baseline with the interval as an extra input: `x̂ = x + f(x, history, δ)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::encoder::SeqEncoder;
use super::history::HistoryBatch;
use super::{checkpoint_meta, restore_params, DynamicsModel, ModelKind, StateSpace, Trainable};
use crate::error::{dim_err, Error, Result};
use crate::pipeline::{NormStats, WindowBatch};
use crate::tensor::{Array, Checkpoint, Linear, Params, Tape, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct RnnConfig {
    pub state_dim: usize,
    pub action_dim: usize,
    pub hidden: usize,
    pub omega: f64,
}

impl RnnConfig {
    pub fn new(state_dim: usize, action_dim: usize, omega: f64) -> Self {
        Self { state_dim, action_dim, hidden: 160, omega }
    }
}

#[derive(Clone, Debug)]
pub struct RnnModel {
    pub cfg: RnnConfig,
    pub params: Params,
    pub norm: NormStats,
    encoder: SeqEncoder,
    out: Linear,
}

impl RnnModel {
    pub fn new(cfg: RnnConfig, norm: NormStats, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Params::new();
        let encoder = SeqEncoder::new(&mut params, "encoder", cfg.action_dim, cfg.hidden, 1, false, cfg.omega, &mut rng);
        let out = Linear::new(&mut params, "out", cfg.hidden + cfg.state_dim + 1, cfg.state_dim, &mut rng);
        Self { cfg, params, norm, encoder, out }
    }

    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }

    /// The output layer, exposed so tests can zero it.
    pub fn output_layer(&self) -> &Linear {
        &self.out
    }

    fn check(&self, b: usize, xs: usize, hist: &HistoryBatch, nd: usize) -> Result<()> {
        if xs != b * self.cfg.state_dim || hist.batch != b || nd != b {
            return dim_err("rnn forward", format!("batch {b}, {xs} state values, {} histories, {nd} intervals", hist.batch));
        }
        Ok(())
    }

    fn check_delta(d: f64) -> Result<()> {
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Domain(format!("prediction interval must be positive, got {d}")));
        }
        Ok(())
    }

    pub fn forward_tape(&self, tape: &mut Tape, x_std: &Array, hist: &HistoryBatch, deltas: &[f64]) -> Result<Var> {
        let (b, _) = x_std.dims2("rnn forward")?;
        self.check(b, x_std.len(), hist, deltas.len())?;
        for &d in deltas {
            Self::check_delta(d)?;
        }
        let vars = self.encoder.bind(tape, &self.params);
        let out = self.out.bind(tape, &self.params);
        let h = self.encoder.forward_tape(tape, &vars, hist)?;
        let x = tape.constant(x_std.clone());
        let dn: Vec<f64> = deltas.iter().map(|&d| self.norm.standardize_delta(d)).collect();
        let d = tape.constant(Array::new(&[b, 1], dn)?);
        let z = tape.concat_cols(&[h, x, d])?;
        let f = self.out.forward(tape, &out, z)?;
        tape.add(x, f)
    }

    pub fn predict_std(&self, x_std: &[f64], hist: &HistoryBatch, delta: f64) -> Result<Vec<f64>> {
        let b = hist.batch;
        self.check(b, x_std.len(), hist, b)?;
        Self::check_delta(delta)?;
        let h = self.encoder.infer(&self.params, hist)?;
        let dx = self.cfg.state_dim;
        let hd = self.cfg.hidden;
        let dn = self.norm.standardize_delta(delta);
        let mut z = Vec::with_capacity(b * (hd + dx + 1));
        for r in 0..b {
            z.extend_from_slice(&h[r * hd..(r + 1) * hd]);
            z.extend_from_slice(&x_std[r * dx..(r + 1) * dx]);
            z.push(dn);
        }
        let mut f = Vec::new();
        self.out.infer(&self.params, &z, b, &mut f)?;
        Ok(x_std.iter().zip(&f).map(|(x, y)| x + y).collect())
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = &self.cfg;
        let mut meta = checkpoint_meta(ModelKind::Rnn, c.state_dim, c.action_dim, c.omega);
        meta.push(("hidden".into(), c.hidden.to_string()));
        let mut params = self.params.clone();
        for (name, v) in self.norm.to_named() {
            let n = v.len();
            params.add(name, Array::new(&[n], v).expect("vector"));
        }
        Checkpoint { meta, params }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let base = super::CheckpointHeader::parse(ck, ModelKind::Rnn)?;
        let hidden = ck.meta_required("hidden")?.parse().map_err(|_| Error::Format("bad `hidden`".into()))?;
        let cfg = RnnConfig { state_dim: base.state_dim, action_dim: base.action_dim, hidden, omega: base.omega };
        let norm = super::norm_from_checkpoint(ck)?;
        let mut m = Self::new(cfg, norm, 0);
        restore_params(&mut m.params, &ck.params)?;
        Ok(m)
    }
}

impl DynamicsModel for RnnModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Rnn
    }

    fn state_space(&self) -> StateSpace {
        StateSpace::Observation
    }

    fn state_dim(&self) -> usize {
        self.cfg.state_dim
    }

    fn action_dim(&self) -> usize {
        self.cfg.action_dim
    }

    fn predict_batch(&self, states: &[f64], hist: &HistoryBatch, delta: f64) -> Result<Vec<f64>> {
        let mut x = states.to_vec();
        self.norm.standardize_states(&mut x);
        let mut h = hist.clone();
        self.norm.standardize_actions(&mut h.actions);
        let mut y = self.predict_std(&x, &h, delta)?;
        self.norm.destandardize_states(&mut y);
        Ok(y)
    }
}

impl Trainable for RnnModel {
    fn params(&self) -> &Params {
        &self.params
    }

    fn params_mut(&mut self) -> &mut Params {
        &mut self.params
    }

    fn forward_batch(&self, tape: &mut Tape, batch: &WindowBatch) -> Result<Var> {
        self.forward_tape(tape, &batch.x, &batch.hist, &batch.deltas)
    }

    fn to_checkpoint(&self) -> Checkpoint {
        RnnModel::to_checkpoint(self)
    }
}
