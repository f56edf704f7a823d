//! Laplace-domain dynamics model.
//!
//! The action history is encoded by a reverse-time GRU into `p_A`, which is
//! concatenated with the (standardized) state into the latent `p`. For a
//! prediction interval δ the network `g_ψ` receives `p` together with the
//! sphere coordinates of all `d_S` query points of the inverse transform and
//! returns, for every query point and state dimension, the sphere coordinates
//! of the transform value `X(s_k)`. These are squashed into the open box,
//! mapped back to the complex plane and inverted to give `x̂(t + δ)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::encoder::SeqEncoder;
use super::history::HistoryBatch;
use super::{checkpoint_meta, restore_params, DynamicsModel, ModelKind, StateSpace, Trainable};
use crate::error::{dim_err, Error, Result};
use crate::laplace::{ilt_query, stereographic_project, IltParams};
use crate::pipeline::{NormStats, WindowBatch};
use crate::tensor::{kernels, Array, Checkpoint, Linear, Params, Tape, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct NlcConfig {
    pub state_dim: usize,
    pub action_dim: usize,
    pub gru_hidden: usize,
    pub gru_layers: usize,
    /// Width of the history encoding `p_A`.
    pub action_latent: usize,
    pub mlp_hidden: usize,
    pub ilt: IltParams,
    /// History window ω used to scale relative times.
    pub omega: f64,
    /// Margin keeping squashed outputs inside the open box.
    pub output_margin: f64,
    /// With order `n ≥ 1` the head predicts `Y` in `X(s) = x/s + Y(s)/sⁿ`,
    /// so `x̂ = x + L⁻¹{Y/sⁿ}`; order 0 predicts `X(s)` itself.
    pub residual_order: u32,
}

impl NlcConfig {
    pub fn new(state_dim: usize, action_dim: usize, omega: f64) -> Self {
        Self {
            state_dim,
            action_dim,
            gru_hidden: 64,
            gru_layers: 2,
            action_latent: 2,
            mlp_hidden: 128,
            ilt: IltParams::default(),
            omega,
            output_margin: 1e-3,
            residual_order: 2,
        }
    }

    /// Latent width `d_P = |p_A| + d_X`.
    pub fn latent_dim(&self) -> usize {
        self.action_latent + self.state_dim
    }

    fn query_features(&self) -> usize {
        2 * self.ilt.terms
    }

    fn outputs(&self) -> usize {
        2 * self.ilt.terms * self.state_dim
    }
}

#[derive(Clone, Debug)]
pub struct NlcModel {
    pub cfg: NlcConfig,
    pub params: Params,
    pub norm: NormStats,
    encoder: SeqEncoder,
    head: Linear,
    mlp: [Linear; 3],
}

/// Query-point features and reconstruction coefficients for one interval.
struct QueryPlan {
    features: Vec<f64>,
    c_re: Vec<f64>,
    c_im: Vec<f64>,
}

impl NlcModel {
    pub fn new(cfg: NlcConfig, norm: NormStats, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Params::new();
        let encoder = SeqEncoder::new(&mut params, "encoder", cfg.action_dim, cfg.gru_hidden, cfg.gru_layers, true, cfg.omega, &mut rng);
        let head = Linear::new(&mut params, "encoder.head", cfg.gru_hidden, cfg.action_latent, &mut rng);
        let inputs = cfg.latent_dim() + cfg.query_features();
        let mlp = [
            Linear::new(&mut params, "laplace.fc0", inputs, cfg.mlp_hidden, &mut rng),
            Linear::new(&mut params, "laplace.fc1", cfg.mlp_hidden, cfg.mlp_hidden, &mut rng),
            Linear::new(&mut params, "laplace.fc2", cfg.mlp_hidden, cfg.outputs(), &mut rng),
        ];
        Self { cfg, params, norm, encoder, head, mlp }
    }

    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }

    /// Transform values evaluated by the head per prediction: one per query point and state dimension.
    pub fn queries_per_prediction(&self) -> usize {
        self.cfg.ilt.terms * self.cfg.state_dim
    }

    fn plan(&self, delta: f64) -> Result<QueryPlan> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("prediction interval must be positive, got {delta}")));
        }
        let q = ilt_query(delta, &self.cfg.ilt)?;
        let mut features = Vec::with_capacity(self.cfg.query_features());
        for s in &q.points {
            let c = stereographic_project(*s)?.coord;
            features.push(c.theta);
            features.push(c.phi);
        }
        let (c_re, c_im) = q.scaled_coefficients(self.cfg.residual_order);
        Ok(QueryPlan { features, c_re, c_im })
    }

    fn theta_scale(&self) -> f64 {
        PI - self.cfg.output_margin
    }

    fn phi_scale(&self) -> f64 {
        FRAC_PI_2 - self.cfg.output_margin
    }

    /// Standardized next-state prediction recorded on a tape.
    pub fn forward_tape(&self, tape: &mut Tape, x_std: &Array, hist: &HistoryBatch, deltas: &[f64]) -> Result<Var> {
        let (b, dx) = x_std.dims2("nlc forward")?;
        if dx != self.cfg.state_dim || hist.batch != b || deltas.len() != b {
            return dim_err("nlc forward", format!("batch {b}, state {dx}, histories {}, deltas {}", hist.batch, deltas.len()));
        }
        let k = self.cfg.ilt.terms;
        let mut feats = Vec::with_capacity(b * self.cfg.query_features());
        let mut c_re = Vec::with_capacity(b * k * dx);
        let mut c_im = Vec::with_capacity(b * k * dx);
        let mut cached: Option<(f64, QueryPlan)> = None;
        for &d in deltas {
            if cached.as_ref().map_or(true, |(cd, _)| *cd != d) {
                cached = Some((d, self.plan(d)?));
            }
            let p = &cached.as_ref().expect("set above").1;
            feats.extend_from_slice(&p.features);
            for kk in 0..k {
                for _ in 0..dx {
                    c_re.push(p.c_re[kk]);
                    c_im.push(p.c_im[kk]);
                }
            }
        }
        let use_im = c_im.iter().any(|&c| c != 0.0);

        let gru_vars = self.encoder.bind(tape, &self.params);
        let head = self.head.bind(tape, &self.params);
        let mlp: Vec<_> = self.mlp.iter().map(|l| l.bind(tape, &self.params)).collect();

        let h = self.encoder.forward_tape(tape, &gru_vars, hist)?;
        let p_a = self.head.forward(tape, &head, h)?;
        let x = tape.constant(x_std.clone());
        let q = tape.constant(Array::new(&[b, self.cfg.query_features()], feats)?);
        let mut z = tape.concat_cols(&[p_a, x, q])?;
        for (i, (layer, vars)) in self.mlp.iter().zip(&mlp).enumerate() {
            z = layer.forward(tape, vars, z)?;
            if i + 1 < self.mlp.len() {
                z = tape.tanh(z);
            }
        }
        let n = k * dx;
        let theta = tape.slice_cols(z, 0, n)?;
        let theta = tape.tanh(theta);
        let theta = tape.scale(theta, self.theta_scale());
        let phi = tape.slice_cols(z, n, 2 * n)?;
        let phi = tape.tanh(phi);
        let phi = tape.scale(phi, self.phi_scale());
        let half = tape.scale(phi, 0.5);
        let shifted = tape.add_const(half, FRAC_PI_4);
        let modulus = tape.tan(shifted);
        let cos = tape.cos(theta);
        let re = tape.mul(modulus, cos)?;
        let mut terms = tape.mul_const(re, Array::new(&[b, n], c_re)?)?;
        if use_im {
            let sin = tape.sin(theta);
            let im = tape.mul(modulus, sin)?;
            let im_terms = tape.mul_const(im, Array::new(&[b, n], c_im)?)?;
            terms = tape.add(terms, im_terms)?;
        }
        let sum = tape.sum_blocks(terms, dx)?;
        if self.cfg.residual_order > 0 {
            tape.add(sum, x)
        } else {
            Ok(sum)
        }
    }

    /// Standardized prediction without recording a tape; bitwise equal to [`NlcModel::forward_tape`].
    pub fn predict_std(&self, x_std: &[f64], hist: &HistoryBatch, delta: f64) -> Result<Vec<f64>> {
        let dx = self.cfg.state_dim;
        let b = hist.batch;
        if x_std.len() != b * dx {
            return dim_err("nlc predict", format!("{} state values for batch {b}", x_std.len()));
        }
        let plan = self.plan(delta)?;
        let h = self.encoder.infer(&self.params, hist)?;
        let mut p_a = Vec::new();
        self.head.infer(&self.params, &h, b, &mut p_a)?;
        let la = self.cfg.action_latent;
        let nq = self.cfg.query_features();
        let width = la + dx + nq;
        let mut z = Vec::with_capacity(b * width);
        for r in 0..b {
            z.extend_from_slice(&p_a[r * la..(r + 1) * la]);
            z.extend_from_slice(&x_std[r * dx..(r + 1) * dx]);
            z.extend_from_slice(&plan.features);
        }
        let mut out = Vec::new();
        for (i, layer) in self.mlp.iter().enumerate() {
            layer.infer(&self.params, &z, b, &mut out)?;
            if i + 1 < self.mlp.len() {
                kernels::tanh_in_place(&mut out);
            }
            std::mem::swap(&mut z, &mut out);
        }
        let k = self.cfg.ilt.terms;
        let n = k * dx;
        let use_im = plan.c_im.iter().any(|&c| c != 0.0);
        let (ts, ps) = (self.theta_scale(), self.phi_scale());
        let mut pred = vec![0.0; b * dx];
        let mut theta = vec![0.0; n];
        let mut modulus = vec![0.0; n];
        let mut trig = vec![0.0; n];
        let mut terms = vec![0.0; n];
        for r in 0..b {
            let row = &z[r * 2 * n..(r + 1) * 2 * n];
            theta.copy_from_slice(&row[..n]);
            modulus.copy_from_slice(&row[n..]);
            kernels::tanh_in_place(&mut theta);
            kernels::tanh_in_place(&mut modulus);
            theta.iter_mut().for_each(|v| *v *= ts);
            modulus.iter_mut().for_each(|v| *v = (*v * ps) * 0.5 + FRAC_PI_4);
            kernels::tan_in_place(&mut modulus);
            trig.copy_from_slice(&theta);
            kernels::cos_in_place(&mut trig);
            for i in 0..n {
                terms[i] = modulus[i] * trig[i] * plan.c_re[i / dx];
            }
            if use_im {
                trig.copy_from_slice(&theta);
                kernels::sin_in_place(&mut trig);
                for i in 0..n {
                    terms[i] = terms[i] + modulus[i] * trig[i] * plan.c_im[i / dx];
                }
            }
            let o = &mut pred[r * dx..(r + 1) * dx];
            for blk in terms.chunks_exact(dx) {
                o.iter_mut().zip(blk).for_each(|(p, t)| *p += t);
            }
            if self.cfg.residual_order > 0 {
                o.iter_mut().zip(&x_std[r * dx..(r + 1) * dx]).for_each(|(p, x)| *p += x);
            }
        }
        Ok(pred)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let c = &self.cfg;
        let mut meta = checkpoint_meta(ModelKind::Nlc, c.state_dim, c.action_dim, c.omega);
        for (k, v) in [
            ("gru_hidden", c.gru_hidden.to_string()),
            ("gru_layers", c.gru_layers.to_string()),
            ("action_latent", c.action_latent.to_string()),
            ("mlp_hidden", c.mlp_hidden.to_string()),
            ("ilt_terms", c.ilt.terms.to_string()),
            ("ilt_scale", format!("{:e}", c.ilt.scale)),
            ("ilt_tolerance", format!("{:e}", c.ilt.tolerance)),
            ("ilt_sigma0", format!("{:e}", c.ilt.sigma0)),
            ("ilt_euler_terms", c.ilt.euler_terms.to_string()),
            ("output_margin", format!("{:e}", c.output_margin)),
            ("residual_order", c.residual_order.to_string()),
        ] {
            meta.push((k.to_string(), v));
        }
        let mut params = self.params.clone();
        for (name, v) in self.norm.to_named() {
            let n = v.len();
            params.add(name, Array::new(&[n], v).expect("vector"));
        }
        Checkpoint { meta, params }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        let base = super::CheckpointHeader::parse(ck, ModelKind::Nlc)?;
        let get = |k: &str| -> Result<f64> {
            ck.meta_required(k)?.parse::<f64>().map_err(|_| Error::Format(format!("bad `{k}` in checkpoint")))
        };
        let cfg = NlcConfig {
            state_dim: base.state_dim,
            action_dim: base.action_dim,
            gru_hidden: get("gru_hidden")? as usize,
            gru_layers: get("gru_layers")? as usize,
            action_latent: get("action_latent")? as usize,
            mlp_hidden: get("mlp_hidden")? as usize,
            ilt: IltParams {
                terms: get("ilt_terms")? as usize,
                scale: get("ilt_scale")?,
                tolerance: get("ilt_tolerance")?,
                sigma0: get("ilt_sigma0")?,
                euler_terms: get("ilt_euler_terms")? as usize,
            },
            omega: base.omega,
            output_margin: get("output_margin")?,
            residual_order: get("residual_order")? as u32,
        };
        let norm = super::norm_from_checkpoint(ck)?;
        let mut m = Self::new(cfg, norm, 0);
        restore_params(&mut m.params, &ck.params)?;
        Ok(m)
    }
}

impl DynamicsModel for NlcModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Nlc
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

impl Trainable for NlcModel {
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
        NlcModel::to_checkpoint(self)
    }
}
