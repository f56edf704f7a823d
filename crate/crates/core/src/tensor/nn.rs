//! Layers usable both on a [`Tape`] (training) and on plain buffers (inference).
//!
//! The two paths evaluate the same expressions in the same order, so a trained
//! model predicts bit-identical values whether or not a tape is recorded.

use rand::Rng;

use super::array::Array;
use super::kernels;
use super::params::{ParamId, Params};
use super::tape::{Tape, Var};
use crate::error::{dim_err, Result};

/// Affine map `x·W + b` with `W` of shape `[inputs, outputs]`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Linear {
    pub fn new(params: &mut Params, name: &str, inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let w = params.add_uniform(format!("{name}.weight"), &[inputs, outputs], inputs, rng);
        let b = params.add(format!("{name}.bias"), Array::zeros(&[outputs]));
        Self { w, b, inputs, outputs }
    }

    pub fn bind(&self, tape: &mut Tape, params: &Params) -> LinearVars {
        LinearVars { w: tape.param(params, self.w), b: tape.param(params, self.b) }
    }

    pub fn forward(&self, tape: &mut Tape, vars: &LinearVars, x: Var) -> Result<Var> {
        let y = tape.matmul(x, vars.w)?;
        tape.add_bias(y, vars.b)
    }

    /// Inference over `rows` rows of `x`; `out` is resized to `rows × outputs`.
    pub fn infer(&self, params: &Params, x: &[f64], rows: usize, out: &mut Vec<f64>) -> Result<()> {
        if x.len() != rows * self.inputs {
            return dim_err("Linear::infer", format!("{} values for {rows}×{}", x.len(), self.inputs));
        }
        out.resize(rows * self.outputs, 0.0);
        kernels::gemm(x, params.get(self.w).data(), out, rows, self.inputs, self.outputs);
        add_bias_rows(out, params.get(self.b).data());
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LinearVars {
    pub w: Var,
    pub b: Var,
}

fn add_bias_rows(out: &mut [f64], b: &[f64]) {
    for row in out.chunks_exact_mut(b.len()) {
        row.iter_mut().zip(b).for_each(|(x, y)| *x += y);
    }
}

/// Gated recurrent unit with gate blocks ordered (reset, update, candidate).
#[derive(Clone, Debug)]
pub struct GruLayer {
    pub w_ih: ParamId,
    pub w_hh: ParamId,
    pub b_ih: ParamId,
    pub b_hh: ParamId,
    pub inputs: usize,
    pub hidden: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct GruVars {
    pub w_ih: Var,
    pub w_hh: Var,
    pub b_ih: Var,
    pub b_hh: Var,
}

impl GruLayer {
    pub fn new(params: &mut Params, name: &str, inputs: usize, hidden: usize, rng: &mut impl Rng) -> Self {
        let g = 3 * hidden;
        let w_ih = params.add_uniform(format!("{name}.w_ih"), &[inputs, g], hidden, rng);
        let w_hh = params.add_uniform(format!("{name}.w_hh"), &[hidden, g], hidden, rng);
        let b_ih = params.add(format!("{name}.b_ih"), Array::zeros(&[g]));
        let b_hh = params.add(format!("{name}.b_hh"), Array::zeros(&[g]));
        Self { w_ih, w_hh, b_ih, b_hh, inputs, hidden }
    }

    pub fn bind(&self, tape: &mut Tape, params: &Params) -> GruVars {
        GruVars {
            w_ih: tape.param(params, self.w_ih),
            w_hh: tape.param(params, self.w_hh),
            b_ih: tape.param(params, self.b_ih),
            b_hh: tape.param(params, self.b_hh),
        }
    }

    /// One cell update `h' = n + z⊙(h − n)` on the tape.
    pub fn cell(&self, tape: &mut Tape, v: &GruVars, x: Var, h: Var) -> Result<Var> {
        let hd = self.hidden;
        let gi = tape.matmul(x, v.w_ih)?;
        let gi = tape.add_bias(gi, v.b_ih)?;
        let gh = tape.matmul(h, v.w_hh)?;
        let gh = tape.add_bias(gh, v.b_hh)?;
        let (i_r, i_z, i_n) = (tape.slice_cols(gi, 0, hd)?, tape.slice_cols(gi, hd, 2 * hd)?, tape.slice_cols(gi, 2 * hd, 3 * hd)?);
        let (h_r, h_z, h_n) = (tape.slice_cols(gh, 0, hd)?, tape.slice_cols(gh, hd, 2 * hd)?, tape.slice_cols(gh, 2 * hd, 3 * hd)?);
        let r = tape.add(i_r, h_r)?;
        let r = tape.sigmoid(r);
        let z = tape.add(i_z, h_z)?;
        let z = tape.sigmoid(z);
        let rn = tape.mul(r, h_n)?;
        let n = tape.add(i_n, rn)?;
        let n = tape.tanh(n);
        let d = tape.sub(h, n)?;
        let zd = tape.mul(z, d)?;
        tape.add(n, zd)
    }

    /// Inference cell update for `rows` rows, in place on `h`.
    pub fn step(&self, params: &Params, x: &[f64], h: &mut [f64], rows: usize, scratch: &mut GruScratch) -> Result<()> {
        let hd = self.hidden;
        let g = 3 * hd;
        if x.len() != rows * self.inputs || h.len() != rows * hd {
            return dim_err("GruLayer::step", format!("x {} h {} for {rows} rows", x.len(), h.len()));
        }
        scratch.gi.resize(rows * g, 0.0);
        scratch.gh.resize(rows * g, 0.0);
        kernels::gemm(x, params.get(self.w_ih).data(), &mut scratch.gi, rows, self.inputs, g);
        add_bias_rows(&mut scratch.gi, params.get(self.b_ih).data());
        kernels::gemm(h, params.get(self.w_hh).data(), &mut scratch.gh, rows, hd, g);
        add_bias_rows(&mut scratch.gh, params.get(self.b_hh).data());
        scratch.r.resize(rows * hd, 0.0);
        scratch.z.resize(rows * hd, 0.0);
        scratch.n.resize(rows * hd, 0.0);
        for row in 0..rows {
            let gi = &scratch.gi[row * g..(row + 1) * g];
            let gh = &scratch.gh[row * g..(row + 1) * g];
            for j in 0..hd {
                scratch.r[row * hd + j] = gi[j] + gh[j];
                scratch.z[row * hd + j] = gi[hd + j] + gh[hd + j];
            }
        }
        kernels::sigmoid_in_place(&mut scratch.r);
        kernels::sigmoid_in_place(&mut scratch.z);
        for row in 0..rows {
            let gi = &scratch.gi[row * g..(row + 1) * g];
            let gh = &scratch.gh[row * g..(row + 1) * g];
            for j in 0..hd {
                scratch.n[row * hd + j] = gi[2 * hd + j] + scratch.r[row * hd + j] * gh[2 * hd + j];
            }
        }
        kernels::tanh_in_place(&mut scratch.n);
        for ((hv, n), z) in h.iter_mut().zip(&scratch.n).zip(&scratch.z) {
            *hv = n + z * (*hv - n);
        }
        Ok(())
    }
}

/// Reusable buffers for [`GruLayer::step`].
#[derive(Clone, Debug, Default)]
pub struct GruScratch {
    gi: Vec<f64>,
    gh: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
}
