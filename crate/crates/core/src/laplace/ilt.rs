//! Fourier-series numerical inverse Laplace transform.
//!
//! For a time `t` the transform is sampled at `d_S` points on a vertical
//! contour, `s_k = σ + ikπ/T` with `T = α·t` and `σ = σ₀ − ln(ε)/T`, and
//!
//! ```text
//! x̂(t) = e^{σt}/T · [ w₀·Re F(s₀)/2 + Σ_{k≥1} w_k·Re(F(s_k)·e^{ikπt/T}) ]
//! ```
//!
//! The tail weights `w_k` are binomial (Euler) averages of the last partial
//! sums; with zero averaged terms all weights are one and the series is the
//! plain truncated Fourier sum.

use super::projection::ComplexVal;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IltParams {
    /// Number of query points `d_S`.
    pub terms: usize,
    /// Period scale α in `T = α·t`.
    pub scale: f64,
    /// Discretization tolerance ε.
    pub tolerance: f64,
    /// Contour offset σ₀.
    pub sigma0: f64,
    /// Number of trailing terms combined by Euler summation.
    pub euler_terms: usize,
}

impl Default for IltParams {
    fn default() -> Self {
        Self { terms: 17, scale: 1.0, tolerance: 1e-3, sigma0: 0.0, euler_terms: 11 }
    }
}

impl IltParams {
    /// Plain truncated series (all weights one).
    pub fn unweighted(terms: usize, scale: f64, tolerance: f64) -> Self {
        Self { terms, scale, tolerance, sigma0: 0.0, euler_terms: 0 }
    }

    fn validate(&self) -> Result<()> {
        if self.terms < 2 {
            return Err(Error::Domain(format!("need at least 2 query points, got {}", self.terms)));
        }
        if !(self.scale > 0.0) || !(self.tolerance > 0.0 && self.tolerance < 1.0) || !self.sigma0.is_finite() {
            return Err(Error::Domain(format!("invalid contour constants {self:?}")));
        }
        if self.euler_terms >= self.terms {
            return Err(Error::Domain(format!("{} averaged terms of {}", self.euler_terms, self.terms)));
        }
        Ok(())
    }

    /// Summation weights `w_k` for `k = 0..terms`.
    pub fn weights(&self) -> Vec<f64> {
        let m = self.euler_terms;
        let n = self.terms - 1 - m;
        let binom: Vec<f64> = {
            let mut c = vec![1.0; m + 1];
            for i in 1..=m {
                c[i] = c[i - 1] * (m + 1 - i) as f64 / i as f64;
            }
            c
        };
        let total = 2f64.powi(m as i32);
        (0..self.terms)
            .map(|k| if k <= n { 1.0 } else { binom[k - n..].iter().sum::<f64>() / total })
            .collect()
    }
}

/// Query points and reconstruction constants for one time value.
#[derive(Clone, Debug, PartialEq)]
pub struct IltQuery {
    pub t: f64,
    pub points: Vec<ComplexVal>,
    pub sigma: f64,
    pub period: f64,
    pub weights: Vec<f64>,
}

/// `(sin πx, cos πx)`, exact at multiples of one half.
fn sin_cos_pi(x: f64) -> (f64, f64) {
    let r = x - 2.0 * (x * 0.5).floor();
    let twice = 2.0 * r;
    if twice == twice.round() {
        return match twice as i64 {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        };
    }
    (std::f64::consts::PI * r).sin_cos()
}

impl IltQuery {
    /// Coefficients `(c_re, c_im)` with `x̂ = Σ_k c_re[k]·Re F_k + c_im[k]·Im F_k`.
    pub fn coefficients(&self) -> (Vec<f64>, Vec<f64>) {
        let amp = (self.sigma * self.t).exp() / self.period;
        let ratio = self.t / self.period;
        let mut c_re = Vec::with_capacity(self.points.len());
        let mut c_im = Vec::with_capacity(self.points.len());
        for (k, w) in self.weights.iter().enumerate() {
            let half = if k == 0 { 0.5 } else { 1.0 };
            let (s, c) = sin_cos_pi(k as f64 * ratio);
            c_re.push(amp * w * half * c);
            c_im.push(-amp * w * half * s);
        }
        (c_re, c_im)
    }

    /// Coefficients reconstructing the inverse of `F(s)/sⁿ` from `Re F_k` and `Im F_k`.
    ///
    /// For `n ≥ 1` the factor `s_k⁻ⁿ` cancels the `1/t` growth of the plain
    /// coefficients, so these stay bounded as `t → 0`.
    pub fn scaled_coefficients(&self, order: u32) -> (Vec<f64>, Vec<f64>) {
        let (c_re, c_im) = self.coefficients();
        let mut a = Vec::with_capacity(c_re.len());
        let mut b = Vec::with_capacity(c_re.len());
        for ((s, cr), ci) in self.points.iter().zip(&c_re).zip(&c_im) {
            let mut inv = ComplexVal::new(1.0, 0.0);
            for _ in 0..order {
                inv = inv.div(*s);
            }
            a.push(cr * inv.re + ci * inv.im);
            b.push(ci * inv.re - cr * inv.im);
        }
        (a, b)
    }
}

/// Contour and query points for time `t`.
pub fn ilt_query(t: f64, params: &IltParams) -> Result<IltQuery> {
    params.validate()?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("ILT time must be positive and finite, got {t}")));
    }
    let period = params.scale * t;
    let sigma = params.sigma0 - params.tolerance.ln() / period;
    let step = std::f64::consts::PI / period;
    let points = (0..params.terms).map(|k| ComplexVal::new(sigma, k as f64 * step)).collect();
    Ok(IltQuery { t, points, sigma, period, weights: params.weights() })
}

/// Reconstructs `x̂(t)` from transform values at the query points.
pub fn ilt_reconstruct(values: &[ComplexVal], q: &IltQuery) -> Result<f64> {
    if values.len() != q.points.len() {
        return Err(Error::Contract(format!("{} transform values for {} query points", values.len(), q.points.len())));
    }
    let (c_re, c_im) = q.coefficients();
    Ok(values.iter().zip(c_re.iter().zip(&c_im)).map(|(v, (a, b))| a * v.re + b * v.im).sum())
}

/// Inverts `f` at each time, evaluating it exactly `terms` times per time point.
pub fn ilt_fsi(mut f: impl FnMut(ComplexVal) -> ComplexVal, times: &[f64], params: &IltParams) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| {
            let q = ilt_query(t, params)?;
            let values: Vec<ComplexVal> = q.points.iter().map(|&s| f(s)).collect();
            ilt_reconstruct(&values, &q)
        })
        .collect()
}
