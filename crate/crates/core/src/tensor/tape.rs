//! Tape-based reverse-mode automatic differentiation.
//!
//! A [`Tape`] records every operation of one forward pass. Nodes are appended
//! in evaluation order, so walking the tape backwards is a valid topological
//! order and each node is visited exactly once.

use super::array::Array;
use super::kernels;
use super::params::{ParamId, Params};
use crate::error::{dim_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddBias(Var, Var),
    Tanh(Var),
    Sigmoid(Var),
    Sin(Var),
    Cos(Var),
    Tan(Var),
    Exp(Var),
    Neg(Var),
    Scale(Var, f64),
    AddConst(Var),
    MulConst(Var, Array),
    ConcatCols(Vec<Var>),
    SliceCols(Var, usize, usize),
    SumBlocks(Var, usize),
    SelectRows(Var, Var, Vec<bool>),
    Mse(Var, Array),
}

/// One recorded value together with the operation that produced it.
#[derive(Debug)]
pub struct Node {
    value: Array,
    op: Op,
}

impl Node {
    pub fn value(&self) -> &Array {
        &self.value
    }
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints of every node reachable from the root of a backward pass.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Array>>,
    params: Vec<(ParamId, usize)>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&Array> {
        self.grads[v.0].as_ref()
    }

    /// Sum of the adjoints of all leaves bound to parameter `id`.
    pub fn param(&self, id: ParamId) -> Option<Array> {
        let mut acc: Option<Array> = None;
        for &(pid, node) in &self.params {
            if pid != id {
                continue;
            }
            if let Some(g) = &self.grads[node] {
                match &mut acc {
                    None => acc = Some(g.clone()),
                    Some(a) => a.data_mut().iter_mut().zip(g.data()).for_each(|(x, y)| *x += y),
                }
            }
        }
        acc
    }

    /// Gradients for every parameter in `params`, zero where unreachable.
    pub fn for_params(&self, params: &Params) -> Vec<Array> {
        (0..params.len())
            .map(|i| {
                let id = ParamId(i);
                self.param(id).unwrap_or_else(|| Array::zeros(params.get(id).shape()))
            })
            .collect()
    }
}

fn same_or_scalar(op: &'static str, a: &Array, b: &Array) -> Result<()> {
    if a.shape() == b.shape() || a.is_scalar() || b.is_scalar() {
        Ok(())
    } else {
        dim_err(op, format!("{:?} vs {:?}", a.shape(), b.shape()))
    }
}

fn zip_broadcast(a: &Array, b: &Array, f: impl Fn(f64, f64) -> f64) -> Array {
    if a.shape() == b.shape() {
        let d = a.data().iter().zip(b.data()).map(|(x, y)| f(*x, *y)).collect();
        Array::new(a.shape(), d).expect("same shape")
    } else if b.is_scalar() {
        let y = b.data()[0];
        let d = a.data().iter().map(|x| f(*x, y)).collect();
        Array::new(a.shape(), d).expect("same shape")
    } else {
        let x = a.data()[0];
        let d = b.data().iter().map(|y| f(x, *y)).collect();
        Array::new(b.shape(), d).expect("same shape")
    }
}

/// Reduce an adjoint computed at the broadcast shape back to `target`'s shape.
fn unbroadcast(g: Array, target: &Array) -> Array {
    if g.shape() == target.shape() {
        g
    } else {
        let s: f64 = g.data().iter().sum();
        Array::new(target.shape(), vec![s]).expect("scalar")
    }
}

fn map(a: &Array, f: impl Fn(f64) -> f64) -> Array {
    Array::new(a.shape(), a.data().iter().map(|x| f(*x)).collect()).expect("same shape")
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Array {
        &self.nodes[v.0].value
    }

    pub fn node(&self, v: Var) -> &Node {
        &self.nodes[v.0]
    }

    fn push(&mut self, value: Array, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, a: Array) -> Var {
        self.push(a, Op::Leaf)
    }

    pub fn param(&mut self, params: &Params, id: ParamId) -> Var {
        self.push(params.get(id).clone(), Op::Param(id))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.value(a).dims2("matmul")?;
        let (k2, n) = self.value(b).dims2("matmul")?;
        if k != k2 {
            return dim_err("matmul", format!("inner dimensions {k} and {k2}"));
        }
        let mut out = vec![0.0; m * n];
        kernels::gemm(self.value(a).data(), self.value(b).data(), &mut out, m, k, n);
        Ok(self.push(Array::new(&[m, n], out)?, Op::MatMul(a, b)))
    }

    fn binary(&mut self, name: &'static str, a: Var, b: Var, f: impl Fn(f64, f64) -> f64, op: Op) -> Result<Var> {
        same_or_scalar(name, self.value(a), self.value(b))?;
        let v = zip_broadcast(self.value(a), self.value(b), f);
        Ok(self.push(v, op))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("add", a, b, |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("sub", a, b, |x, y| x - y, Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary("mul", a, b, |x, y| x * y, Op::Mul(a, b))
    }

    /// `a[B×n] + bias[n]` broadcast over rows.
    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        let (rows, cols) = self.value(a).dims2("add_bias")?;
        if self.value(bias).len() != cols {
            return dim_err("add_bias", format!("{cols} columns, bias of {}", self.value(bias).len()));
        }
        let mut out = self.value(a).data().to_vec();
        let b = self.value(bias).data();
        for r in 0..rows {
            out[r * cols..(r + 1) * cols].iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        Ok(self.push(Array::new(&[rows, cols], out)?, Op::AddBias(a, bias)))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        kernels::tanh_in_place(v.data_mut());
        self.push(v, Op::Tanh(a))
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        kernels::sigmoid_in_place(v.data_mut());
        self.push(v, Op::Sigmoid(a))
    }

    pub fn exp(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        kernels::exp_in_place(v.data_mut());
        self.push(v, Op::Exp(a))
    }

    pub fn sin(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        kernels::sin_in_place(v.data_mut());
        self.push(v, Op::Sin(a))
    }

    pub fn cos(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        kernels::cos_in_place(v.data_mut());
        self.push(v, Op::Cos(a))
    }

    pub fn tan(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        kernels::tan_in_place(v.data_mut());
        self.push(v, Op::Tan(a))
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let v = map(self.value(a), |x| -x);
        self.push(v, Op::Neg(a))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = map(self.value(a), |x| x * c);
        self.push(v, Op::Scale(a, c))
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        let v = map(self.value(a), |x| x + c);
        self.push(v, Op::AddConst(a))
    }

    /// Elementwise product with a constant array of the same shape.
    pub fn mul_const(&mut self, a: Var, c: Array) -> Result<Var> {
        if self.value(a).shape() != c.shape() {
            return dim_err("mul_const", format!("{:?} vs {:?}", self.value(a).shape(), c.shape()));
        }
        let v = zip_broadcast(self.value(a), &c, |x, y| x * y);
        Ok(self.push(v, Op::MulConst(a, c)))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let Some(first) = parts.first() else {
            return Err(Error::Contract("concat_cols of nothing".into()));
        };
        let (rows, _) = self.value(*first).dims2("concat_cols")?;
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let (r, c) = self.value(*p).dims2("concat_cols")?;
            if r != rows {
                return dim_err("concat_cols", format!("row counts {rows} and {r}"));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(*p).data()[r * w..(r + 1) * w]);
            }
        }
        Ok(self.push(Array::new(&[rows, total], out)?, Op::ConcatCols(parts.to_vec())))
    }

    /// Columns `start..end` of a rank-2 array.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Result<Var> {
        let (rows, cols) = self.value(a).dims2("slice_cols")?;
        if start >= end || end > cols {
            return dim_err("slice_cols", format!("{start}..{end} of {cols} columns"));
        }
        let d = self.value(a).data();
        let mut out = Vec::with_capacity(rows * (end - start));
        for r in 0..rows {
            out.extend_from_slice(&d[r * cols + start..r * cols + end]);
        }
        Ok(self.push(Array::new(&[rows, end - start], out)?, Op::SliceCols(a, start, end)))
    }

    /// Splits each row into consecutive blocks of `width` columns and sums the blocks.
    pub fn sum_blocks(&mut self, a: Var, width: usize) -> Result<Var> {
        let (rows, cols) = self.value(a).dims2("sum_blocks")?;
        if width == 0 || cols % width != 0 {
            return dim_err("sum_blocks", format!("{cols} columns into blocks of {width}"));
        }
        let d = self.value(a).data();
        let mut out = vec![0.0; rows * width];
        for r in 0..rows {
            let o = &mut out[r * width..(r + 1) * width];
            for blk in d[r * cols..(r + 1) * cols].chunks_exact(width) {
                o.iter_mut().zip(blk).for_each(|(x, y)| *x += y);
            }
        }
        Ok(self.push(Array::new(&[rows, width], out)?, Op::SumBlocks(a, width)))
    }

    /// Row `r` of the result is row `r` of `a` where `take_a[r]`, else of `b`.
    pub fn select_rows(&mut self, take_a: &[bool], a: Var, b: Var) -> Result<Var> {
        let (rows, cols) = self.value(a).dims2("select_rows")?;
        if self.value(b).shape() != self.value(a).shape() || take_a.len() != rows {
            return dim_err("select_rows", format!("{:?} vs {:?}, {} flags", self.value(a).shape(), self.value(b).shape(), take_a.len()));
        }
        let mut out = self.value(b).data().to_vec();
        for (r, &t) in take_a.iter().enumerate() {
            if t {
                out[r * cols..(r + 1) * cols].copy_from_slice(&self.value(a).data()[r * cols..(r + 1) * cols]);
            }
        }
        Ok(self.push(Array::new(&[rows, cols], out)?, Op::SelectRows(a, b, take_a.to_vec())))
    }

    /// Mean of squared differences against a constant target.
    pub fn mse(&mut self, pred: Var, target: &Array) -> Result<Var> {
        let p = self.value(pred);
        if p.shape() != target.shape() {
            return dim_err("mse", format!("{:?} vs {:?}", p.shape(), target.shape()));
        }
        if p.is_empty() {
            return Err(Error::Contract("mse of an empty array".into()));
        }
        let s: f64 = p.data().iter().zip(target.data()).map(|(x, y)| (x - y) * (x - y)).sum();
        let v = Array::scalar(s / p.len() as f64);
        Ok(self.push(v, Op::Mse(pred, target.clone())))
    }

    /// Reverse pass from a scalar root.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        if self.value(root).len() != 1 {
            return Err(Error::Contract(format!(
                "backward root must be scalar, got shape {:?}",
                self.value(root).shape()
            )));
        }
        let n = root.0 + 1;
        let mut grads: Vec<Option<Array>> = (0..n).map(|_| None).collect();
        grads[root.0] = Some(Array::full(self.value(root).shape(), 1.0));
        let mut params = Vec::new();

        fn acc(grads: &mut [Option<Array>], v: Var, g: Array) {
            match &mut grads[v.0] {
                slot @ None => *slot = Some(g),
                Some(a) => a.data_mut().iter_mut().zip(g.data()).for_each(|(x, y)| *x += y),
            }
        }

        for i in (0..n).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => params.push((*id, i)),
                Op::MatMul(a, b) => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    let (m, k) = av.dims2("matmul")?;
                    let (_, nn) = bv.dims2("matmul")?;
                    let bt = bv.transpose2()?;
                    let mut ga = vec![0.0; m * k];
                    kernels::gemm(g.data(), bt.data(), &mut ga, m, nn, k);
                    let at = av.transpose2()?;
                    let mut gb = vec![0.0; k * nn];
                    kernels::gemm(at.data(), g.data(), &mut gb, k, m, nn);
                    acc(&mut grads, *a, Array::new(&[m, k], ga)?);
                    acc(&mut grads, *b, Array::new(&[k, nn], gb)?);
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, unbroadcast(g.clone(), self.value(*a)));
                    acc(&mut grads, *b, unbroadcast(g.clone(), self.value(*b)));
                }
                Op::Sub(a, b) => {
                    acc(&mut grads, *a, unbroadcast(g.clone(), self.value(*a)));
                    acc(&mut grads, *b, unbroadcast(map(&g, |x| -x), self.value(*b)));
                }
                Op::Mul(a, b) => {
                    let ga = zip_broadcast(&g, self.value(*b), |x, y| x * y);
                    let gb = zip_broadcast(&g, self.value(*a), |x, y| x * y);
                    acc(&mut grads, *a, unbroadcast(ga, self.value(*a)));
                    acc(&mut grads, *b, unbroadcast(gb, self.value(*b)));
                }
                Op::AddBias(a, bias) => {
                    let (rows, cols) = g.dims2("add_bias")?;
                    let mut gb = vec![0.0; cols];
                    for r in 0..rows {
                        gb.iter_mut().zip(&g.data()[r * cols..(r + 1) * cols]).for_each(|(x, y)| *x += y);
                    }
                    acc(&mut grads, *bias, Array::new(self.value(*bias).shape(), gb)?);
                    acc(&mut grads, *a, g.clone());
                }
                Op::Tanh(a) => {
                    let gd = zip_broadcast(&g, &node.value, |g, y| g * (1.0 - y * y));
                    acc(&mut grads, *a, gd);
                }
                Op::Sigmoid(a) => {
                    let gd = zip_broadcast(&g, &node.value, |g, y| g * y * (1.0 - y));
                    acc(&mut grads, *a, gd);
                }
                Op::Exp(a) => {
                    let gd = zip_broadcast(&g, &node.value, |g, y| g * y);
                    acc(&mut grads, *a, gd);
                }
                Op::Sin(a) => {
                    let gd = zip_broadcast(&g, self.value(*a), |g, x| g * x.cos());
                    acc(&mut grads, *a, gd);
                }
                Op::Cos(a) => {
                    let gd = zip_broadcast(&g, self.value(*a), |g, x| -g * x.sin());
                    acc(&mut grads, *a, gd);
                }
                Op::Tan(a) => {
                    let gd = zip_broadcast(&g, &node.value, |g, y| g * (1.0 + y * y));
                    acc(&mut grads, *a, gd);
                }
                Op::Neg(a) => acc(&mut grads, *a, map(&g, |x| -x)),
                Op::Scale(a, c) => acc(&mut grads, *a, map(&g, |x| x * c)),
                Op::AddConst(a) => acc(&mut grads, *a, g.clone()),
                Op::MulConst(a, c) => acc(&mut grads, *a, zip_broadcast(&g, c, |x, y| x * y)),
                Op::ConcatCols(parts) => {
                    let (rows, total) = g.dims2("concat_cols")?;
                    let mut off = 0;
                    for p in parts {
                        let (_, w) = self.value(*p).dims2("concat_cols")?;
                        let mut gp = Vec::with_capacity(rows * w);
                        for r in 0..rows {
                            gp.extend_from_slice(&g.data()[r * total + off..r * total + off + w]);
                        }
                        acc(&mut grads, *p, Array::new(&[rows, w], gp)?);
                        off += w;
                    }
                }
                Op::SliceCols(a, start, end) => {
                    let (rows, cols) = self.value(*a).dims2("slice_cols")?;
                    let w = end - start;
                    let mut ga = vec![0.0; rows * cols];
                    for r in 0..rows {
                        ga[r * cols + start..r * cols + end].copy_from_slice(&g.data()[r * w..(r + 1) * w]);
                    }
                    acc(&mut grads, *a, Array::new(&[rows, cols], ga)?);
                }
                Op::SumBlocks(a, width) => {
                    let (rows, cols) = self.value(*a).dims2("sum_blocks")?;
                    let mut ga = vec![0.0; rows * cols];
                    for r in 0..rows {
                        let gr = &g.data()[r * width..(r + 1) * width];
                        for blk in ga[r * cols..(r + 1) * cols].chunks_exact_mut(*width) {
                            blk.copy_from_slice(gr);
                        }
                    }
                    acc(&mut grads, *a, Array::new(&[rows, cols], ga)?);
                }
                Op::SelectRows(a, b, take_a) => {
                    let (_, cols) = g.dims2("select_rows")?;
                    let mut ga = g.clone();
                    let mut gb = g.clone();
                    for (r, &t) in take_a.iter().enumerate() {
                        let row = r * cols..(r + 1) * cols;
                        if t { gb.data_mut()[row].fill(0.0) } else { ga.data_mut()[row].fill(0.0) }
                    }
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::Mse(pred, target) => {
                    let p = self.value(*pred);
                    let s = g.data()[0] * 2.0 / p.len() as f64;
                    let gd = zip_broadcast(p, target, |x, y| s * (x - y));
                    acc(&mut grads, *pred, gd);
                }
            }
            grads[i] = Some(g);
        }
        Ok(Gradients { grads, params })
    }
}
