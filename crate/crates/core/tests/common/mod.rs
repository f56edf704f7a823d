#![allow(dead_code)]

use laplace_control::tensor::{Array, Tape, Var};
use laplace_control::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_array(rng: &mut impl Rng, shape: &[usize], lo: f64, hi: f64) -> Array {
    let n = shape.iter().product();
    Array::new(shape, (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

/// Largest relative discrepancy between reverse-mode and central-difference
/// gradients of the scalar `f` with respect to every entry of every input.
///
/// Relative error is `|a − n| / max(|a|, |n|, floor)`.
pub fn max_grad_error(inputs: &[Array], h: f64, floor: f64, f: impl Fn(&mut Tape, &[Var]) -> Result<Var>) -> f64 {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|a| tape.constant(a.clone())).collect();
    let root = f(&mut tape, &vars).unwrap();
    let grads = tape.backward(root).unwrap();
    let eval = |xs: &[Array]| -> f64 {
        let mut t = Tape::new();
        let vs: Vec<Var> = xs.iter().map(|a| t.constant(a.clone())).collect();
        let r = f(&mut t, &vs).unwrap();
        t.value(r).data()[0]
    };
    let mut worst: f64 = 0.0;
    for (i, v) in vars.iter().enumerate() {
        let analytic = grads.wrt(*v).cloned().unwrap_or_else(|| Array::zeros(inputs[i].shape()));
        for j in 0..inputs[i].len() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[j] += h;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[j] -= h;
            let numeric = (eval(&plus) - eval(&minus)) / (2.0 * h);
            let a = analytic.data()[j];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(floor);
            worst = worst.max(err);
        }
    }
    worst
}

/// Scalar summary of `y` with a non-trivial adjoint: mean squared distance to a
/// fixed pseudo-random target of the same shape.
pub fn reduce(tape: &mut Tape, y: Var) -> Result<Var> {
    let shape = tape.value(y).shape().to_vec();
    let mut r = rng(0x7a46 + shape.iter().sum::<usize>() as u64);
    let target = random_array(&mut r, &shape, -2.0, 2.0);
    tape.mse(y, &target)
}
