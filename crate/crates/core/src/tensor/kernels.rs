//! Dense kernels: matrix multiply and vectorized transcendental functions.
//!
//! Every output element of [`gemm`] is a fused multiply-add chain over the
//! inner dimension in ascending order, so a row's result does not depend on
//! how many other rows share the call. The same code is compiled for several
//! instruction sets and selected once at runtime; all variants produce
//! identical bits.

use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Level {
    Avx512,
    Avx2,
    Generic,
}

fn level() -> Level {
    static LEVEL: OnceLock<Level> = OnceLock::new();
    *LEVEL.get_or_init(|| {
        #[cfg(target_arch = "x86_64")]
        {
            if is_x86_feature_detected!("avx512f") && is_x86_feature_detected!("fma") {
                return Level::Avx512;
            }
            if is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma") {
                return Level::Avx2;
            }
        }
        Level::Generic
    })
}

macro_rules! dispatch {
    ($generic:ident, $v512:ident, $v2:ident, ($($arg:ident : $ty:ty),*) $(-> $ret:ty)?) => {
        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = "avx512f,avx2,fma")]
        unsafe fn $v512($($arg: $ty),*) $(-> $ret)? { $generic($($arg),*) }

        #[cfg(target_arch = "x86_64")]
        #[target_feature(enable = "avx2,fma")]
        unsafe fn $v2($($arg: $ty),*) $(-> $ret)? { $generic($($arg),*) }
    };
}

/// `c[m×n] = a[m×k] · b[k×n]`, all row-major.
pub fn gemm(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n, "gemm: buffer too small");
    match level() {
        #[cfg(target_arch = "x86_64")]
        Level::Avx512 => unsafe { gemm_avx512(a, b, c, m, k, n) },
        #[cfg(target_arch = "x86_64")]
        Level::Avx2 => unsafe { gemm_avx2(a, b, c, m, k, n) },
        _ => gemm_generic(a, b, c, m, k, n),
    }
}

dispatch!(gemm_generic, gemm_avx512, gemm_avx2, (a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize));

#[inline(always)]
fn gemm_generic(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    const MR: usize = 4;
    const NR: usize = 16;
    let mut i = 0;
    while i + MR <= m {
        let mut j = 0;
        while j + NR <= n {
            let mut acc = [[0.0f64; NR]; MR];
            for p in 0..k {
                let brow = &b[p * n + j..p * n + j + NR];
                for r in 0..MR {
                    let av = a[(i + r) * k + p];
                    for q in 0..NR {
                        acc[r][q] = av.mul_add(brow[q], acc[r][q]);
                    }
                }
            }
            for r in 0..MR {
                c[(i + r) * n + j..(i + r) * n + j + NR].copy_from_slice(&acc[r]);
            }
            j += NR;
        }
        while j < n {
            for r in 0..MR {
                let mut s = 0.0;
                for p in 0..k {
                    s = a[(i + r) * k + p].mul_add(b[p * n + j], s);
                }
                c[(i + r) * n + j] = s;
            }
            j += 1;
        }
        i += MR;
    }
    while i < m {
        for j in 0..n {
            let mut s = 0.0;
            for p in 0..k {
                s = a[i * k + p].mul_add(b[p * n + j], s);
            }
            c[i * n + j] = s;
        }
        i += 1;
    }
}

const LOG2E: f64 = std::f64::consts::LOG2_E;
const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
const ROUND_MAGIC: f64 = 6_755_399_441_055_744.0; // 1.5 * 2^52

/// Branch-free `exp` accurate to a few ulp; inputs are clamped to [-708, 709].
#[inline(always)]
pub fn exp_scalar(x: f64) -> f64 {
    let x = x.clamp(-708.0, 709.0);
    let shifted = x * LOG2E + ROUND_MAGIC;
    let k = shifted - ROUND_MAGIC;
    let r = (x - k * LN2_HI) - k * LN2_LO;
    let mut p = 1.0 / 6_227_020_800.0;
    p = p * r + 1.0 / 479_001_600.0;
    p = p * r + 1.0 / 39_916_800.0;
    p = p * r + 1.0 / 3_628_800.0;
    p = p * r + 1.0 / 362_880.0;
    p = p * r + 1.0 / 40_320.0;
    p = p * r + 1.0 / 5_040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    // `shifted` and the magic constant share an exponent, so their bit patterns differ by k
    let ki = shifted.to_bits() as i64 - ROUND_MAGIC.to_bits() as i64;
    let scale = f64::from_bits(((ki + 1023) as u64) << 52);
    p * scale
}

#[inline(always)]
pub fn tanh_scalar(x: f64) -> f64 {
    let e = exp_scalar(-2.0 * x.abs());
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

#[inline(always)]
pub fn sigmoid_scalar(x: f64) -> f64 {
    1.0 / (1.0 + exp_scalar(-x))
}

macro_rules! slice_fn {
    ($name:ident, $generic:ident, $v512:ident, $v2:ident, $f:ident) => {
        pub fn $name(x: &mut [f64]) {
            match level() {
                #[cfg(target_arch = "x86_64")]
                Level::Avx512 => unsafe { $v512(x) },
                #[cfg(target_arch = "x86_64")]
                Level::Avx2 => unsafe { $v2(x) },
                _ => $generic(x),
            }
        }

        #[inline(always)]
        fn $generic(x: &mut [f64]) {
            for v in x.iter_mut() {
                *v = $f(*v);
            }
        }

        dispatch!($generic, $v512, $v2, (x: &mut [f64]));
    };
}

slice_fn!(exp_in_place, exp_generic, exp_avx512, exp_avx2, exp_scalar);
slice_fn!(tanh_in_place, tanh_generic, tanh_avx512, tanh_avx2, tanh_scalar);
slice_fn!(sigmoid_in_place, sigmoid_generic, sigmoid_avx512, sigmoid_avx2, sigmoid_scalar);

// Out of line so the optimizer cannot merge a sin and a cos of the same
// argument into one `sincos` call on one path but not the other.
#[inline(never)]
pub fn sin_in_place(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.sin());
}

#[inline(never)]
pub fn cos_in_place(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.cos());
}

#[inline(never)]
pub fn tan_in_place(x: &mut [f64]) {
    x.iter_mut().for_each(|v| *v = v.tan());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                c[i * n + j] = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
            }
        }
        c
    }

    #[test]
    fn gemm_matches_naive_on_ragged_shapes() {
        for &(m, k, n) in &[(1, 1, 1), (5, 3, 17), (9, 7, 33), (4, 16, 16), (3, 2, 5)] {
            let a: Vec<f64> = (0..m * k).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
            let b: Vec<f64> = (0..k * n).map(|i| ((i * 53) % 13) as f64 * 0.25).collect();
            let mut c = vec![f64::NAN; m * n];
            gemm(&a, &b, &mut c, m, k, n);
            assert_eq!(c, naive(&a, &b, m, k, n));
        }
    }

    #[test]
    fn gemm_rows_are_batch_invariant() {
        let (m, k, n) = (13, 29, 40);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut full = vec![0.0; m * n];
        gemm(&a, &b, &mut full, m, k, n);
        for i in 0..m {
            let mut row = vec![0.0; n];
            gemm(&a[i * k..(i + 1) * k], &b, &mut row, 1, k, n);
            assert_eq!(row, full[i * n..(i + 1) * n]);
        }
    }

    #[test]
    fn generic_and_dispatched_kernels_agree() {
        let (m, k, n) = (6, 10, 35);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.3).cos()).collect();
        let mut c1 = vec![0.0; m * n];
        let mut c2 = vec![0.0; m * n];
        gemm(&a, &b, &mut c1, m, k, n);
        gemm_generic(&a, &b, &mut c2, m, k, n);
        assert_eq!(c1, c2);
        let mut t1: Vec<f64> = (0..1000).map(|i| i as f64 * 0.02 - 10.0).collect();
        let mut t2 = t1.clone();
        tanh_in_place(&mut t1);
        tanh_generic(&mut t2);
        assert_eq!(t1, t2);
    }

    #[test]
    fn exp_is_accurate_over_its_range() {
        let mut worst: f64 = 0.0;
        let mut x = -700.0;
        while x < 700.0 {
            let rel = (exp_scalar(x) - x.exp()).abs() / x.exp();
            worst = worst.max(rel);
            x += 0.0137;
        }
        assert!(worst < 1e-15, "worst relative error {worst}");
        assert_eq!(exp_scalar(0.0), 1.0);
    }

    #[test]
    fn tanh_and_sigmoid_track_std() {
        let mut x = -30.0;
        while x < 30.0 {
            assert!((tanh_scalar(x) - x.tanh()).abs() < 4e-16, "tanh at {x}");
            let s = 1.0 / (1.0 + (-x).exp());
            assert!((sigmoid_scalar(x) - s).abs() < 4e-16, "sigmoid at {x}");
            x += 0.00931;
        }
        assert_eq!(tanh_scalar(0.0), 0.0);
        assert_eq!(tanh_scalar(-800.0), -1.0);
        assert_eq!(sigmoid_scalar(0.0), 0.5);
    }
}
