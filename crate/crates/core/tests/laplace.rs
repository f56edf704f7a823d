mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use common::rng;
use laplace_control::laplace::{
    ilt_fsi, ilt_query, ilt_reconstruct, inverse_stereographic, stereographic_project, ComplexVal, IltParams, RiemannCoord, POLE_CLAMP,
};
use laplace_control::Error;
use proptest::prelude::*;
use rand::Rng;

type Pair = (&'static str, fn(ComplexVal) -> ComplexVal, fn(f64) -> f64);

fn one() -> ComplexVal {
    ComplexVal::new(1.0, 0.0)
}

/// Closed-form transform pairs used as the reconstruction oracle.
fn pairs() -> [Pair; 4] {
    [
        ("1/s", |s| one().div(s), |_| 1.0),
        ("1/(s+1)", |s| one().div(s.add(one())), |t| (-t).exp()),
        ("1/(s^2+1)", |s| one().div(s.mul(s).add(one())), f64::sin),
        ("1/s^2", |s| one().div(s.mul(s)), |t| t),
    ]
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn random_complex(r: &mut impl Rng, log_lo: f64, log_hi: f64) -> ComplexVal {
    let m = 10f64.powf(r.gen_range(log_lo..log_hi));
    let a = r.gen_range(-PI..PI);
    ComplexVal::new(m * a.cos(), m * a.sin())
}

#[test]
fn projection_examples() {
    let c = stereographic_project(ComplexVal::new(1.0, 0.0)).unwrap().coord;
    assert_eq!((c.theta, c.phi), (0.0, 0.0));
    let c = stereographic_project(ComplexVal::new(0.0, 1.0)).unwrap().coord;
    assert!((c.theta - FRAC_PI_2).abs() < 1e-15 && c.phi.abs() < 1e-15);
    let c = stereographic_project(ComplexVal::new(2.0, 0.0)).unwrap().coord;
    assert_eq!(c.theta, 0.0);
    assert!((c.phi - (3.0f64 / 5.0).asin()).abs() < 1e-14);
    assert!((c.phi - 0.6435).abs() < 1e-4);
}

#[test]
fn projection_of_origin_is_flagged_and_clamped() {
    let p = stereographic_project(ComplexVal::new(0.0, 0.0)).unwrap();
    assert!(p.degenerate);
    assert_eq!(p.coord.theta, 0.0);
    assert_eq!(p.coord.phi, -FRAC_PI_2 + POLE_CLAMP);
    assert!(!stereographic_project(ComplexVal::new(1.0, 0.0)).unwrap().degenerate);
    assert!(matches!(stereographic_project(ComplexVal::new(f64::NAN, 0.0)), Err(Error::Domain(_))));
}

#[test]
fn inverse_projection_examples() {
    let s = inverse_stereographic(RiemannCoord { theta: 0.0, phi: 0.0 }).unwrap();
    assert!((s.re - 1.0).abs() < 1e-15 && s.im == 0.0);
    let s = inverse_stereographic(RiemannCoord { theta: FRAC_PI_2, phi: 0.0 }).unwrap();
    assert!(s.re.abs() < 1e-15 && (s.im - 1.0).abs() < 1e-15);
    for phi in [FRAC_PI_2, -FRAC_PI_2, 2.0] {
        assert!(matches!(inverse_stereographic(RiemannCoord { theta: 0.0, phi }), Err(Error::Domain(_))));
    }
}

#[test]
fn projection_round_trip_hundred_points() {
    let mut r = rng(1);
    for _ in 0..100 {
        let s = random_complex(&mut r, -3.0, 3.0);
        let back = inverse_stereographic(stereographic_project(s).unwrap().coord).unwrap();
        assert!(back.sub(s).abs() <= 1e-9 * s.abs().max(1.0), "{s:?} -> {back:?}");
    }
}

#[test]
fn query_point_layout() {
    let p = IltParams::default();
    assert_eq!(p.terms, 17);
    let q = ilt_query(0.7, &p).unwrap();
    assert_eq!(q.points.len(), 17);
    assert_eq!(q.points[0].im, 0.0);
    assert!(q.points.iter().all(|s| s.re == q.sigma));
    assert!(q.points.windows(2).all(|w| w[1].im > w[0].im));
    assert!((q.period - p.scale * 0.7).abs() < 1e-15);
    assert!((q.sigma - (p.sigma0 - p.tolerance.ln() / q.period)).abs() < 1e-12);

    let q2 = ilt_query(1.4, &p).unwrap();
    let gap = |q: &laplace_control::laplace::IltQuery| q.points[1].im - q.points[0].im;
    assert!((gap(&q2) - gap(&q) / 2.0).abs() < 1e-12);
}

#[test]
fn query_rejects_bad_inputs() {
    let p = IltParams::default();
    for t in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert!(matches!(ilt_query(t, &p), Err(Error::Domain(_))), "t = {t}");
    }
    let mut few = p;
    few.terms = 1;
    few.euler_terms = 0;
    assert!(ilt_query(1.0, &few).is_err());
}

#[test]
fn reconstruct_length_mismatch_is_contract_error() {
    let q = ilt_query(1.0, &IltParams::default()).unwrap();
    let vals = vec![one(); 16];
    assert!(matches!(ilt_reconstruct(&vals, &q), Err(Error::Contract(_))));
}

#[test]
fn reconstruct_closed_form_examples() {
    let p = IltParams::default();
    let x = ilt_fsi(|s| one().div(s), &[0.5, 1.0, 5.0], &p).unwrap();
    assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-3), "{x:?}");
    let x = ilt_fsi(|s| one().div(s.add(one())), &[1.0], &p).unwrap()[0];
    assert!((x - (-1f64).exp()).abs() < 1e-3);
    let x = ilt_fsi(|s| one().div(s.mul(s).add(one())), &[FRAC_PI_2], &p).unwrap()[0];
    assert!((x - 1.0).abs() < 1e-3);
}

#[test]
fn unit_step_over_full_range() {
    let x = ilt_fsi(|s| one().div(s), &linspace(0.1, 10.0, 50), &IltParams::default()).unwrap();
    assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-3));
}

#[test]
fn oracle_suite() {
    let times = linspace(0.1, 10.0, 50);
    for (name, f, exact) in pairs() {
        let x = ilt_fsi(f, &times, &IltParams::default()).unwrap();
        let err = x.iter().zip(&times).map(|(v, &t)| (v - exact(t)).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-3, "{name}: max error {err:e}");
    }
}

#[test]
fn evaluation_count_is_terms_times_points() {
    let mut calls = 0;
    let times = [0.1, 0.3, 1.0, 2.0, 5.0, 7.5, 10.0];
    ilt_fsi(
        |s| {
            calls += 1;
            one().div(s)
        },
        &times,
        &IltParams::default(),
    )
    .unwrap();
    assert_eq!(calls, 119);
}

#[test]
fn reconstruction_is_linear() {
    let times = linspace(0.1, 10.0, 20);
    let p = IltParams::default();
    let a = ilt_fsi(|s| one().div(s), &times, &p).unwrap();
    let b = ilt_fsi(|s| ComplexVal::new(2.0, 0.0).div(s), &times, &p).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!((y - 2.0 * x).abs() <= 1e-9 * y.abs().max(1.0));
    }
}

#[test]
fn compute_is_independent_of_time() {
    let p = IltParams::default();
    let time = |t: f64| {
        let mut calls = 0usize;
        let mut best = f64::INFINITY;
        for _ in 0..20 {
            calls = 0;
            let t0 = Instant::now();
            for _ in 0..2000 {
                std::hint::black_box(
                    ilt_fsi(
                        |s| {
                            calls += 1;
                            one().div(s.add(one()))
                        },
                        &[t],
                        &p,
                    )
                    .unwrap(),
                );
            }
            best = best.min(t0.elapsed().as_secs_f64());
        }
        (calls, best)
    };
    let (c1, t1) = time(0.1);
    let (c2, t2) = time(100.0);
    assert_eq!(c1, c2);
    assert!(t1.max(t2) / t1.min(t2) <= 2.0, "{t1:e} vs {t2:e}");
}

#[test]
fn reconstruction_gradient_matches_finite_differences() {
    // x̂ is linear in the transform values; its gradient is the coefficient vector.
    let h = 1e-6;
    for seed in 0..5 {
        let mut r = rng(seed);
        let t = r.gen_range(0.05..5.0);
        let q = ilt_query(t, &IltParams::default()).unwrap();
        let vals: Vec<ComplexVal> = (0..17).map(|_| ComplexVal::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
        let (c_re, c_im) = q.coefficients();
        for k in 0..17 {
            for part in 0..2 {
                let bump = |d: f64| {
                    let mut v = vals.clone();
                    if part == 0 {
                        v[k].re += d;
                    } else {
                        v[k].im += d;
                    }
                    ilt_reconstruct(&v, &q).unwrap()
                };
                let numeric = (bump(h) - bump(-h)) / (2.0 * h);
                let analytic = if part == 0 { c_re[k] } else { c_im[k] };
                let rel = (numeric - analytic).abs() / analytic.abs().max(numeric.abs()).max(1e-3);
                assert!(rel < 1e-5, "seed {seed} k {k}: {analytic} vs {numeric}");
            }
        }
    }
}

#[test]
fn scaled_coefficients_divide_by_powers_of_s() {
    let times = linspace(0.1, 10.0, 30);
    for &t in &times {
        let q = ilt_query(t, &IltParams::default()).unwrap();
        for order in 0..3u32 {
            let (a, b) = q.scaled_coefficients(order);
            // inverse of (1/s)/sⁿ is tⁿ/n!
            let x: f64 = q
                .points
                .iter()
                .zip(a.iter().zip(&b))
                .map(|(s, (a, b))| {
                    let f = one().div(*s);
                    a * f.re + b * f.im
                })
                .sum();
            let exact = t.powi(order as i32) / [1.0, 1.0, 2.0][order as usize];
            assert!((x - exact).abs() <= 1e-3 * exact.max(1.0), "t {t} order {order}: {x} vs {exact}");
        }
    }
    // the order-2 coefficients stay bounded as t → 0
    let small = ilt_query(1e-4, &IltParams::default()).unwrap().scaled_coefficients(2);
    assert!(small.0.iter().chain(&small.1).all(|c| c.abs() < 1e-2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn projection_stays_in_open_box(log_m in -12.0f64..12.0, arg in -PI..PI) {
        let m = 10f64.powf(log_m);
        let s = ComplexVal::new(m * arg.cos(), m * arg.sin());
        let c = stereographic_project(s).unwrap().coord;
        prop_assert!(c.theta > -PI - 1e-15 && c.theta <= PI);
        prop_assert!(c.phi > -FRAC_PI_2 && c.phi < FRAC_PI_2);
    }

    #[test]
    fn projection_round_trip(log_m in -6.0f64..6.0, arg in -PI..PI) {
        let m = 10f64.powf(log_m);
        let s = ComplexVal::new(m * arg.cos(), m * arg.sin());
        let back = inverse_stereographic(stereographic_project(s).unwrap().coord).unwrap();
        prop_assert!(back.sub(s).abs() <= 1e-9 * m.max(1.0));
    }

    #[test]
    fn query_has_terms_points_with_real_first(t in 1e-4f64..1e3, terms in 2usize..40) {
        let p = IltParams { terms, euler_terms: 0, ..IltParams::default() };
        let q = ilt_query(t, &p).unwrap();
        prop_assert_eq!(q.points.len(), terms);
        prop_assert_eq!(q.points[0].im, 0.0);
        prop_assert!(q.points.iter().all(|s| s.re == q.sigma && s.re.is_finite()));
    }
}
