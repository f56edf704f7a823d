mod common;

use laplace_control::envs::{EnvKind, EnvSpec, Sampling};
use laplace_control::models::ModelKind;
use laplace_control::pipeline::{
    collect, evaluate_loss, fit, fit_windows, make_windows, perturb_action, standardize, train, Budget, CollectConfig,
    Dataset, DatasetManifest, TrainConfig, TrajectorySample,
};
use laplace_control::policy::{Observed, Policy};
use laplace_control::{Error, Result};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Exp};

/// Always proposes the zero action.
struct Idle(usize);

impl Policy for Idle {
    fn name(&self) -> String {
        "idle".into()
    }
    fn reset(&mut self, _seed: u64) {}
    fn act(&mut self, _o: &Observed) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.0])
    }
}

/// `ẋ = −x + a(t − τ)` sampled at exponential intervals, integrated exactly.
fn linear_delay_dataset(windows: usize, tau: f64, seed: u64) -> Dataset {
    let mut manifest = DatasetManifest::for_spec(&EnvSpec::new(EnvKind::Pendulum), seed, 1.0, Sampling::Irregular);
    manifest.tau = tau;
    manifest.state_dim = 1;
    manifest.action_dim = 1;
    manifest.zero_action = vec![0.0];
    let mut data = Dataset::new(manifest);
    let mut rng = common::rng(seed);
    let exp = Exp::new(1.0 / 0.05).unwrap();
    let per_traj = 101;
    let mut traj = 0;
    while data.len() < windows + windows / (per_traj - 1) {
        let mut x: f64 = rng.gen_range(-1.0..1.0);
        let mut t = 0.0;
        // applied actions (time, value); zero before the episode
        let mut applied: Vec<(f64, f64)> = vec![(f64::NEG_INFINITY, 0.0)];
        for _ in 0..per_traj {
            let a = rng.gen_range(-1.0..1.0);
            applied.push((t, a));
            data.records.push(TrajectorySample { trajectory: traj, t, x: vec![x], a: vec![a] });
            let dt: f64 = Distribution::<f64>::sample(&exp, &mut rng).max(1e-4);
            // switch instants of the delayed input inside (t, t + dt)
            let mut s = t;
            let mut cur = applied.iter().rev().find(|(ta, _)| ta + tau <= t).unwrap().1;
            for &(ta, av) in &applied {
                let w = ta + tau;
                if w > t && w < t + dt {
                    x = cur + (x - cur) * (-(w - s)).exp();
                    s = w;
                    cur = av;
                }
            }
            x = cur + (x - cur) * (-(t + dt - s)).exp();
            t += dt;
        }
        traj += 1;
    }
    data
}

#[test]
fn linear_delay_system_is_learned_by_nlc() {
    let data = linear_delay_dataset(2000, 0.05, 1);
    let (std_data, norm) = standardize(&data).unwrap();
    let windows = make_windows(&std_data, data.manifest.omega);
    assert!(windows.len() >= 2000);
    let mut cfg = TrainConfig::new(Budget::Epochs(400));
    cfg.lr = 1e-3;
    let (model, report) = fit_windows(ModelKind::Nlc, norm, data.manifest.omega, &windows, &cfg, 0).unwrap();
    let mse = evaluate_loss(model.as_trainable(), &windows, 256).unwrap();
    assert!(mse < 1e-3, "standardized mse {mse:e}, curve {:?}", report.epoch_losses);

    // fresh trajectories: must beat holding the state constant
    let held_out = linear_delay_dataset(300, 0.05, 99);
    let (mut se, mut se_hold) = (0.0, 0.0);
    for w in make_windows(&held_out, data.manifest.omega) {
        let y = model.as_dynamics().predict(&w.x, &w.history, w.delta).unwrap();
        se += (y[0] - w.target[0]).powi(2);
        se_hold += (w.x[0] - w.target[0]).powi(2);
    }
    assert!(se < 0.5 * se_hold, "held-out sse {se:e} vs hold {se_hold:e}");
}

#[test]
fn synthetic_states_stay_in_the_action_range() {
    // x relaxes towards actions in [-1, 1] from a start in [-1, 1]
    let d = linear_delay_dataset(50, 0.0, 2);
    for tr in d.trajectories() {
        for w in tr.windows(2) {
            assert!(w[1].x[0].abs() <= 1.0 + 1e-12);
        }
    }
}

#[test]
fn dataset_binary_round_trip_is_exact() {
    let data = linear_delay_dataset(120, 0.05, 3);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.bin");
    data.save(&p).unwrap();
    let back = Dataset::load(&p).unwrap();
    assert_eq!(back, data);
    let mut text = Vec::new();
    data.write_text(&mut text).unwrap();
    let text = String::from_utf8(text).unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), data.len() + 1);
}

#[test]
fn corrupt_dataset_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.bin");
    std::fs::write(&p, b"not a dataset").unwrap();
    assert!(matches!(Dataset::load(&p), Err(Error::Format(_))));
    let data = linear_delay_dataset(40, 0.05, 4);
    let mut bytes = Vec::new();
    data.write_to(&mut bytes).unwrap();
    bytes.truncate(bytes.len() - 5);
    assert!(Dataset::read_from(&bytes[..]).is_err());
}

#[test]
fn validate_rejects_time_reversal_and_width() {
    let mut data = linear_delay_dataset(40, 0.05, 5);
    assert!(data.validate().is_ok());
    data.records[3].t = data.records[2].t;
    assert!(data.validate().is_err());
    let mut data = linear_delay_dataset(40, 0.05, 5);
    data.records[0].x.push(1.0);
    assert!(data.validate().is_err());
}

#[test]
fn one_window_per_consecutive_pair() {
    let data = linear_delay_dataset(300, 0.05, 6);
    let ws = make_windows(&data, 0.2);
    let want: usize = data.trajectories().iter().map(|t| t.len() - 1).sum();
    assert_eq!(ws.len(), want);
    let mut i = 0;
    for tr in data.trajectories() {
        for k in 0..tr.len() - 1 {
            let w = &ws[i];
            assert_eq!(w.x, tr[k].x);
            assert_eq!(w.target, tr[k + 1].x);
            assert_eq!(w.delta, tr[k + 1].t - tr[k].t);
            i += 1;
        }
    }
}

#[test]
fn windows_are_causal() {
    let data = linear_delay_dataset(300, 0.05, 7);
    for w in make_windows(&data, 0.2) {
        assert!(!w.history.is_empty());
        assert!(w.history.rel_times.iter().all(|&t| t <= 0.0 && t >= -0.2 - 1e-9));
        assert_eq!(*w.history.rel_times.last().unwrap(), 0.0);
        assert!(w.history.rel_times.windows(2).all(|p| p[0] < p[1]));
    }
}

#[test]
fn standardized_columns_have_zero_mean_unit_std() {
    let data = linear_delay_dataset(500, 0.05, 8);
    let (s, norm) = standardize(&data).unwrap();
    let xs: Vec<f64> = s.records.iter().map(|r| r.x[0]).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    assert!(mean.abs() < 1e-12 && (std - 1.0).abs() < 1e-12);
    let mut back = s.records[10].x.clone();
    norm.destandardize_states(&mut back);
    assert!((back[0] - data.records[10].x[0]).abs() < 1e-14);
    // the padding action is mapped like any other action
    let mut z = vec![0.0];
    norm.standardize_actions(&mut z);
    assert_eq!(s.manifest.zero_action, z);
}

#[test]
fn constant_dimension_is_floored() {
    let mut data = linear_delay_dataset(60, 0.05, 9);
    data.records.iter_mut().for_each(|r| r.a[0] = 0.5);
    let (s, norm) = standardize(&data).unwrap();
    assert_eq!(norm.action_std[0], laplace_control::pipeline::STD_FLOOR);
    assert!(s.records.iter().all(|r| r.a[0] == 0.0));
}

#[test]
fn empty_inputs_are_contract_errors() {
    let d = Dataset::new(linear_delay_dataset(10, 0.05, 0).manifest);
    assert!(matches!(standardize(&d), Err(Error::Contract(_))));
    let m = laplace_control::models::LearnedModel::new(
        ModelKind::Rnn,
        laplace_control::pipeline::NormStats::identity(1, 1),
        0.2,
        0,
    )
    .unwrap();
    let mut m = m;
    assert!(matches!(train(m.as_trainable_mut(), &[], &TrainConfig::new(Budget::Epochs(1))), Err(Error::Contract(_))));
}

#[test]
fn training_is_deterministic_and_reduces_loss() {
    let data = linear_delay_dataset(400, 0.05, 10);
    let cfg = TrainConfig::new(Budget::Epochs(3));
    for kind in [ModelKind::Nlc, ModelKind::Rnn] {
        let (a, ra) = fit(kind, &data, &cfg, 5).unwrap();
        let (b, rb) = fit(kind, &data, &cfg, 5).unwrap();
        assert_eq!(ra.epoch_losses, rb.epoch_losses);
        assert_eq!(a.as_trainable().params(), b.as_trainable().params());
        assert!(ra.final_loss() < ra.initial_loss, "{kind}: {ra:?}");
    }
}

#[test]
fn wall_clock_budget_stops() {
    let data = linear_delay_dataset(100, 0.05, 11);
    let cfg = TrainConfig::new(Budget::WallClock(std::time::Duration::from_millis(200)));
    let (_, r) = fit(ModelKind::Rnn, &data, &cfg, 0).unwrap();
    assert!(!r.epoch_losses.is_empty());
    assert!(r.seconds < 30.0);
}

#[test]
fn bad_training_config_is_rejected() {
    let data = linear_delay_dataset(50, 0.05, 12);
    let mut cfg = TrainConfig::new(Budget::Epochs(1));
    cfg.batch_size = 0;
    assert!(matches!(fit(ModelKind::Nlc, &data, &cfg, 0), Err(Error::Config(_))));
}

#[test]
fn action_noise_has_requested_std() {
    let mut rng = common::rng(13);
    let a_max = [3.0, 0.5];
    let n = 100_000;
    let mut ss = [0.0; 2];
    for _ in 0..n {
        let (clipped, noisy) = perturb_action(&[0.2, -0.1], &a_max, 1.0, &mut rng);
        ss[0] += (noisy[0] - 0.2).powi(2);
        ss[1] += (noisy[1] + 0.1).powi(2);
        assert!(clipped.iter().zip(&a_max).all(|(c, m)| c.abs() <= *m));
    }
    for i in 0..2 {
        let std = (ss[i] / n as f64).sqrt();
        assert!((std - a_max[i]).abs() < 0.05 * a_max[i], "dim {i}: {std}");
    }
}

#[test]
fn collected_intervals_average_to_delta_bar() {
    let spec = EnvSpec::new(EnvKind::Pendulum).with_delay_steps(1);
    let data = collect(&spec, &mut Idle(1), &CollectConfig::new(20_000, 14)).unwrap();
    assert_eq!(data.len(), 20_000);
    data.validate().unwrap();
    let gaps: Vec<f64> = data.trajectories().iter().flat_map(|t| t.windows(2).map(|w| w[1].t - w[0].t).collect::<Vec<_>>()).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    assert!((mean - spec.delta_bar).abs() < 0.02 * spec.delta_bar, "mean interval {mean}");
    // executed actions are clipped
    assert!(data.records.iter().all(|r| r.a[0].abs() <= spec.a_max[0]));
    // episodes last at most ten seconds
    assert!(data.trajectories().iter().all(|t| t.last().unwrap().t < 10.0));
}

#[test]
fn regular_sampling_uses_the_grid() {
    let spec = EnvSpec::new(EnvKind::Pendulum);
    let mut cfg = CollectConfig::new(50, 15);
    cfg.sampling = Sampling::Regular;
    let data = collect(&spec, &mut Idle(1), &cfg).unwrap();
    for tr in data.trajectories() {
        for w in tr.windows(2) {
            assert!((w[1].t - w[0].t - spec.delta_bar).abs() < 1e-12);
        }
    }
}

#[test]
fn different_seeds_give_different_data() {
    let spec = EnvSpec::new(EnvKind::Cartpole);
    let a = collect(&spec, &mut Idle(1), &CollectConfig::new(30, 1)).unwrap();
    let b = collect(&spec, &mut Idle(1), &CollectConfig::new(30, 2)).unwrap();
    let c = collect(&spec, &mut Idle(1), &CollectConfig::new(30, 1)).unwrap();
    assert_ne!(a.records, b.records);
    assert_eq!(a.records, c.records);
    assert_eq!(a.manifest.seed, 1);
}

#[test]
fn manifest_recovers_environment() {
    let spec = EnvSpec::new(EnvKind::Acrobot).with_delay_steps(2).with_obs_noise(0.01);
    let m = DatasetManifest::for_spec(&spec, 0, 1.0, Sampling::Irregular);
    let back = m.env_spec();
    assert_eq!(back.tau, spec.tau);
    assert_eq!(back.obs_noise_std, spec.obs_noise_std);
    assert_eq!(m.state_dim, spec.obs_dim());
}

#[test]
fn single_record_dataset_standardizes_without_nan() {
    let mut data = linear_delay_dataset(10, 0.05, 3);
    data.records.truncate(1);
    let (s, norm) = standardize(&data).unwrap();
    assert!(s.records[0].x.iter().chain(&s.records[0].a).all(|v| v.is_finite()));
    assert!(norm.state_std.iter().all(|&v| v > 0.0) && norm.delta_std > 0.0);
    assert!(make_windows(&s, 0.2).is_empty());
}

#[test]
fn window_drops_actions_older_than_omega() {
    let mut data = linear_delay_dataset(10, 0.05, 4);
    data.records.truncate(5);
    for (r, &t) in data.records.iter_mut().zip(&[0.0, 0.1, 0.25, 0.3, 0.5]) {
        r.t = t;
    }
    let ws = make_windows(&data, 0.2);
    // anchor 0.3: the entry at 0.0 is out of reach, 0.1 is exactly on the edge
    let h = &ws[3].history;
    let rel: Vec<f64> = h.rel_times.iter().map(|t| (t * 1e9).round() / 1e9).collect();
    assert_eq!(rel, vec![-0.2, -0.05, 0.0]);
    assert_eq!(h.actions, vec![data.records[1].a[0], data.records[2].a[0], data.records[3].a[0]]);
    // anchor 0.0 sees only the zero-action grid before the start
    let h0 = &ws[0].history;
    assert_eq!(h0.len(), 5);
    assert!(h0.actions[..4].iter().all(|&a| a == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn window_count_matches_records(n in 20usize..200, seed in 0u64..100) {
        let data = linear_delay_dataset(n, 0.05, seed);
        let ws = make_windows(&data, 0.2);
        prop_assert_eq!(ws.len(), data.len() - data.trajectories().len());
        prop_assert!(ws.iter().all(|w| w.delta > 0.0));
    }
}
