mod common;

use laplace_control::envs::{EnvKind, EnvSpec, EnvState};
use laplace_control::models::{
    ActionHistory, DynamicsModel, HistoryBatch, LearnedModel, ModelKind, NlcConfig, NlcModel, OracleModel, RnnConfig,
    RnnModel, MAX_HISTORY,
};
use laplace_control::pipeline::NormStats;
use laplace_control::tensor::{Array, Tape};
use laplace_control::Error;
use proptest::prelude::*;
use rand::Rng;

const OMEGA: f64 = 0.2;
const DX: usize = 5;
const DA: usize = 1;

fn nlc(seed: u64) -> NlcModel {
    NlcModel::new(NlcConfig::new(DX, DA, OMEGA), NormStats::identity(DX, DA), seed)
}

fn rnn(seed: u64) -> RnnModel {
    RnnModel::new(RnnConfig::new(DX, DA, OMEGA), NormStats::identity(DX, DA), seed)
}

fn history(rng: &mut impl Rng, len: usize) -> ActionHistory {
    let mut h = ActionHistory::new(DA);
    for j in 0..len {
        h.push(-0.05 * (len - 1 - j) as f64, &[rng.gen_range(-3.0..3.0)]);
    }
    h
}

fn batch(rng: &mut impl Rng, b: usize) -> (Vec<f64>, HistoryBatch) {
    let x: Vec<f64> = (0..b * DX).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let hs: Vec<ActionHistory> = (0..b).map(|i| history(rng, 1 + (i * 3) % 5)).collect();
    let refs: Vec<&ActionHistory> = hs.iter().collect();
    (x, HistoryBatch::from_histories(&refs).unwrap())
}

#[test]
fn parameter_counts_near_eighty_thousand() {
    let n = nlc(0).parameter_count() as f64;
    let r = rnn(0).parameter_count() as f64;
    assert!((n - 80_000.0).abs() <= 8_000.0, "nlc has {n} parameters");
    assert!((r - 80_000.0).abs() <= 8_000.0, "rnn has {r} parameters");
}

#[test]
fn nlc_predictions_finite_across_interval_scales() {
    let m = nlc(1);
    let mut rng = common::rng(1);
    let (x, h) = batch(&mut rng, 4);
    for delta in [1e-3, 0.05, 1.0, 12.0] {
        let y = m.predict_batch(&x, &h, delta).unwrap();
        assert_eq!(y.len(), x.len());
        assert!(y.iter().all(|v| v.is_finite()), "delta {delta}: {y:?}");
    }
}

#[test]
fn nlc_query_count_does_not_depend_on_interval() {
    let m = nlc(0);
    assert_eq!(m.queries_per_prediction(), 17 * DX);
    let mut rng = common::rng(2);
    let (x, h) = batch(&mut rng, 3);
    let mut sizes = Vec::new();
    for delta in [1e-3, 0.1, 10.0] {
        let mut tape = Tape::new();
        m.forward_tape(&mut tape, &Array::new(&[3, DX], x.clone()).unwrap(), &h, &[delta; 3]).unwrap();
        sizes.push(tape.len());
    }
    assert!(sizes.windows(2).all(|w| w[0] == w[1]), "{sizes:?}");
}

#[test]
fn rnn_with_zero_output_layer_is_identity() {
    let mut m = rnn(3);
    let out = m.output_layer().clone();
    m.params.get_mut(out.w).data_mut().fill(0.0);
    m.params.get_mut(out.b).data_mut().fill(0.0);
    let mut rng = common::rng(3);
    let (x, h) = batch(&mut rng, 5);
    for delta in [0.01, 0.3] {
        assert_eq!(m.predict_std(&x, &h, delta).unwrap(), x);
    }
}

#[test]
fn oracle_matches_environment_step_bitwise() {
    let mut rng = common::rng(4);
    for kind in EnvKind::ALL {
        let spec = EnvSpec::new(kind).with_delay_steps(2);
        let oracle = OracleModel::new(spec.clone());
        let mut env = EnvState::reset(&spec, 4);
        for _ in 0..100 {
            let a: Vec<f64> = spec.a_max.iter().map(|&m| rng.gen_range(-m..m)).collect();
            let dt = rng.gen_range(0.005..0.15);
            let mut buf = env.buffer.clone();
            buf.push(env.time, &a);
            let rel: Vec<f64> = buf.times().iter().map(|t| t - env.time).collect();
            let want = oracle.predict_one(&env.raw(), &rel, buf.actions(), dt).unwrap();
            env.step(&spec, &a, dt).unwrap();
            assert_eq!(env.raw(), want, "{kind:?}");
        }
    }
}

#[test]
fn oracle_ignores_actions_superseded_before_the_delay() {
    let spec = EnvSpec::new(EnvKind::Pendulum).with_delay_steps(2);
    let oracle = OracleModel::new(spec.clone());
    let x = [3.0, 0.2];
    let rel = [-0.3, -0.2, -0.12, -0.05, 0.0];
    let base = [1.0, -1.0, 0.5, 2.0, -2.0];
    let want = oracle.predict_one(&x, &rel, &base, 0.05).unwrap();
    let mut changed = base;
    changed[0] = -7.0;
    changed[1] = 9.0;
    assert_eq!(oracle.predict_one(&x, &rel, &changed, 0.05).unwrap(), want);
    changed[2] = -0.5;
    assert_ne!(oracle.predict_one(&x, &rel, &changed, 0.05).unwrap(), want);
}

#[test]
fn window_drops_entries_older_than_omega() {
    let times = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3];
    let mut actions = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
    let h = ActionHistory::from_log(&times, &actions, 1, 0.3, OMEGA, 0.05);
    assert_eq!(h.actions, vec![3.0, 4.0, 5.0, 6.0, 7.0]);
    actions[0] = -100.0;
    actions[1] = 100.0;
    assert_eq!(ActionHistory::from_log(&times, &actions, 1, 0.3, OMEGA, 0.05), h);
}

#[test]
fn window_pads_before_episode_start() {
    let h = ActionHistory::from_log(&[0.0, 0.05], &[1.0, 2.0], 1, 0.05, OMEGA, 0.05);
    assert_eq!(h.actions, vec![0.0, 0.0, 0.0, 1.0, 2.0]);
    let rel: Vec<f64> = h.rel_times.iter().map(|t| (t * 100.0).round() / 100.0).collect();
    assert_eq!(rel, vec![-0.2, -0.15, -0.1, -0.05, 0.0]);
}

#[test]
fn window_keeps_at_most_max_history() {
    let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.001).collect();
    let actions: Vec<f64> = (0..100).map(|i| i as f64).collect();
    let h = ActionHistory::from_log(&times, &actions, 1, 0.099, OMEGA, 0.05);
    assert_eq!(h.len(), MAX_HISTORY);
    assert_eq!(*h.actions.last().unwrap(), 99.0);
}

#[test]
fn canonicalize_sorts_stably_by_time() {
    let mut h = ActionHistory::new(2);
    h.push(-0.1, &[1.0, 1.5]);
    h.push(-0.3, &[2.0, 2.5]);
    h.push(-0.1, &[3.0, 3.5]);
    h.push(0.0, &[4.0, 4.5]);
    h.canonicalize();
    assert_eq!(h.rel_times, vec![-0.3, -0.1, -0.1, 0.0]);
    assert_eq!(h.actions, vec![2.0, 2.5, 1.0, 1.5, 3.0, 3.5, 4.0, 4.5]);
}

#[test]
fn zero_encoder_makes_history_irrelevant() {
    let mut m = nlc(5);
    for id in m.params.ids().collect::<Vec<_>>() {
        if m.params.name(id).starts_with("encoder") {
            m.params.get_mut(id).data_mut().fill(0.0);
        }
    }
    let mut rng = common::rng(5);
    let x: Vec<f64> = (0..DX).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = m.predict_std(&x, &HistoryBatch::single(&history(&mut rng, 4)).unwrap(), 0.05).unwrap();
    let b = m.predict_std(&x, &HistoryBatch::single(&history(&mut rng, 2)).unwrap(), 0.05).unwrap();
    assert_eq!(a, b);
}

#[test]
fn predictions_respond_to_the_history() {
    let mut rng = common::rng(6);
    let x: Vec<f64> = (0..DX).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h = history(&mut rng, 4);
    let mut g = h.clone();
    g.actions[3] += 1.0;
    let models: [Box<dyn DynamicsModel>; 2] = [Box::new(nlc(6)), Box::new(rnn(6))];
    for m in &models {
        let a = m.predict(&x, &h, 0.05).unwrap();
        let b = m.predict(&x, &g, 0.05).unwrap();
        let diff: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).abs()).sum();
        assert!(diff > 1e-8, "{:?} ignores its history", m.kind());
    }
}

#[test]
fn tape_and_inference_paths_agree_bitwise() {
    let mut rng = common::rng(7);
    let (x, h) = batch(&mut rng, 6);
    let xa = Array::new(&[6, DX], x.clone()).unwrap();
    let n = nlc(7);
    let r = rnn(7);
    for delta in [0.01, 0.05, 0.4] {
        let mut t = Tape::new();
        let y = n.forward_tape(&mut t, &xa, &h, &[delta; 6]).unwrap();
        assert_eq!(t.value(y).data(), n.predict_std(&x, &h, delta).unwrap().as_slice());
        let mut t = Tape::new();
        let y = r.forward_tape(&mut t, &xa, &h, &[delta; 6]).unwrap();
        assert_eq!(t.value(y).data(), r.predict_std(&x, &h, delta).unwrap().as_slice());
    }
}

#[test]
fn batched_prediction_equals_rowwise() {
    let mut rng = common::rng(8);
    let (x, h) = batch(&mut rng, 7);
    let m = nlc(8);
    let all = m.predict_std(&x, &h, 0.07).unwrap();
    for b in 0..7 {
        let one = m.predict_std(&x[b * DX..(b + 1) * DX], &HistoryBatch::single(&h.row(b)).unwrap(), 0.07).unwrap();
        assert_eq!(one, all[b * DX..(b + 1) * DX]);
    }
}

/// Worst relative error between tape gradients and central differences over a
/// sample of parameter entries.
fn param_grad_error(
    params: &mut laplace_control::tensor::Params,
    loss: impl Fn(&laplace_control::tensor::Params, &mut Tape) -> laplace_control::tensor::Var,
    picks: usize,
    seed: u64,
) -> f64 {
    let mut tape = Tape::new();
    let l = loss(params, &mut tape);
    let grads = tape.backward(l).unwrap().for_params(params);
    let eval = |p: &laplace_control::tensor::Params| {
        let mut t = Tape::new();
        let l = loss(p, &mut t);
        t.value(l).data()[0]
    };
    let mut rng = common::rng(seed);
    let ids: Vec<_> = params.ids().collect();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for _ in 0..picks {
        let id = ids[rng.gen_range(0..ids.len())];
        let j = rng.gen_range(0..params.get(id).len());
        let orig = params.get(id).data()[j];
        params.get_mut(id).data_mut()[j] = orig + h;
        let up = eval(params);
        params.get_mut(id).data_mut()[j] = orig - h;
        let down = eval(params);
        params.get_mut(id).data_mut()[j] = orig;
        let numeric = (up - down) / (2.0 * h);
        let a = grads[ids.iter().position(|&i| i == id).unwrap()].data()[j];
        worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4));
    }
    worst
}

#[test]
fn nlc_parameter_gradients_match_finite_differences() {
    let mut rng = common::rng(9);
    let (x, h) = batch(&mut rng, 3);
    let xa = Array::new(&[3, DX], x).unwrap();
    let target = common::random_array(&mut rng, &[3, DX], -1.0, 1.0);
    let mut m = nlc(9);
    let model = m.clone();
    let err = param_grad_error(
        &mut m.params,
        |p, t| {
            let mut mm = model.clone();
            mm.params = p.clone();
            let y = mm.forward_tape(t, &xa, &h, &[0.03, 0.05, 0.2]).unwrap();
            t.mse(y, &target).unwrap()
        },
        60,
        9,
    );
    assert!(err <= 1e-4, "worst relative error {err:e}");
}

#[test]
fn rnn_parameter_gradients_match_finite_differences() {
    let mut rng = common::rng(10);
    let (x, h) = batch(&mut rng, 3);
    let xa = Array::new(&[3, DX], x).unwrap();
    let target = common::random_array(&mut rng, &[3, DX], -1.0, 1.0);
    let mut m = rnn(10);
    let model = m.clone();
    let err = param_grad_error(
        &mut m.params,
        |p, t| {
            let mut mm = model.clone();
            mm.params = p.clone();
            let y = mm.forward_tape(t, &xa, &h, &[0.03, 0.05, 0.2]).unwrap();
            t.mse(y, &target).unwrap()
        },
        60,
        10,
    );
    assert!(err <= 1e-4, "worst relative error {err:e}");
}

#[test]
fn empty_history_is_a_contract_error() {
    let h = ActionHistory::new(DA);
    assert!(matches!(HistoryBatch::single(&h), Err(Error::Contract(_))));
    let mut b = HistoryBatch::uniform(2, 3, DA);
    b.lens[1] = 0;
    assert!(matches!(nlc(0).predict_std(&[0.0; 2 * DX], &b, 0.05), Err(Error::Contract(_))));
}

#[test]
fn non_positive_interval_is_a_domain_error() {
    let mut rng = common::rng(11);
    let (x, h) = batch(&mut rng, 2);
    let spec = EnvSpec::new(EnvKind::Cartpole);
    let oracle = OracleModel::new(spec);
    let hb = HistoryBatch::single(&history(&mut rng, 2)).unwrap();
    for delta in [0.0, -0.05, f64::NAN] {
        assert!(matches!(nlc(0).predict_std(&x, &h, delta), Err(Error::Domain(_))));
        assert!(matches!(rnn(0).predict_std(&x, &h, delta), Err(Error::Domain(_))));
        assert!(matches!(oracle.predict_batch(&[0.0; 4], &hb, delta), Err(Error::Domain(_))));
    }
}

#[test]
fn dimension_mismatch_is_reported() {
    let mut rng = common::rng(12);
    let (x, h) = batch(&mut rng, 2);
    assert!(matches!(nlc(0).predict_std(&x[..DX], &h, 0.05), Err(Error::Dimension { .. })));
}

#[test]
fn checkpoints_round_trip_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let norm = NormStats {
        state_mean: vec![0.1, -0.2, 0.3, 0.0, 1.0],
        state_std: vec![1.0, 2.0, 0.5, 0.7, 3.0],
        action_mean: vec![0.25],
        action_std: vec![1.5],
        delta_mean: 0.05,
        delta_std: 0.04,
    };
    let mut rng = common::rng(13);
    let (x, h) = batch(&mut rng, 3);
    for kind in [ModelKind::Nlc, ModelKind::Rnn] {
        let m = LearnedModel::new(kind, norm.clone(), OMEGA, 13).unwrap();
        let path = dir.path().join(format!("{kind}.ckpt"));
        m.save(&path).unwrap();
        let back = LearnedModel::load(&path).unwrap();
        assert_eq!(back.kind(), kind);
        let a = m.as_dynamics().predict_batch(&x, &h, 0.06).unwrap();
        let b = back.as_dynamics().predict_batch(&x, &h, 0.06).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn oracle_cannot_be_instantiated_as_learned_model() {
    assert!(LearnedModel::new(ModelKind::Oracle, NormStats::identity(DX, DA), OMEGA, 0).is_err());
}

#[test]
fn same_seed_same_model() {
    assert_eq!(nlc(21).params, nlc(21).params);
    assert_ne!(nlc(21).params, nlc(22).params);
    let mut rng = common::rng(14);
    let (x, h) = batch(&mut rng, 2);
    assert_eq!(rnn(3).predict_std(&x, &h, 0.05).unwrap(), rnn(3).predict_std(&x, &h, 0.05).unwrap());
}

#[test]
fn model_kind_parses() {
    assert_eq!("NLC".parse::<ModelKind>().unwrap(), ModelKind::Nlc);
    assert_eq!("dt-rnn".parse::<ModelKind>().unwrap(), ModelKind::Rnn);
    assert!("gp".parse::<ModelKind>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nlc_outputs_stay_finite(seed in 0u64..1000, delta in 1e-4f64..20.0, len in 1usize..=MAX_HISTORY) {
        let mut rng = common::rng(seed);
        let m = nlc(seed % 3);
        let x: Vec<f64> = (0..DX).map(|_| rng.gen_range(-4.0..4.0)).collect();
        let y = m.predict_std(&x, &HistoryBatch::single(&history(&mut rng, len)).unwrap(), delta).unwrap();
        prop_assert!(y.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn canonical_histories_are_sorted(times in proptest::collection::vec(-0.2f64..0.0, 1..12)) {
        let mut h = ActionHistory::new(1);
        for (i, &t) in times.iter().enumerate() {
            h.push(t, &[i as f64]);
        }
        h.canonicalize();
        prop_assert!(h.rel_times.windows(2).all(|w| w[0] <= w[1]));
        let mut ids: Vec<f64> = h.actions.clone();
        ids.sort_by(f64::total_cmp);
        prop_assert_eq!(ids, (0..times.len()).map(|i| i as f64).collect::<Vec<_>>());
    }
}
