mod common;

use common::*;
use stockcast::harness::{weekly_windows, Forecaster, Mode};
use stockcast::lstm::{
    adam_step, forward_sequence, grad_check, loss_and_grad, lstm_cell, train_lstm, AdamState, LstmModel, LstmParams,
    LstmState, TrainConfig, INPUT_WIDTH,
};
use stockcast::rng::SplitMix64;

fn sig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Straight-line cell: gates stacked i, f, o, g; row r of W/U/b belongs to
/// gate r / H, unit r % H.
fn oracle_cell(p: &LstmParams<f64>, x: &[f64], h: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (d, hd) = (p.input, p.hidden);
    let w = &p.flat[p.w_range()];
    let u = &p.flat[p.u_range()];
    let b = &p.flat[p.b_range()];
    let pre = |gate: usize, j: usize| {
        let r = gate * hd + j;
        let mut z = b[r];
        for k in 0..d {
            z += w[r * d + k] * x[k];
        }
        for k in 0..hd {
            z += u[r * hd + k] * h[k];
        }
        z
    };
    let mut h2 = vec![0.0; hd];
    let mut c2 = vec![0.0; hd];
    for j in 0..hd {
        let i = sig(pre(0, j));
        let f = sig(pre(1, j));
        let o = sig(pre(2, j));
        let g = pre(3, j).tanh();
        c2[j] = f * c[j] + i * g;
        h2[j] = o * c2[j].tanh();
    }
    (h2, c2)
}

fn oracle_forward(p: &LstmParams<f64>, window: &[Vec<f64>]) -> Vec<f64> {
    let (mut h, mut c) = (vec![0.0; p.hidden], vec![0.0; p.hidden]);
    for x in window {
        (h, c) = oracle_cell(p, x, &h, &c);
    }
    let v = &p.flat[p.v_range()];
    let bias = &p.flat[p.c_range()];
    (0..p.outputs).map(|k| bias[k] + (0..p.hidden).map(|j| v[k * p.hidden + j] * h[j]).sum::<f64>()).collect()
}

fn random_params(input: usize, hidden: usize, outputs: usize, seed: u64) -> LstmParams<f64> {
    let mut p = LstmParams::zeros(input, hidden, outputs);
    let mut rng = SplitMix64::new(seed);
    p.flat.iter_mut().for_each(|v| *v = rng.uniform(-0.8, 0.8));
    p
}

fn random_window(len: usize, width: usize, rng: &mut SplitMix64) -> Vec<Vec<f64>> {
    (0..len).map(|_| (0..width).map(|_| rng.normal()).collect()).collect()
}

#[test]
fn cell_matches_oracle() {
    let mut rng = SplitMix64::new(1);
    for seed in 0..20 {
        let p = random_params(4, 3, 2, seed);
        let x: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let state = LstmState { h: (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect(), c: (0..3).map(|_| rng.normal()).collect() };
        let got = lstm_cell(&p, &x, &state).unwrap();
        let (h, c) = oracle_cell(&p, &x, &state.h, &state.c);
        for (a, b) in got.h.iter().zip(&h).chain(got.c.iter().zip(&c)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn forward_matches_oracle() {
    let mut rng = SplitMix64::new(2);
    for (len, seed) in [(1, 3), (4, 4), (10, 5)] {
        let p = random_params(INPUT_WIDTH, 6, 5, seed);
        let window = random_window(len, INPUT_WIDTH, &mut rng);
        let got = forward_sequence(&p, &window).unwrap();
        for (a, b) in got.iter().zip(oracle_forward(&p, &window)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn saturated_forget_gate_keeps_cell() {
    let mut p = random_params(3, 4, 1, 7);
    let b = p.b_range();
    for j in 0..4 {
        p.flat[b.start + 4 + j] = 50.0;
    }
    // zero the forget gate's input and recurrent weights so the bias alone drives it
    let (w, u) = (p.w_range(), p.u_range());
    for j in 0..4 {
        p.flat[w.start + (4 + j) * 3..w.start + (5 + j) * 3].fill(0.0);
        p.flat[u.start + (4 + j) * 4..u.start + (5 + j) * 4].fill(0.0);
    }
    let x = [0.4, -1.1, 2.0];
    let state = LstmState { h: vec![0.1, -0.2, 0.3, 0.0], c: vec![1.5, -0.7, 0.2, 3.0] };
    let next = lstm_cell(&p, &x, &state).unwrap();
    let (bw, bu, bb) = (&p.flat[w.clone()], &p.flat[u.clone()], &p.flat[b.clone()]);
    for j in 0..4 {
        let pre = |gate: usize| {
            let r = gate * 4 + j;
            bb[r] + (0..3).map(|k| bw[r * 3 + k] * x[k]).sum::<f64>() + (0..4).map(|k| bu[r * 4 + k] * state.h[k]).sum::<f64>()
        };
        let expect = state.c[j] + sig(pre(0)) * pre(3).tanh();
        assert!((next.c[j] - expect).abs() < 1e-9);
    }
}

#[test]
fn zero_weights_give_zero_output() {
    let p = LstmParams::<f64>::zeros(INPUT_WIDTH, 8, 5);
    let window = random_window(10, INPUT_WIDTH, &mut SplitMix64::new(3));
    assert_eq!(forward_sequence(&p, &window).unwrap(), vec![0.0; 5]);
}

#[test]
fn gradient_check_on_random_instances() {
    let mut rng = SplitMix64::new(4);
    for i in 0..20 {
        let p = random_params(5, 4, 3, 100 + i);
        let window = random_window(6, 5, &mut rng);
        let target: Vec<f64> = (0..3).map(|_| rng.normal()).collect();
        let gc = grad_check(&p, &window, &target, 60, i).unwrap();
        assert!(gc.checked > 30, "instance {i}: {gc:?}");
        assert!(gc.max_relative_error < 1e-4, "instance {i}: {gc:?}");
    }
}

#[test]
fn gradient_check_skips_exact_fit() {
    let p = random_params(3, 2, 2, 9);
    let window = random_window(3, 3, &mut SplitMix64::new(5));
    let out = forward_sequence(&p, &window).unwrap();
    let gc = grad_check(&p, &window, &out, 10, 0).unwrap();
    assert_eq!((gc.checked, gc.skipped), (0, 10));
}

#[test]
fn adam_examples() {
    let cfg = TrainConfig { learning_rate: 0.001, ..TrainConfig::default() };
    let mut p = vec![0.5f64, -0.25];
    let mut st = AdamState::new(2);
    adam_step(&mut p, &[0.0, 0.0], &mut st, &cfg, None).unwrap();
    assert_eq!(p, vec![0.5, -0.25]);

    let mut p = vec![0.0f64];
    let mut st = AdamState::new(1);
    adam_step(&mut p, &[1.0], &mut st, &cfg, None).unwrap();
    assert!((p[0] + 0.001 / (1.0 + 1e-8)).abs() < 1e-15);

    let mut p = vec![0.0f64, 0.0];
    let mut st = AdamState::new(2);
    let mut last = vec![0.0, 0.0];
    for _ in 0..500 {
        last = p.clone();
        adam_step(&mut p, &[3.0, -0.02], &mut st, &cfg, None).unwrap();
    }
    assert!((p[0] - last[0] + 0.001).abs() < 1e-9);
    assert!((p[1] - last[1] - 0.001).abs() < 1e-9);
}

#[test]
fn adam_cap_limits_update_norm() {
    let cfg = TrainConfig::default();
    let mut p = vec![0.0f64; 100];
    let mut st = AdamState::new(100);
    let norm = adam_step(&mut p, &vec![1.0; 100], &mut st, &cfg, Some(0.05)).unwrap();
    assert!((norm - 0.05).abs() < 1e-12);
    assert!((p.iter().map(|v| v * v).sum::<f64>().sqrt() - 0.05).abs() < 1e-12);
    assert!(adam_step(&mut p, &[f64::NAN; 100], &mut st, &cfg, None).is_err());
}

#[test]
fn learns_a_sine_continuation() {
    let cfg = TrainConfig { learning_rate: 0.02, ..TrainConfig::default() };
    let mut rng = SplitMix64::new(6);
    let samples: Vec<(Vec<Vec<f64>>, Vec<f64>)> = (0..40)
        .map(|_| {
            let phase = rng.uniform(0.0, 6.3);
            let s = |t: usize| (0.4 * t as f64 + phase).sin();
            ((0..8).map(|t| vec![s(t)]).collect(), (8..10).map(s).collect())
        })
        .collect();
    let mut p = LstmParams::<f64>::init(1, 8, 2, 1);
    let mut st = AdamState::new(p.flat.len());
    let mean_loss = |p: &LstmParams<f64>| samples.iter().map(|(w, y)| loss_and_grad(p, w, y).unwrap().0).sum::<f64>() / 40.0;
    let start = mean_loss(&p);
    for _ in 0..300 {
        let mut g = vec![0.0; p.flat.len()];
        for (w, y) in &samples {
            let (_, gi) = loss_and_grad(&p, w, y).unwrap();
            g.iter_mut().zip(gi).for_each(|(a, b)| *a += b / 40.0);
        }
        adam_step(&mut p.flat, &g, &mut st, &cfg, None).unwrap();
    }
    let end = mean_loss(&p);
    assert!(end < 0.25 * start, "{start} -> {end}");
}

fn short_config() -> TrainConfig {
    TrainConfig { epochs: 3, hidden: 6, batch_size: 20, ..TrainConfig::default() }
}

#[test]
fn training_is_deterministic_and_persists() {
    let frame = random_frame(160, 11);
    let a = train_lstm(&short_config(), &frame, 0..120, Mode::Contemporaneous).unwrap();
    let b = train_lstm(&short_config(), &frame, 0..120, Mode::Contemporaneous).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.loss_curve, b.loss_curve);
    assert_eq!(a.loss_curve.len(), 3);
    assert!(a.max_update_norm <= short_config().learning_rate * short_config().clip + 1e-12);
    let back = LstmModel::from_json(&a.model.to_json().unwrap()).unwrap();
    assert_eq!(back, a.model);
    assert_eq!(back.forecast(&frame, 130).unwrap(), a.model.forecast(&frame, 130).unwrap());
    let other = train_lstm(&TrainConfig { seed: 1, ..short_config() }, &frame, 0..120, Mode::Contemporaneous).unwrap();
    assert_ne!(other.model.params, a.model.params);
}

#[test]
fn zero_params_forecast_training_mean() {
    let frame = random_frame(100, 12);
    let mut m = train_lstm(&short_config(), &frame, 0..80, Mode::Lagged).unwrap().model;
    m.params.flat.fill(0.0);
    let mean = frame.rows()[..80].iter().map(|r| r.close_norm).sum::<f64>() / 80.0;
    for v in m.forecast(&frame, 85).unwrap() {
        assert!((v - mean).abs() < 1e-12);
    }
}

#[test]
fn lagged_forecasts_ignore_the_future() {
    let frame = random_frame(140, 13);
    let m = train_lstm(&short_config(), &frame, 0..100, Mode::Lagged).unwrap().model;
    assert!(m.predict_window(&frame, Mode::Contemporaneous, &weekly_windows(100..105)[0]).is_err());
    for w in weekly_windows(20..frame.len()) {
        let base = m.predict_window(&frame, Mode::Lagged, &w).unwrap();
        let mut poked = frame.clone();
        for t in w.anchor.unwrap() + 1..poked.len() {
            for v in poked.rows_mut()[t].norms_mut() {
                *v = -*v * 3.0 + 1.0;
            }
        }
        assert_eq!(m.predict_window(&poked, Mode::Lagged, &w).unwrap(), base);
    }
}

#[test]
fn bad_config_rejected() {
    let frame = random_frame(60, 14);
    for cfg in [
        TrainConfig { epochs: 0, ..short_config() },
        TrainConfig { seq_len: 9, ..short_config() },
        TrainConfig { learning_rate: 0.0, ..short_config() },
        TrainConfig { beta1: 1.0, ..short_config() },
    ] {
        assert!(train_lstm(&cfg, &frame, 0..50, Mode::Lagged).is_err());
    }
    assert!(train_lstm(&short_config(), &frame, 0..12, Mode::Lagged).is_err());
}
