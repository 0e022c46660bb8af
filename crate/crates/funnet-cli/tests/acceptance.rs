//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Run with `cargo test -p funnet-cli --test acceptance -- --nocapture` to
//! see every line; the heavy desk-scale criteria take a few minutes total.

use funnet::basis::BasisSpec;
use funnet::curves::{
    extract_windows, integrate, inner_product, label_curves, window_count, Curve, Grid, Label,
    LabeledSample, MultiCurve,
};
use funnet::datagen::{gen_dataset1, generate, SimConfig, SimDataset};
use funnet::engine::{gradient_check, LayerSpec, Model, ModelSpec, Prediction};
use funnet::knn::{knn_sweep_with, KnnPrep};
use funnet::layers::{standardize, ActivationKind, FuncConvParams};
use funnet::smoothing::{convolve_interior, lle_fit_at, lle_filter, LLEConfig};
use funnet_cli::config::ExperimentConfig;
use funnet_cli::experiments::{run_simulation, run_stream};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn report(criterion: &str, passed: bool, detail: String) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
}

fn sim_config(experiment: &str, n_samples: usize, trials: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.set("experiment", experiment).unwrap();
    cfg.set("n_samples", &n_samples.to_string()).unwrap();
    cfg.set("trials", &trials.to_string()).unwrap();
    cfg
}

/// Criterion 1: data set (II), N=1000, 10 trials. FNN mean >= 0.97, best-k
/// KNN mean in [0.70, 0.90], FNN-KNN gap >= 0.10.
#[test]
fn criterion_01_table1_dataset2() {
    let out = run_simulation(&sim_config("sim2", 1000, 10)).unwrap();
    let gap = out.fnn_mean - out.knn_best_mean;
    let passed = out.fnn_mean >= 0.97
        && (0.70..=0.90).contains(&out.knn_best_mean)
        && gap >= 0.10;
    report(
        "1 (Table 1, data set II)",
        passed,
        format!(
            "fnn mean {:.4}, knn best k={} mean {:.4}, gap {:.4}",
            out.fnn_mean, out.knn_best_k, out.knn_best_mean, gap
        ),
    );
}

/// Criterion 2: data set (I), N=1000, 10 trials. FNN mean >= 0.97, best-k
/// KNN mean in [0.89, 0.97].
#[test]
fn criterion_02_table1_dataset1() {
    let out = run_simulation(&sim_config("sim1", 1000, 10)).unwrap();
    let passed = out.fnn_mean >= 0.97 && (0.89..=0.97).contains(&out.knn_best_mean);
    report(
        "2 (Table 1, data set I)",
        passed,
        format!(
            "fnn mean {:.4}, knn best k={} mean {:.4}",
            out.fnn_mean, out.knn_best_k, out.knn_best_mean
        ),
    );
}

/// Criterion 3: data set (I) KNN improves from N=1000 to N=5000, 10 trials
/// each.
#[test]
fn criterion_03_knn_monotone_trend() {
    let lle = LLEConfig::local_linear_default();
    let prep = KnnPrep::smoothing_only(lle);
    let ks: Vec<usize> = (1..=19).collect();
    let best_mean = |n: usize| -> f64 {
        let per_trial: Vec<Vec<f64>> = (0..10u64)
            .map(|trial| {
                let data =
                    generate(&SimConfig::new(SimDataset::One, n, 250, 100 + trial)).unwrap();
                let split = n * 4 / 5;
                let (tr, te) = data.split_at(split);
                knn_sweep_with(tr, te, &prep, &ks)
                    .unwrap()
                    .into_iter()
                    .map(|(_, a)| a)
                    .collect()
            })
            .collect();
        (0..ks.len())
            .map(|ki| per_trial.iter().map(|t| t[ki]).sum::<f64>() / per_trial.len() as f64)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let small = best_mean(1000);
    let large = best_mean(5000);
    report(
        "3 (KNN trend in N)",
        large > small,
        format!("best-k mean accuracy: N=1000 {small:.4}, N=5000 {large:.4}"),
    );
}

fn gradcheck_sample(t_len: usize, seed: u64, functional: bool) -> LabeledSample {
    let data = gen_dataset1(&SimConfig::new(SimDataset::One, 1, t_len, seed))
        .unwrap()
        .remove(0);
    if !functional {
        return data;
    }
    let Label::Class(c) = data.label else { unreachable!() };
    LabeledSample::new(data.data, Label::Curves(label_curves(&vec![c; t_len], 3).unwrap()))
        .unwrap()
}

/// Criterion 4: analytic vs central-difference gradients (step 1e-5) within
/// relative error 1e-4 for each layer type and the full scalar architecture,
/// over >= 100 coefficients and 5 seeds.
#[test]
fn criterion_04_gradient_correctness() {
    let t_len = 50usize;
    let basis = BasisSpec::legendre(5, (0.0, 1.0)).unwrap();
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let mut checks: Vec<(Model, LabeledSample)> = vec![
            (
                Model::new(
                    2,
                    vec![LayerSpec::FuncConv {
                        in_channels: 2,
                        out_channels: 3,
                        filter_len: 9,
                        basis,
                        activation: ActivationKind::Softmax,
                    }],
                )
                .unwrap(),
                gradcheck_sample(t_len, seed, true),
            ),
            (
                Model::new(
                    2,
                    vec![LayerSpec::FuncDenseFunctional {
                        in_channels: 2,
                        out_channels: 3,
                        basis,
                        activation: ActivationKind::Softmax,
                    }],
                )
                .unwrap(),
                gradcheck_sample(t_len, seed, true),
            ),
            (
                Model::new(
                    2,
                    vec![LayerSpec::FuncDenseScalar {
                        in_channels: 2,
                        out_neurons: 3,
                        basis,
                        activation: ActivationKind::Softmax,
                    }],
                )
                .unwrap(),
                gradcheck_sample(t_len, seed, false),
            ),
            (
                Model::scalar_classifier(2, 3, &ModelSpec::default()).unwrap(),
                gradcheck_sample(t_len, seed, false),
            ),
        ];
        for (model, sample) in checks.iter_mut() {
            model.init_params_seeded(seed, t_len);
            let rep = gradient_check(model, sample, 1e-4, 120, seed).unwrap();
            worst = worst.max(rep.max_rel_error);
            assert!(
                rep.passed,
                "seed {seed}: max relative error {:.3e}",
                rep.max_rel_error
            );
            assert!(rep.entries.len() >= 100);
        }
    }
    report(
        "4 (gradient correctness)",
        worst <= 1e-4,
        format!("max relative error over all checks {worst:.3e} (tolerance 1e-4)"),
    );
}

/// Criterion 5: shift equivariance of the functional convolution within
/// 1e-10 away from the boundaries.
#[test]
fn criterion_05_shift_equivariance() {
    let t_len = 200usize;
    let filter_len = 25usize;
    let radius = filter_len / 2;
    let shift = 10usize;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let basis = BasisSpec::legendre(5, (0.0, 1.0)).unwrap();
    let mut params =
        FuncConvParams::zeros(1, 4, filter_len, basis, ActivationKind::Identity).unwrap();
    for c in params.filter_coeffs.iter_mut() {
        *c = rng.random_range(-1.0..1.0);
    }
    let base: Vec<f64> = (0..t_len).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut shifted = vec![0.0; t_len];
    shifted[shift..].copy_from_slice(&base[..t_len - shift]);
    let grid = Grid::new(t_len).unwrap();
    let out_base = funnet::layers::func_conv_forward(
        &MultiCurve::from_values(grid, vec![base]).unwrap(),
        &params,
    )
    .unwrap();
    let out_shift = funnet::layers::func_conv_forward(
        &MultiCurve::from_values(grid, vec![shifted]).unwrap(),
        &params,
    )
    .unwrap();
    let mut max_err: f64 = 0.0;
    for k in 0..4 {
        for s in radius + shift..t_len - radius - shift {
            let err =
                (out_shift.channel(k).values()[s] - out_base.channel(k).values()[s - shift]).abs();
            max_err = max_err.max(err);
        }
    }
    report(
        "5 (shift equivariance)",
        max_err <= 1e-10,
        format!("max deviation {max_err:.3e} (tolerance 1e-10)"),
    );
}

fn legendre_closed(i: usize, x: f64) -> f64 {
    match i {
        0 => 1.0,
        1 => x,
        2 => 0.5 * (3.0 * x * x - 1.0),
        3 => 0.5 * (5.0 * x.powi(3) - 3.0 * x),
        4 => 0.125 * (35.0 * x.powi(4) - 30.0 * x * x + 3.0),
        _ => unreachable!(),
    }
}

/// Criterion 6: oracle equivalences. (a) convolution vs naive double loop at
/// T=50 within 1e-12; (b) smoothing filter vs per-point WLS within 1e-12 on
/// the interior; (c) noiseless degree-1 polynomials reproduced within 1e-9.
#[test]
fn criterion_06_oracle_equivalences() {
    // (a) functional convolution against an independent double summation
    let t_len = 50usize;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let basis = BasisSpec::legendre(5, (0.0, 1.0)).unwrap();
    let mut params = FuncConvParams::zeros(2, 3, 9, basis, ActivationKind::Identity).unwrap();
    for c in params.filter_coeffs.iter_mut() {
        *c = rng.random_range(-1.0..1.0);
    }
    for c in params.bias_coeffs.iter_mut() {
        *c = rng.random_range(-1.0..1.0);
    }
    let grid = Grid::new(t_len).unwrap();
    let input = MultiCurve::from_values(
        grid,
        (0..2)
            .map(|_| (0..t_len).map(|_| rng.random_range(-1.5..1.5)).collect())
            .collect(),
    )
    .unwrap();
    let out = funnet::layers::func_conv_forward(&input, &params).unwrap();
    let radius = 4i64;
    let q1 = 5usize;
    let mut conv_err: f64 = 0.0;
    for k in 0..3 {
        for s in 0..t_len {
            let xs = (s + 1) as f64 / t_len as f64;
            let mut acc: f64 = (0..q1)
                .map(|i| params.bias_coeffs[k * q1 + i] * legendre_closed(i, 2.0 * xs - 1.0))
                .sum();
            for j in 0..2 {
                let coeffs = &params.filter_coeffs[(j * 3 + k) * q1..][..q1];
                for t in 0..t_len {
                    let delta = s as i64 - t as i64;
                    if delta.abs() > radius {
                        continue;
                    }
                    let u: f64 = (0..q1)
                        .map(|i| coeffs[i] * legendre_closed(i, delta as f64 / radius as f64))
                        .sum();
                    acc += u * input.channel(j).values()[t] / t_len as f64;
                }
            }
            conv_err = conv_err.max((out.channel(k).values()[s] - acc).abs());
        }
    }

    // (b) interior filter convolution equals the per-point WLS fit
    let cfg = LLEConfig::local_linear_default();
    let t2 = 150usize;
    let sig = Curve::new(
        Grid::new(t2).unwrap(),
        (0..t2).map(|_| rng.random_range(-2.0..2.0)).collect(),
    )
    .unwrap();
    let mut filt_err: f64 = 0.0;
    for order in 0..=1usize {
        let h = cfg.bandwidths[order];
        let filt = lle_filter(&cfg, order, t2).unwrap();
        let conv = convolve_interior(sig.values(), &filt);
        for idx in h..t2 - h {
            let fit = lle_fit_at(&sig, idx, &cfg, order).unwrap();
            filt_err = filt_err.max((conv[idx] - fit).abs());
        }
    }

    // (c) local linear smoothing reproduces lines
    let t3 = 120usize;
    let line = Curve::from_fn(Grid::new(t3).unwrap(), |x| -1.3 * x + 0.7).unwrap();
    let mut poly_err: f64 = 0.0;
    for idx in 0..t3 {
        let x = (idx + 1) as f64 / t3 as f64;
        let fit = lle_fit_at(&line, idx, &cfg, 0).unwrap();
        poly_err = poly_err.max((fit - (-1.3 * x + 0.7)).abs());
    }

    let passed = conv_err <= 1e-12 && filt_err <= 1e-12 && poly_err <= 1e-9;
    report(
        "6 (oracle equivalences)",
        passed,
        format!(
            "conv vs double loop {conv_err:.3e} (<=1e-12), filter vs WLS {filt_err:.3e} (<=1e-12), line reproduction {poly_err:.3e} (<=1e-9)"
        ),
    );
}

/// Criterion 7: standardized channels have |mean| <= 1e-10 and norm within
/// 1e-10 of 1; constant channels raise the degenerate-channel error.
#[test]
fn criterion_07_standardization_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let grid = Grid::new(250).unwrap();
    let mut worst_mean: f64 = 0.0;
    let mut worst_norm: f64 = 0.0;
    for _ in 0..50 {
        let mc = MultiCurve::from_values(
            grid,
            (0..3)
                .map(|_| (0..250).map(|_| rng.random_range(-5.0..5.0)).collect())
                .collect(),
        )
        .unwrap();
        let out = standardize(&mc).unwrap();
        for ch in out.channels() {
            worst_mean = worst_mean.max(integrate(ch).abs());
            worst_norm = worst_norm.max((inner_product(ch, ch).unwrap().sqrt() - 1.0).abs());
        }
    }
    let constant = MultiCurve::from_values(grid, vec![vec![2.5; 250]]).unwrap();
    let degenerate_err = matches!(
        standardize(&constant),
        Err(funnet::Error::DegenerateChannel { .. })
    );
    let passed = worst_mean <= 1e-10 && worst_norm <= 1e-10 && degenerate_err;
    report(
        "7 (standardization contract)",
        passed,
        format!(
            "max |mean| {worst_mean:.3e}, max |norm-1| {worst_norm:.3e}, constant rejected: {degenerate_err}"
        ),
    );
}

/// Criterion 8: functional-output head. Probability curves sum to one at
/// every grid point within 1e-12, and the synthetic transition fixture
/// reaches interior per-timepoint accuracy >= 0.8.
#[test]
fn criterion_08_functional_head() {
    // pointwise simplex output
    let mut model = Model::functional_classifier(2, 3, &ModelSpec::default()).unwrap();
    model.init_params_seeded(3, 250);
    let sample = gen_dataset1(&SimConfig::new(SimDataset::One, 1, 250, 3))
        .unwrap()
        .remove(0);
    let mut sum_err: f64 = 0.0;
    match model.forward(&sample.data).unwrap() {
        Prediction::Curves(curves) => {
            for t in 0..curves.len() {
                let s: f64 = curves.channels().iter().map(|c| c.values()[t]).sum();
                sum_err = sum_err.max((s - 1.0).abs());
            }
        }
        _ => unreachable!(),
    }

    // transition fixture
    let mut cfg = ExperimentConfig::default();
    cfg.set("experiment", "stream").unwrap();
    cfg.set("model.head", "functional").unwrap();
    cfg.set("train.epochs", "15").unwrap();
    let out = run_stream(&cfg).unwrap();
    let interior = out.interior_accuracy.unwrap();

    let passed = sum_err <= 1e-12 && interior >= 0.8;
    report(
        "8 (functional-output head)",
        passed,
        format!(
            "max |pointwise sum - 1| {sum_err:.3e} (<=1e-12), interior per-timepoint accuracy {interior:.4} (>=0.8)"
        ),
    );
}

/// Criterion 9: 45 minutes at 250 Hz with 1 s windows and 0.016 s steps
/// yields more than 125,000 sliding windows.
#[test]
fn criterion_09_window_count() {
    let len = 250 * 60 * 45;
    let count = window_count(len, 250, 4);
    let grid = Grid::new(len).unwrap();
    let rec = MultiCurve::from_values(grid, vec![(0..len).map(|t| t as f64).collect()]).unwrap();
    let iter_count = extract_windows(&rec, 250, 4).unwrap().len();
    let passed = count > 125_000 && iter_count == count && count == 168_688;
    report(
        "9 (window count)",
        passed,
        format!("{count} windows (> 125000), iterator agrees: {}", iter_count == count),
    );
}

/// Criterion 10: experiments re-run from their manifest reproduce all output
/// files byte for byte.
#[test]
fn criterion_10_determinism() {
    let mut cfg = sim_config("sim2", 120, 2);
    cfg.set("t_len", "100").unwrap();
    cfg.set("train.epochs", "2").unwrap();
    let a = run_simulation(&cfg).unwrap();
    let b = run_simulation(&cfg).unwrap();
    let rerun_same = a.results_csv == b.results_csv
        && a.knn_sweep_csv == b.knn_sweep_csv
        && a.history_csv == b.history_csv
        && a.confusion_csv == b.confusion_csv
        && a.metrics_csv == b.metrics_csv
        && a.manifest == b.manifest;

    // re-run from the emitted manifest text
    let mut from_manifest = ExperimentConfig::default();
    from_manifest
        .apply_file(a.manifest.as_str())
        .expect("manifest is a valid config");
    let c = run_simulation(&from_manifest).unwrap();
    let manifest_same = a.results_csv == c.results_csv
        && a.history_csv == c.history_csv
        && a.manifest == c.manifest;

    // stream and export determinism on a small fixture
    let mut scfg = ExperimentConfig::default();
    scfg.set("experiment", "stream").unwrap();
    scfg.set("model.head", "functional").unwrap();
    scfg.set("stream.total_len", "3000").unwrap();
    scfg.set("train.epochs", "1").unwrap();
    let s1 = run_stream(&scfg).unwrap();
    let s2 = run_stream(&scfg).unwrap();
    let stream_same = s1.metrics_csv == s2.metrics_csv
        && s1.history_csv == s2.history_csv
        && s1.pred_curves_csv == s2.pred_curves_csv
        && s1.confusion_csv == s2.confusion_csv;

    let dir1 = tempfile::tempdir().unwrap();
    let dir2 = tempfile::tempdir().unwrap();
    funnet_cli::run_export(&cfg, dir1.path()).unwrap();
    funnet_cli::run_export(&cfg, dir2.path()).unwrap();
    let export_same = ["dataset.csv", "class_examples.csv", "manifest.txt"]
        .iter()
        .all(|f| {
            std::fs::read(dir1.path().join(f)).unwrap()
                == std::fs::read(dir2.path().join(f)).unwrap()
        });

    let passed = rerun_same && manifest_same && stream_same && export_same;
    report(
        "10 (determinism)",
        passed,
        format!(
            "re-run identical: {rerun_same}, manifest re-run identical: {manifest_same}, stream identical: {stream_same}, export identical: {export_same}"
        ),
    );
}
