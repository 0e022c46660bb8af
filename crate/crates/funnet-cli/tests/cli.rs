//! Integration tests for the experiment runner: config handling, error
//! reporting and the stream pipeline on external recordings.

use funnet::curves::{Grid, MultiCurve};
use funnet_cli::config::ExperimentConfig;
use funnet_cli::experiments::{manifest_string, run_gradcheck, run_simulation, run_stream};

fn small_sim() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.set("experiment", "sim2").unwrap();
    cfg.set("n_samples", "120").unwrap();
    cfg.set("t_len", "100").unwrap();
    cfg.set("trials", "2").unwrap();
    cfg.set("train.epochs", "2").unwrap();
    cfg
}

#[test]
fn simulation_aggregate_matches_per_trial_history() {
    let out = run_simulation(&small_sim()).unwrap();
    // self-consistency: fnn mean equals the mean of the per-trial test rows
    let test_accs: Vec<f64> = out
        .history_csv
        .lines()
        .filter(|l| l.contains(",test,"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(test_accs.len(), 2);
    let mean = test_accs.iter().sum::<f64>() / test_accs.len() as f64;
    assert!((mean - out.fnn_mean).abs() < 1e-15);
}

#[test]
fn results_csv_has_documented_schema() {
    let out = run_simulation(&small_sim()).unwrap();
    let mut lines = out.results_csv.lines();
    assert_eq!(lines.next(), Some("method,k_or_model,mean_acc,std_acc"));
    let fnn = lines.next().unwrap();
    assert!(fnn.starts_with("fnn,conv20;10,"));
    let knn = lines.next().unwrap();
    assert!(knn.starts_with("knn,k="));
    assert_eq!(out.knn_sweep.len(), 19);
}

#[test]
fn manifest_contains_hash_and_version() {
    let cfg = small_sim();
    let m = manifest_string(&cfg);
    assert!(m.contains("manifest.version = "));
    assert!(m.contains("manifest.config_hash = "));
    // the hash line is 64 hex chars
    let hash = m
        .lines()
        .find(|l| l.starts_with("manifest.config_hash"))
        .unwrap()
        .rsplit(' ')
        .next()
        .unwrap();
    assert_eq!(hash.len(), 64);
}

#[test]
fn invalid_config_reports_field_path() {
    let mut cfg = ExperimentConfig::default();
    let err = cfg.set("train.lr", "fast").unwrap_err();
    assert!(err.to_string().contains("train.lr"));

    cfg.set("knn.k_min", "7").unwrap();
    cfg.set("knn.k_max", "3").unwrap();
    let err = cfg.validate().unwrap_err();
    assert!(err.to_string().contains("knn.k_min"));
}

#[test]
fn stream_requires_label_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.csv");
    let grid = Grid::new(600).unwrap();
    let rec = MultiCurve::from_values(
        grid,
        vec![(0..600).map(|t| (t as f64 * 0.1).sin()).collect()],
    )
    .unwrap();
    funnet::io::write_recording_csv(&path, &rec, None).unwrap();

    let mut cfg = ExperimentConfig::default();
    cfg.set("experiment", "stream").unwrap();
    cfg.set("stream.data", path.to_str().unwrap()).unwrap();
    let err = match run_stream(&cfg) {
        Err(e) => e,
        Ok(_) => panic!("stream without labels should fail"),
    };
    assert!(err.to_string().contains("label"), "{err}");
}

#[test]
fn stream_runs_on_external_recording_with_scalar_head() {
    // two-class recording whose channels swap sign structure per segment
    let len = 4000usize;
    let mut labels = Vec::with_capacity(len);
    let mut ch1 = Vec::with_capacity(len);
    let mut ch2 = Vec::with_capacity(len);
    for t in 0..len {
        let class = 1 + (t / 500) % 2;
        labels.push(class);
        let x = t as f64 / 250.0;
        let fast = (2.0 * std::f64::consts::PI * 20.0 * x).sin();
        let slow = (2.0 * std::f64::consts::PI * 9.0 * x).sin();
        if class == 1 {
            ch1.push(slow + 0.05 * fast);
            ch2.push(slow);
        } else {
            ch1.push(fast);
            ch2.push(0.3 * slow + fast);
        }
    }
    let rec = MultiCurve::from_values(Grid::new(len).unwrap(), vec![ch1, ch2]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rec.csv");
    funnet::io::write_recording_csv(&path, &rec, Some(&labels)).unwrap();

    let mut cfg = ExperimentConfig::default();
    cfg.set("experiment", "stream").unwrap();
    cfg.set("model.head", "scalar").unwrap();
    cfg.set("stream.data", path.to_str().unwrap()).unwrap();
    cfg.set("stream.window_len", "250").unwrap();
    cfg.set("stream.step", "125").unwrap();
    cfg.set("model.conv_filters", "6;4").unwrap();
    cfg.set("train.epochs", "10").unwrap();
    let out = run_stream(&cfg).unwrap();
    assert_eq!(out.window_count, (4000 - 250) / 125 + 1);
    assert!(out.interior_accuracy.is_none());
    assert!(
        out.test_accuracy >= 0.6,
        "scalar stream accuracy {}",
        out.test_accuracy
    );
    assert!(out.metrics_csv.contains("accuracy,"));
}

#[test]
fn gradcheck_runner_passes_for_both_heads() {
    let mut cfg = ExperimentConfig::default();
    cfg.set("experiment", "sim1").unwrap();
    cfg.set("t_len", "50").unwrap();
    let (report, summary) = run_gradcheck(&cfg, 1e-4, 80).unwrap();
    assert!(report.passed, "{summary}");

    cfg.set("model.head", "functional").unwrap();
    let (report, summary) = run_gradcheck(&cfg, 1e-4, 80).unwrap();
    assert!(report.passed, "{summary}");
}

#[test]
fn flag_style_overrides_win_over_file() {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_file("seed = 7\ntrain.epochs = 9\n").unwrap();
    // simulating a CLI override
    cfg.set("seed", "11").unwrap();
    assert_eq!(cfg.seed, 11);
    assert_eq!(cfg.epochs, 9);
}
