//! Experiment drivers: the Table-1-style simulation study, the
//! sliding-window stream pipeline, gradient checking and data export.
//!
//! All outputs are deterministic functions of the configuration: trials run
//! in parallel but are seeded per trial index and aggregated in index order,
//! so re-running a manifest reproduces every file byte for byte.

use crate::config::{ExperimentConfig, ExperimentKind};
use funnet::curves::{extract_windows, label_curves, majority_label, Label, LabeledSample, MultiCurve};
use funnet::datagen::{generate, gen_labeled_stream, SimConfig, SimDataset, StreamConfig};
use funnet::engine::{
    evaluate, gradient_check, train, GradCheckReport, HeadKind, Model, Prediction,
};
use funnet::error::{Error, Result};
use funnet::knn::{knn_sweep_with, KnnPrep};
use funnet::metrics::{metrics, ConfusionMatrix, Metrics};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

/// Seed decorrelation constant between data generation and training.
const TRAIN_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn manifest_string(cfg: &ExperimentConfig) -> String {
    let canonical = cfg.to_canonical_string();
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let hash = hex::encode(hasher.finalize());
    format!(
        "# funnet manifest (re-runnable as --config)\n{canonical}manifest.version = {}\nmanifest.config_hash = {hash}\n",
        funnet::VERSION
    )
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn sim_dataset(kind: ExperimentKind) -> Result<SimDataset> {
    match kind {
        ExperimentKind::Sim1 => Ok(SimDataset::One),
        ExperimentKind::Sim2 => Ok(SimDataset::Two),
        ExperimentKind::Stream => Err(Error::InvalidConfig(
            "experiment: stream config passed to the simulation runner".into(),
        )),
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

struct TrialResult {
    fnn_acc: f64,
    knn_accs: Vec<f64>,
    history_rows: Vec<(usize, String, f64, f64)>,
    confusion: ConfusionMatrix,
}

/// Aggregated simulation outputs (Table-1 style).
pub struct SimulationOutputs {
    pub fnn_mean: f64,
    pub fnn_std: f64,
    pub knn_best_k: usize,
    pub knn_best_mean: f64,
    pub knn_best_std: f64,
    pub knn_sweep: Vec<(usize, f64, f64)>,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub results_csv: String,
    pub knn_sweep_csv: String,
    pub history_csv: String,
    pub confusion_csv: String,
    pub metrics_csv: String,
    pub manifest: String,
}

impl SimulationOutputs {
    pub fn write(&self, outdir: &Path) -> Result<()> {
        write_file(outdir, "results.csv", &self.results_csv)?;
        write_file(outdir, "knn_sweep.csv", &self.knn_sweep_csv)?;
        write_file(outdir, "history.csv", &self.history_csv)?;
        write_file(outdir, "confusion.csv", &self.confusion_csv)?;
        write_file(outdir, "metrics.csv", &self.metrics_csv)?;
        write_file(outdir, "manifest.txt", &self.manifest)?;
        Ok(())
    }
}

/// Per trial: generate a fresh data set, split it, train and evaluate the
/// network, and sweep the baseline. Aggregates mean/std accuracy per method.
pub fn run_simulation(cfg: &ExperimentConfig) -> Result<SimulationOutputs> {
    cfg.validate()?;
    let dataset = sim_dataset(cfg.experiment)?;
    let spec = cfg.model_spec()?;
    let lle = cfg.lle()?;
    let k_values = cfg.k_values();
    let prep = if cfg.knn_standardize_effective() {
        KnnPrep::smoothing_and_standardization(lle.clone())
    } else {
        KnnPrep::smoothing_only(lle.clone())
    };
    if cfg.head != HeadKind::Scalar {
        return Err(Error::InvalidConfig(
            "model.head: the simulation study uses the scalar head".into(),
        ));
    }

    let trials: Vec<TrialResult> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<TrialResult> {
            let data_seed = cfg.seed.wrapping_add(trial as u64);
            let data = generate(&SimConfig::new(
                dataset,
                cfg.n_samples,
                cfg.t_len,
                data_seed,
            ))?;
            let split = ((cfg.n_samples as f64) * cfg.train_fraction).floor() as usize;
            let split = split.clamp(1, cfg.n_samples - 1);
            let (train_set, test_set) = data.split_at(split);

            let mut model = Model::scalar_classifier(2, 3, &spec)?;
            let mut train_cfg = cfg.train_config()?;
            train_cfg.seed = data_seed ^ TRAIN_SEED_SALT;
            let history = train(&mut model, train_set, &train_cfg)?;
            let (test_loss, test_acc) = evaluate(&model, test_set)?;

            let mut history_rows: Vec<(usize, String, f64, f64)> = history
                .rows
                .iter()
                .map(|r| (r.epoch, r.split.clone(), r.loss, r.accuracy))
                .collect();
            history_rows.push((cfg.epochs, "test".into(), test_loss, test_acc));

            let mut confusion = ConfusionMatrix::new(3)?;
            for s in test_set {
                let Label::Class(truth) = s.label else {
                    unreachable!("simulated labels are scalar")
                };
                if let Prediction::Classes(p) = model.forward(&s.data)? {
                    let pred = 1 + p
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                        .map(|(i, _)| i)
                        .unwrap();
                    confusion.add(truth, pred)?;
                }
            }

            let sweep = knn_sweep_with(train_set, test_set, &prep, &k_values)?;
            Ok(TrialResult {
                fnn_acc: test_acc,
                knn_accs: sweep.into_iter().map(|(_, a)| a).collect(),
                history_rows,
                confusion,
            })
        })
        .collect::<Result<_>>()?;

    let fnn_accs: Vec<f64> = trials.iter().map(|t| t.fnn_acc).collect();
    let (fnn_mean, fnn_std) = mean_std(&fnn_accs);

    let knn_sweep: Vec<(usize, f64, f64)> = k_values
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let accs: Vec<f64> = trials.iter().map(|t| t.knn_accs[ki]).collect();
            let (m, s) = mean_std(&accs);
            (k, m, s)
        })
        .collect();
    let best = knn_sweep
        .iter()
        .cloned()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
        .unwrap();

    let mut confusion = ConfusionMatrix::new(3)?;
    for t in &trials {
        confusion.merge(&t.confusion)?;
    }
    let agg_metrics = metrics(&confusion)?;

    let mut results_csv = String::from("method,k_or_model,mean_acc,std_acc\n");
    let filters = cfg
        .conv_filters
        .iter()
        .map(|f| f.to_string())
        .collect::<Vec<_>>()
        .join(";");
    writeln!(results_csv, "fnn,conv{filters},{fnn_mean},{fnn_std}").unwrap();
    writeln!(results_csv, "knn,k={},{},{}", best.0, best.1, best.2).unwrap();

    let mut knn_sweep_csv = String::from("k,mean_accuracy,std_accuracy\n");
    for (k, m, s) in &knn_sweep {
        writeln!(knn_sweep_csv, "{k},{m},{s}").unwrap();
    }

    let mut history_csv = String::from("trial,epoch,split,loss,accuracy\n");
    for (trial, t) in trials.iter().enumerate() {
        for (epoch, split, loss, acc) in &t.history_rows {
            writeln!(history_csv, "{trial},{epoch},{split},{loss},{acc}").unwrap();
        }
    }

    Ok(SimulationOutputs {
        fnn_mean,
        fnn_std,
        knn_best_k: best.0,
        knn_best_mean: best.1,
        knn_best_std: best.2,
        knn_sweep,
        confusion_csv: confusion.to_csv(),
        metrics_csv: agg_metrics.to_csv(),
        confusion,
        metrics: agg_metrics,
        results_csv,
        knn_sweep_csv,
        history_csv,
        manifest: manifest_string(cfg),
    })
}

/// Sliding-window stream outputs.
pub struct StreamOutputs {
    pub window_count: usize,
    pub test_accuracy: f64,
    /// Per-timepoint accuracy restricted to points farther than the margin
    /// from any label transition (functional head only).
    pub interior_accuracy: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub metrics: Metrics,
    pub metrics_csv: String,
    pub confusion_csv: String,
    pub history_csv: String,
    pub pred_curves_csv: String,
    pub manifest: String,
}

impl StreamOutputs {
    pub fn write(&self, outdir: &Path) -> Result<()> {
        write_file(outdir, "metrics.csv", &self.metrics_csv)?;
        write_file(outdir, "confusion.csv", &self.confusion_csv)?;
        write_file(outdir, "history.csv", &self.history_csv)?;
        write_file(outdir, "pred_curves.csv", &self.pred_curves_csv)?;
        write_file(outdir, "manifest.txt", &self.manifest)?;
        Ok(())
    }
}

fn load_stream(cfg: &ExperimentConfig) -> Result<(MultiCurve, Vec<usize>)> {
    match &cfg.stream_data {
        Some(path) => {
            let (rec, labels) = funnet::io::read_recording_csv(path)?;
            let labels = labels.ok_or_else(|| Error::Csv {
                line: 1,
                msg: "stream experiment requires a label column".into(),
            })?;
            Ok((rec, labels))
        }
        None => gen_labeled_stream(&StreamConfig {
            total_len: cfg.stream_total_len,
            segment_len: (cfg.stream_segment_min, cfg.stream_segment_max),
            samples_per_unit: cfg.stream_window_len,
            classes: cfg.stream_classes,
            noise_scale: cfg.stream_noise,
            seed: cfg.seed,
        }),
    }
}

/// Extract sliding windows from a labeled recording, train the configured
/// head and evaluate window metrics, including per-timepoint prediction
/// curves for transition windows.
pub fn run_stream(cfg: &ExperimentConfig) -> Result<StreamOutputs> {
    cfg.validate()?;
    if cfg.experiment != ExperimentKind::Stream {
        return Err(Error::InvalidConfig(
            "experiment: stream runner requires `experiment = stream`".into(),
        ));
    }
    let (rec, labels) = load_stream(cfg)?;
    let classes = *labels.iter().max().unwrap_or(&0);
    if classes < 2 {
        return Err(Error::InvalidConfig(
            "stream labels must contain at least two classes".into(),
        ));
    }
    let window_len = cfg.stream_window_len;
    let step = cfg.stream_step;
    let windows: Vec<MultiCurve> = extract_windows(&rec, window_len, step)?.collect();
    let n_windows = windows.len();

    let samples: Vec<LabeledSample> = windows
        .into_iter()
        .enumerate()
        .map(|(i, w)| {
            let off = i * step;
            let window_labels = &labels[off..off + window_len];
            let label = match cfg.head {
                HeadKind::Functional => Label::Curves(label_curves(window_labels, classes)?),
                HeadKind::Scalar => Label::Class(majority_label(window_labels, classes)?),
            };
            LabeledSample::new(w, label)
        })
        .collect::<Result<_>>()?;

    // split by time so test windows never overlap training windows
    let split = (((n_windows as f64) * cfg.train_fraction).floor() as usize)
        .clamp(1, n_windows.saturating_sub(1).max(1));
    let (train_set, test_set) = samples.split_at(split);
    if test_set.is_empty() {
        return Err(Error::InvalidConfig(
            "stream split leaves no test windows".into(),
        ));
    }

    let d = rec.num_channels();
    let spec = cfg.model_spec()?;
    let mut model = match cfg.head {
        HeadKind::Functional => Model::functional_classifier(d, classes, &spec)?,
        HeadKind::Scalar => Model::scalar_classifier(d, classes, &spec)?,
    };
    let mut train_cfg = cfg.train_config()?;
    train_cfg.seed = cfg.seed ^ TRAIN_SEED_SALT;
    let history = train(&mut model, train_set, &train_cfg)?;
    let (test_loss, test_acc) = evaluate(&model, test_set)?;

    let mut history_csv = String::from("trial,epoch,split,loss,accuracy\n");
    for r in &history.rows {
        writeln!(history_csv, "0,{},{},{},{}", r.epoch, r.split, r.loss, r.accuracy).unwrap();
    }
    writeln!(history_csv, "0,{},test,{test_loss},{test_acc}", cfg.epochs).unwrap();

    // predictions, confusion and transition curves on the test windows
    let preds: Vec<Prediction> = test_set
        .par_iter()
        .map(|s| model.forward(&s.data))
        .collect::<Result<_>>()?;

    let mut confusion = ConfusionMatrix::new(classes)?;
    let mut interior = None;
    let mut pred_curves_csv = String::new();
    match cfg.head {
        HeadKind::Scalar => {
            for (s, p) in test_set.iter().zip(&preds) {
                let (Label::Class(truth), Prediction::Classes(probs)) = (&s.label, p) else {
                    unreachable!("scalar head yields class probabilities")
                };
                let pred = 1 + argmax(probs);
                confusion.add(*truth, pred)?;
            }
            pred_curves_csv.push_str("window_offset,time_index,true_class");
            for c in 1..=classes {
                pred_curves_csv.push_str(&format!(",p{c}"));
            }
            pred_curves_csv.push('\n');
        }
        HeadKind::Functional => {
            let margin = cfg.stream_margin;
            let mut hits = 0usize;
            let mut total = 0usize;
            for (wi, p) in preds.iter().enumerate() {
                let off = (split + wi) * step;
                let Prediction::Curves(pc) = p else {
                    unreachable!("functional head yields curves")
                };
                for t in 0..window_len {
                    let truth = labels[off + t];
                    let pred = 1 + argmax_at(pc, t);
                    confusion.add(truth, pred)?;
                    let lo = (off + t).saturating_sub(margin);
                    let hi = (off + t + margin).min(labels.len() - 1);
                    if labels[lo..=hi].iter().all(|&l| l == truth) {
                        total += 1;
                        if pred == truth {
                            hits += 1;
                        }
                    }
                }
            }
            interior = Some(if total == 0 {
                0.0
            } else {
                hits as f64 / total as f64
            });

            // per-timepoint prediction curves for up to 5 transition windows
            pred_curves_csv.push_str("window_offset,time_index,true_class");
            for c in 1..=classes {
                pred_curves_csv.push_str(&format!(",p{c}"));
            }
            pred_curves_csv.push('\n');
            let mut written = 0;
            for (wi, p) in preds.iter().enumerate() {
                let off = (split + wi) * step;
                let window_labels = &labels[off..off + window_len];
                if window_labels.windows(2).all(|w| w[0] == w[1]) {
                    continue;
                }
                let Prediction::Curves(pc) = p else { unreachable!() };
                for t in 0..window_len {
                    write!(pred_curves_csv, "{off},{t},{}", window_labels[t]).unwrap();
                    for c in 0..classes {
                        write!(pred_curves_csv, ",{}", pc.channel(c).values()[t]).unwrap();
                    }
                    pred_curves_csv.push('\n');
                }
                written += 1;
                if written >= 5 {
                    break;
                }
            }
        }
    }

    let m = metrics(&confusion)?;
    let mut metrics_csv = m.to_csv();
    writeln!(metrics_csv, "test_loss,{test_loss}").unwrap();
    writeln!(metrics_csv, "test_accuracy,{test_acc}").unwrap();
    writeln!(metrics_csv, "windows,{n_windows}").unwrap();
    writeln!(metrics_csv, "train_windows,{split}").unwrap();
    writeln!(metrics_csv, "test_windows,{}", n_windows - split).unwrap();
    if let Some(ia) = interior {
        writeln!(metrics_csv, "interior_accuracy,{ia}").unwrap();
    }

    Ok(StreamOutputs {
        window_count: n_windows,
        test_accuracy: test_acc,
        interior_accuracy: interior,
        confusion_csv: confusion.to_csv(),
        metrics_csv,
        confusion,
        metrics: m,
        history_csv,
        pred_curves_csv,
        manifest: manifest_string(cfg),
    })
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn argmax_at(mc: &MultiCurve, t: usize) -> usize {
    let mut best = 0;
    for k in 1..mc.num_channels() {
        if mc.channel(k).values()[t] > mc.channel(best).values()[t] {
            best = k;
        }
    }
    best
}

/// Gradient verification of the configured architecture on one generated
/// sample. Returns the report and a printable summary.
pub fn run_gradcheck(
    cfg: &ExperimentConfig,
    tolerance: f64,
    max_coeffs: usize,
) -> Result<(GradCheckReport, String)> {
    let spec = cfg.model_spec()?;
    let (mut model, sample) = match cfg.head {
        HeadKind::Scalar => {
            let data = generate(&SimConfig::new(
                sim_dataset(cfg.experiment).unwrap_or(SimDataset::One),
                1,
                cfg.t_len,
                cfg.seed,
            ))?;
            (
                Model::scalar_classifier(2, 3, &spec)?,
                data.into_iter().next().unwrap(),
            )
        }
        HeadKind::Functional => {
            let data = generate(&SimConfig::new(
                sim_dataset(cfg.experiment).unwrap_or(SimDataset::One),
                1,
                cfg.t_len,
                cfg.seed,
            ))?;
            let s = data.into_iter().next().unwrap();
            let Label::Class(c) = s.label else { unreachable!() };
            let curves = label_curves(&vec![c; cfg.t_len], 3)?;
            (
                Model::functional_classifier(2, 3, &spec)?,
                LabeledSample::new(s.data, Label::Curves(curves))?,
            )
        }
    };
    model.init_params_seeded(cfg.seed, cfg.t_len);
    let report = gradient_check(&model, &sample, tolerance, max_coeffs, cfg.seed)?;
    let mut summary = format!(
        "gradient check: {} coefficients, max relative error {:.3e}, tolerance {:.1e}: {}\n",
        report.entries.len(),
        report.max_rel_error,
        report.tolerance,
        if report.passed { "PASS" } else { "FAIL" }
    );
    let mut worst: Vec<_> = report.entries.iter().collect();
    worst.sort_by(|a, b| b.rel_error.partial_cmp(&a.rel_error).unwrap());
    for e in worst.iter().take(5) {
        writeln!(
            summary,
            "  coeff {}: analytic {:+.6e} numeric {:+.6e} rel {:.3e}",
            e.index, e.analytic, e.numeric, e.rel_error
        )
        .unwrap();
    }
    Ok((report, summary))
}

/// Export generated data: the simulated data sets as inspection CSVs plus
/// per-class example curves, or the labeled stream as a recording CSV.
pub fn run_export(cfg: &ExperimentConfig, outdir: &Path) -> Result<()> {
    std::fs::create_dir_all(outdir)?;
    match cfg.experiment {
        ExperimentKind::Sim1 | ExperimentKind::Sim2 => {
            let data = generate(&SimConfig::new(
                sim_dataset(cfg.experiment)?,
                cfg.n_samples,
                cfg.t_len,
                cfg.seed,
            ))?;
            funnet::io::export_dataset_csv(outdir.join("dataset.csv"), &data)?;
            funnet::io::export_class_examples_csv(
                outdir.join("class_examples.csv"),
                &data,
                cfg.export_per_class,
            )?;
        }
        ExperimentKind::Stream => {
            let (rec, labels) = load_stream(cfg)?;
            funnet::io::write_recording_csv(outdir.join("recording.csv"), &rec, Some(&labels))?;
        }
    }
    write_file(outdir, "manifest.txt", &manifest_string(cfg))?;
    Ok(())
}
