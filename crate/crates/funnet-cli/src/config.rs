//! Flat key-value experiment configuration.
//!
//! Config files hold `key = value` lines with dotted section keys (`#`
//! starts a comment). Every key is mirrored by a CLI flag and flags win.
//! `manifest.*` keys are ignored on input, which makes an emitted manifest
//! directly re-runnable as a config file.

use funnet::basis::BasisFamily;
use funnet::engine::{HeadKind, ModelSpec, OptimizerKind, TrainConfig};
use funnet::error::{Error, Result};
use funnet::smoothing::{KernelSpec, LLEConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Sim1,
    Sim2,
    Stream,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Sim1 => "sim1",
            ExperimentKind::Sim2 => "sim2",
            ExperimentKind::Stream => "stream",
        }
    }
}

/// Whether the baseline standardizes after smoothing. `Auto` follows the
/// per-experiment default that reproduces the reference accuracies:
/// smoothing only for sim1, smoothing plus standardization for sim2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KnnStandardize {
    Auto,
    On,
    Off,
}

/// Typed experiment configuration; one field per config key.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_samples: usize,
    pub t_len: usize,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    pub train_fraction: f64,

    pub conv_filters: Vec<usize>,
    pub filter_len: usize,
    pub basis_count: usize,
    pub basis_family: BasisFamily,
    pub head: HeadKind,

    pub lle_degree: usize,
    pub lle_orders: usize,
    pub lle_bandwidths: Vec<usize>,

    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: String,
    pub learning_rate: f64,

    pub knn_k_min: usize,
    pub knn_k_max: usize,
    pub knn_standardize: KnnStandardize,

    pub stream_data: Option<String>,
    pub stream_window_len: usize,
    pub stream_step: usize,
    pub stream_margin: usize,
    pub stream_total_len: usize,
    pub stream_segment_min: usize,
    pub stream_segment_max: usize,
    pub stream_noise: f64,
    pub stream_classes: usize,

    pub export_per_class: usize,
}

impl Default for ExperimentConfig {
    /// Defaults mirror the simulation study: T = 250, quartic kernel,
    /// bandwidths 5 and 10, five Legendre base functions, convolutions with
    /// 20 and 10 filters of size 25, ELU, 5 training epochs.
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::Sim2,
            n_samples: 1000,
            t_len: 250,
            trials: 10,
            seed: 0,
            workers: 0,
            train_fraction: 0.8,
            conv_filters: vec![20, 10],
            filter_len: 25,
            basis_count: 5,
            basis_family: BasisFamily::Legendre,
            head: HeadKind::Scalar,
            lle_degree: 1,
            lle_orders: 1,
            lle_bandwidths: vec![5, 10],
            epochs: 5,
            batch_size: 32,
            optimizer: "adam".into(),
            learning_rate: 5e-3,
            knn_k_min: 1,
            knn_k_max: 19,
            knn_standardize: KnnStandardize::Auto,
            stream_data: None,
            stream_window_len: 250,
            stream_step: 50,
            stream_margin: 40,
            stream_total_len: 50_000,
            stream_segment_min: 500,
            stream_segment_max: 900,
            stream_noise: 1.0,
            stream_classes: 3,
            export_per_class: 3,
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidConfig(format!("config key `{key}`: bad value {value:?}"))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<usize>> {
    value
        .split(';')
        .map(|v| v.trim().parse().map_err(|_| bad(key, value)))
        .collect()
}

impl ExperimentConfig {
    /// Apply one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "experiment" => {
                self.experiment = match v {
                    "sim1" => ExperimentKind::Sim1,
                    "sim2" => ExperimentKind::Sim2,
                    "stream" => ExperimentKind::Stream,
                    _ => return Err(bad(key, v)),
                }
            }
            "n_samples" => self.n_samples = v.parse().map_err(|_| bad(key, v))?,
            "t_len" => self.t_len = v.parse().map_err(|_| bad(key, v))?,
            "trials" => self.trials = v.parse().map_err(|_| bad(key, v))?,
            "seed" => self.seed = v.parse().map_err(|_| bad(key, v))?,
            "workers" => self.workers = v.parse().map_err(|_| bad(key, v))?,
            "split.train_fraction" => self.train_fraction = v.parse().map_err(|_| bad(key, v))?,
            "model.conv_filters" => self.conv_filters = parse_list(key, v)?,
            "model.filter_len" => self.filter_len = v.parse().map_err(|_| bad(key, v))?,
            "model.basis_count" => self.basis_count = v.parse().map_err(|_| bad(key, v))?,
            "model.basis_family" => {
                self.basis_family = match v {
                    "legendre" => BasisFamily::Legendre,
                    "fourier" => BasisFamily::Fourier,
                    _ => return Err(bad(key, v)),
                }
            }
            "model.head" => {
                self.head = match v {
                    "scalar" => HeadKind::Scalar,
                    "functional" => HeadKind::Functional,
                    _ => return Err(bad(key, v)),
                }
            }
            "lle.degree" => self.lle_degree = v.parse().map_err(|_| bad(key, v))?,
            "lle.orders" => self.lle_orders = v.parse().map_err(|_| bad(key, v))?,
            "lle.bandwidths" => self.lle_bandwidths = parse_list(key, v)?,
            "train.epochs" => self.epochs = v.parse().map_err(|_| bad(key, v))?,
            "train.batch_size" => self.batch_size = v.parse().map_err(|_| bad(key, v))?,
            "train.optimizer" => {
                if v != "adam" && v != "sgd" {
                    return Err(bad(key, v));
                }
                self.optimizer = v.to_string();
            }
            "train.lr" => self.learning_rate = v.parse().map_err(|_| bad(key, v))?,
            "knn.k_min" => self.knn_k_min = v.parse().map_err(|_| bad(key, v))?,
            "knn.k_max" => self.knn_k_max = v.parse().map_err(|_| bad(key, v))?,
            "knn.standardize" => {
                self.knn_standardize = match v {
                    "auto" => KnnStandardize::Auto,
                    "true" | "on" => KnnStandardize::On,
                    "false" | "off" => KnnStandardize::Off,
                    _ => return Err(bad(key, v)),
                }
            }
            "stream.data" => self.stream_data = (!v.is_empty()).then(|| v.to_string()),
            "stream.window_len" => self.stream_window_len = v.parse().map_err(|_| bad(key, v))?,
            "stream.step" => self.stream_step = v.parse().map_err(|_| bad(key, v))?,
            "stream.margin" => self.stream_margin = v.parse().map_err(|_| bad(key, v))?,
            "stream.total_len" => self.stream_total_len = v.parse().map_err(|_| bad(key, v))?,
            "stream.segment_min" => self.stream_segment_min = v.parse().map_err(|_| bad(key, v))?,
            "stream.segment_max" => self.stream_segment_max = v.parse().map_err(|_| bad(key, v))?,
            "stream.noise" => self.stream_noise = v.parse().map_err(|_| bad(key, v))?,
            "stream.classes" => self.stream_classes = v.parse().map_err(|_| bad(key, v))?,
            "export.per_class" => self.export_per_class = v.parse().map_err(|_| bad(key, v))?,
            _ if key.starts_with("manifest.") => {}
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "unknown config key `{key}`"
                )))
            }
        }
        Ok(())
    }

    /// Parse a config file's text over the current values.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "config line {}: expected `key = value`, got {raw:?}",
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials: must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "split.train_fraction: must be in (0, 1)".into(),
            ));
        }
        if self.knn_k_min == 0 || self.knn_k_min > self.knn_k_max {
            return Err(Error::InvalidConfig(
                "knn.k_min: must satisfy 1 <= k_min <= k_max".into(),
            ));
        }
        self.model_spec()?.validate()?;
        self.train_config()?.validate()?;
        Ok(())
    }

    pub fn lle(&self) -> Result<LLEConfig> {
        LLEConfig::new(
            self.lle_degree,
            self.lle_bandwidths.clone(),
            KernelSpec::Quartic,
            self.lle_orders,
        )
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        Ok(ModelSpec {
            lle: self.lle()?,
            conv_filters: self.conv_filters.clone(),
            filter_len: self.filter_len,
            basis_count: self.basis_count,
            basis_family: self.basis_family,
        })
    }

    /// Training configuration for one trial seed.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let optimizer = match self.optimizer.as_str() {
            "adam" => OptimizerKind::adam(self.learning_rate),
            "sgd" => OptimizerKind::sgd(self.learning_rate),
            other => return Err(Error::InvalidConfig(format!("train.optimizer: {other:?}"))),
        };
        Ok(TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            optimizer,
            seed: 0,
        })
    }

    pub fn k_values(&self) -> Vec<usize> {
        (self.knn_k_min..=self.knn_k_max).collect()
    }

    /// Effective baseline standardization switch for this experiment.
    pub fn knn_standardize_effective(&self) -> bool {
        match self.knn_standardize {
            KnnStandardize::On => true,
            KnnStandardize::Off => false,
            KnnStandardize::Auto => self.experiment == ExperimentKind::Sim2,
        }
    }

    /// Canonical rendering: every key in a fixed order, `key = value` lines.
    pub fn to_canonical_string(&self) -> String {
        let family = match self.basis_family {
            BasisFamily::Legendre => "legendre",
            BasisFamily::Fourier => "fourier",
        };
        let head = match self.head {
            HeadKind::Scalar => "scalar",
            HeadKind::Functional => "functional",
        };
        let knn_std = match self.knn_standardize {
            KnnStandardize::Auto => "auto",
            KnnStandardize::On => "true",
            KnnStandardize::Off => "false",
        };
        let list = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let mut out = String::new();
        let mut push = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        push("experiment", self.experiment.name().into());
        push("n_samples", self.n_samples.to_string());
        push("t_len", self.t_len.to_string());
        push("trials", self.trials.to_string());
        push("seed", self.seed.to_string());
        push("workers", self.workers.to_string());
        push("split.train_fraction", self.train_fraction.to_string());
        push("model.conv_filters", list(&self.conv_filters));
        push("model.filter_len", self.filter_len.to_string());
        push("model.basis_count", self.basis_count.to_string());
        push("model.basis_family", family.into());
        push("model.head", head.into());
        push("lle.degree", self.lle_degree.to_string());
        push("lle.orders", self.lle_orders.to_string());
        push("lle.bandwidths", list(&self.lle_bandwidths));
        push("train.epochs", self.epochs.to_string());
        push("train.batch_size", self.batch_size.to_string());
        push("train.optimizer", self.optimizer.clone());
        push("train.lr", self.learning_rate.to_string());
        push("knn.k_min", self.knn_k_min.to_string());
        push("knn.k_max", self.knn_k_max.to_string());
        push("knn.standardize", knn_std.into());
        push(
            "stream.data",
            self.stream_data.clone().unwrap_or_default(),
        );
        push("stream.window_len", self.stream_window_len.to_string());
        push("stream.step", self.stream_step.to_string());
        push("stream.margin", self.stream_margin.to_string());
        push("stream.total_len", self.stream_total_len.to_string());
        push("stream.segment_min", self.stream_segment_min.to_string());
        push("stream.segment_max", self.stream_segment_max.to_string());
        push("stream.noise", self.stream_noise.to_string());
        push("stream.classes", self.stream_classes.to_string());
        push("export.per_class", self.export_per_class.to_string());
        out
    }
}
