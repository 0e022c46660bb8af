use super::model::{
    ce_functional, ce_functional_grad, ce_scalar, ce_scalar_grad, functional_accuracy,
    scalar_accuracy, Compiled, HeadKind, LayerSpec, Model, ParamKind, SuffixCache, Value,
};
use super::optim::{OptState, OptimizerKind};
use crate::curves::{Label, LabeledSample};
use crate::error::{Error, Result};
use crate::layers::kernels;
use crate::mat::Mat;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Training hyperparameters. All stochasticity (parameter initialization,
/// shuffling, batching) derives from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            batch_size: 32,
            optimizer: OptimizerKind::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        self.optimizer.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub split: String,
    pub loss: f64,
    pub accuracy: f64,
}

/// Per-epoch loss/accuracy log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub rows: Vec<HistoryRow>,
}

impl TrainHistory {
    pub fn push(&mut self, epoch: usize, split: &str, loss: f64, accuracy: f64) {
        self.rows.push(HistoryRow {
            epoch,
            split: split.to_string(),
            loss,
            accuracy,
        });
    }

    /// CSV rendering with header `epoch,split,loss,accuracy`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,split,loss,accuracy\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.epoch, r.split, r.loss, r.accuracy));
        }
        out
    }
}

/// Gradient of the mean batch loss for every trainable coefficient, in the
/// layout of [`Model::param_blocks`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub values: Vec<f64>,
}

/// Label in preprocessed form.
#[derive(Debug, Clone)]
pub(crate) enum PrepLabel {
    Class(usize),
    Curves(Mat),
}

/// Sample after the fixed preprocessing prefix.
#[derive(Debug, Clone)]
pub(crate) struct PrepSample {
    pub x: Mat,
    pub label: PrepLabel,
}

pub(crate) fn prep_label(model: &Model, label: &Label) -> Result<PrepLabel> {
    match (model.head, label) {
        (Some(HeadKind::Scalar), Label::Class(c)) => {
            if *c == 0 || *c > model.out_units {
                return Err(Error::LabelOutOfRange {
                    label: *c,
                    classes: model.out_units,
                });
            }
            Ok(PrepLabel::Class(*c))
        }
        (Some(HeadKind::Functional), Label::Curves(y)) => {
            if y.num_channels() != model.out_units {
                return Err(Error::ChannelMismatch {
                    expected: model.out_units,
                    got: y.num_channels(),
                });
            }
            Ok(PrepLabel::Curves(Mat::from_multicurve(y)))
        }
        (Some(HeadKind::Scalar), Label::Curves(_)) => Err(Error::InvalidConfig(
            "scalar head requires class-index labels".into(),
        )),
        (Some(HeadKind::Functional), Label::Class(_)) => Err(Error::InvalidConfig(
            "functional head requires label curves".into(),
        )),
        (None, _) => Err(Error::InvalidConfig(
            "model has no classification head (final softmax layer)".into(),
        )),
    }
}

pub(crate) fn preprocess_dataset(model: &Model, data: &[LabeledSample]) -> Result<Vec<PrepSample>> {
    data.par_iter()
        .map(|s| {
            let pre = model.run_prefix(&s.data)?;
            Ok(PrepSample {
                x: Mat::from_multicurve(&pre),
                label: prep_label(model, &s.label)?,
            })
        })
        .collect()
}

/// Forward and reverse pass on one preprocessed sample. Returns the sample
/// loss, the sample accuracy and the unscaled gradient of the sample loss.
pub(crate) fn forward_backward(
    model: &Model,
    compiled: &Compiled,
    sample: &PrepSample,
) -> Result<(f64, f64, Vec<f64>)> {
    let mut caches: Vec<SuffixCache> = Vec::with_capacity(model.layers.len() - model.prefix_len);
    let out = model.run_suffix(compiled, sample.x.clone(), Some(&mut caches))?;

    let mut grad = vec![0.0; model.num_params()];
    let (loss, acc, mut grad_value) = match (&out, &sample.label) {
        (Value::Scalars(p), PrepLabel::Class(c)) => (
            ce_scalar(p, *c),
            scalar_accuracy(p, *c),
            Value::Scalars(ce_scalar_grad(p, *c)),
        ),
        (Value::Curves(p), PrepLabel::Curves(y)) => (
            ce_functional(p, y),
            functional_accuracy(p, y),
            Value::Curves(ce_functional_grad(p, y)),
        ),
        _ => {
            return Err(Error::InvalidConfig(
                "prediction and label kinds do not match".into(),
            ))
        }
    };

    let first_trainable = model.prefix_len;
    for idx in (first_trainable..model.layers.len()).rev() {
        let cl = compiled.layers[idx].as_ref().unwrap();
        let cache = &caches[idx - first_trainable];
        let need_input_grad = idx > first_trainable;
        let (main, bias) = model.layer_block_ranges(idx);

        grad_value = match &model.layers[idx] {
            LayerSpec::FuncConv { filter_len, .. } => {
                let (out_m, g_m) = match (&cache.output, &grad_value) {
                    (Value::Curves(o), Value::Curves(g)) => (o, g),
                    _ => unreachable!("conv layers produce curves"),
                };
                let delta = kernels::activation_backward(cl.activation, out_m, g_m);
                kernels::project_blocks(&delta, &cl.grid_basis, &mut grad[bias.clone()]);
                let tap_grads = kernels::conv_tap_grads(
                    &cache.input,
                    &delta,
                    *filter_len,
                    cl.in_channels,
                    cl.out_channels,
                );
                kernels::project_blocks(
                    &tap_grads,
                    cl.filter_basis.as_ref().unwrap(),
                    &mut grad[main.clone()],
                );
                if need_input_grad {
                    Value::Curves(kernels::conv_input_grad(
                        &delta,
                        &cl.table,
                        cl.in_channels,
                        cl.out_channels,
                    ))
                } else {
                    Value::Scalars(Vec::new())
                }
            }
            LayerSpec::FuncDenseFunctional { .. } => {
                let (out_m, g_m) = match (&cache.output, &grad_value) {
                    (Value::Curves(o), Value::Curves(g)) => (o, g),
                    _ => unreachable!("functional dense layers produce curves"),
                };
                let delta = kernels::activation_backward(cl.activation, out_m, g_m);
                kernels::project_blocks(&delta, &cl.grid_basis, &mut grad[bias.clone()]);
                // weight gradients: project delta_k(t) * in_j(t) per pair
                let t_len = delta.cols();
                let mut prod = Mat::zeros(cl.in_channels * cl.out_channels, t_len);
                for j in 0..cl.in_channels {
                    let x = cache.input.row(j);
                    for k in 0..cl.out_channels {
                        let d = delta.row(k);
                        let row = prod.row_mut(j * cl.out_channels + k);
                        for ((r, &dv), &xv) in row.iter_mut().zip(d).zip(x) {
                            *r = dv * xv;
                        }
                    }
                }
                kernels::project_blocks(&prod, &cl.grid_basis, &mut grad[main.clone()]);
                if need_input_grad {
                    Value::Curves(kernels::dense_functional_input_grad(
                        &delta,
                        &cl.table,
                        cl.in_channels,
                        cl.out_channels,
                    ))
                } else {
                    Value::Scalars(Vec::new())
                }
            }
            LayerSpec::FuncDenseScalar { .. } => {
                let (out_v, g_v) = match (&cache.output, &grad_value) {
                    (Value::Scalars(o), Value::Scalars(g)) => (o, g),
                    _ => unreachable!("scalar dense layers produce scalars"),
                };
                let dz = kernels::activation_backward_vec(cl.activation, out_v, g_v);
                grad[bias.clone()].copy_from_slice(&dz);
                // weight gradients: dz_k / T * <in_j, phi_i>
                let t_len = cache.input.cols();
                let inv_t = 1.0 / t_len as f64;
                let q1 = cl.grid_basis.spec().count;
                let mut pin = vec![0.0; cl.in_channels * q1];
                for j in 0..cl.in_channels {
                    cl.grid_basis
                        .project_add(cache.input.row(j), &mut pin[j * q1..(j + 1) * q1]);
                }
                let wgrad = &mut grad[main.clone()];
                for j in 0..cl.in_channels {
                    for (k, &d) in dz.iter().enumerate() {
                        let base = (j * cl.out_channels + k) * q1;
                        for i in 0..q1 {
                            wgrad[base + i] = d * inv_t * pin[j * q1 + i];
                        }
                    }
                }
                if need_input_grad {
                    Value::Curves(kernels::dense_scalar_input_grad(
                        &dz,
                        &cl.table,
                        cl.in_channels,
                        cl.out_channels,
                        t_len,
                    ))
                } else {
                    Value::Scalars(Vec::new())
                }
            }
            _ => unreachable!("suffix holds only trainable layers"),
        };
    }

    Ok((loss, acc, grad))
}

impl Model {
    /// (main, bias) flat-parameter ranges of one trainable layer.
    pub(crate) fn layer_block_ranges(
        &self,
        layer_idx: usize,
    ) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let mut main = 0..0;
        let mut bias = 0..0;
        for b in &self.blocks {
            if b.layer == layer_idx {
                match b.kind {
                    ParamKind::Filter | ParamKind::Weight => main = b.offset..b.offset + b.len,
                    ParamKind::BiasCoeffs | ParamKind::BiasScalar => {
                        bias = b.offset..b.offset + b.len
                    }
                }
            }
        }
        (main, bias)
    }
}

fn validate_dataset(model: &Model, data: &[LabeledSample]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::InvalidConfig("dataset is empty".into()));
    }
    let grid = data[0].data.grid();
    for s in data {
        if s.data.grid() != grid {
            return Err(Error::GridMismatch {
                expected: grid.len(),
                got: s.data.len(),
            });
        }
        if s.data.num_channels() != model.input_channels {
            return Err(Error::ChannelMismatch {
                expected: model.input_channels,
                got: s.data.num_channels(),
            });
        }
    }
    Ok(())
}

/// Exact gradients of the mean batch loss for every trainable coefficient.
/// Samples contribute in batch order, so the result is deterministic.
pub fn backward(model: &Model, batch: &[LabeledSample]) -> Result<Gradients> {
    validate_dataset(model, batch)?;
    let prepped = preprocess_dataset(model, batch)?;
    let compiled = model.compile(prepped[0].x.cols())?;
    let per_sample: Vec<(f64, f64, Vec<f64>)> = prepped
        .par_iter()
        .map(|s| forward_backward(model, &compiled, s))
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; model.num_params()];
    for (_, _, g) in &per_sample {
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    let inv = 1.0 / batch.len() as f64;
    for v in &mut grad {
        *v *= inv;
    }
    Ok(Gradients { values: grad })
}

/// Train a model in place. Parameters are (re)initialized from
/// `config.seed`, then updated by mini-batch gradient descent; shuffling and
/// batching derive from the same seed, so identical seeds give bit-identical
/// parameter trajectories.
pub fn train(model: &mut Model, data: &[LabeledSample], config: &TrainConfig) -> Result<TrainHistory> {
    config.validate()?;
    validate_dataset(model, data)?;
    if model.head().is_none() {
        return Err(Error::InvalidConfig(
            "model has no classification head (final softmax layer)".into(),
        ));
    }
    let prepped = preprocess_dataset(model, data)?;
    let t_len = prepped[0].x.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    model.init_params(&mut rng, t_len);
    let n = prepped.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut opt_state = OptState::new(model.param_scales(t_len));
    let mut history = TrainHistory::default();

    for epoch in 1..=config.epochs {
        indices.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut acc_sum = 0.0;
        for batch_idx in indices.chunks(config.batch_size) {
            let compiled = model.compile(t_len)?;
            let per_sample: Vec<(f64, f64, Vec<f64>)> = batch_idx
                .par_iter()
                .map(|&i| forward_backward(model, &compiled, &prepped[i]))
                .collect::<Result<_>>()?;
            let mut grad = vec![0.0; model.num_params()];
            for (l, a, g) in &per_sample {
                loss_sum += l;
                acc_sum += a;
                for (acc, v) in grad.iter_mut().zip(g) {
                    *acc += v;
                }
            }
            let inv = 1.0 / batch_idx.len() as f64;
            for v in &mut grad {
                *v *= inv;
            }
            config
                .optimizer
                .step(model.params_mut(), &grad, &mut opt_state);
        }
        history.push(epoch, "train", loss_sum / n as f64, acc_sum / n as f64);
    }
    Ok(history)
}

/// Mean loss and accuracy of a model on a labeled set. For functional heads
/// the accuracy is the mean per-timepoint argmax accuracy.
pub fn evaluate(model: &Model, data: &[LabeledSample]) -> Result<(f64, f64)> {
    validate_dataset(model, data)?;
    let prepped = preprocess_dataset(model, data)?;
    let compiled = model.compile(prepped[0].x.cols())?;
    let stats: Vec<(f64, f64)> = prepped
        .par_iter()
        .map(|s| {
            let out = model.run_suffix(&compiled, s.x.clone(), None)?;
            match (&out, &s.label) {
                (Value::Scalars(p), PrepLabel::Class(c)) => {
                    Ok((ce_scalar(p, *c), scalar_accuracy(p, *c)))
                }
                (Value::Curves(p), PrepLabel::Curves(y)) => {
                    Ok((ce_functional(p, y), functional_accuracy(p, y)))
                }
                _ => Err(Error::InvalidConfig(
                    "prediction and label kinds do not match".into(),
                )),
            }
        })
        .collect::<Result<_>>()?;
    let n = stats.len() as f64;
    let loss = stats.iter().map(|s| s.0).sum::<f64>() / n;
    let acc = stats.iter().map(|s| s.1).sum::<f64>() / n;
    Ok((loss, acc))
}
