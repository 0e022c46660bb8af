//! Functional k-nearest-neighbors baseline: classification of smoothed
//! curves by majority vote under the L2 distance over channels.

use crate::curves::{inner_product, Label, LabeledSample, MultiCurve};
use crate::error::{Error, Result};
use crate::smoothing::{lle_smooth_channel, LLEConfig};
use rayon::prelude::*;

/// Fitted model: preprocessed (order-0 smoothed, optionally standardized)
/// training curves plus their labels.
#[derive(Debug, Clone)]
pub struct KnnModel {
    smoothed: Vec<MultiCurve>,
    labels: Vec<usize>,
    classes: usize,
    prep: KnnPrep,
    k: usize,
}

/// Preprocessing applied to every curve before the distance: order-0 local
/// polynomial smoothing, optionally followed by per-channel standardization
/// (the full preprocessing pipeline of the networks).
#[derive(Debug, Clone, PartialEq)]
pub struct KnnPrep {
    pub lle: LLEConfig,
    pub standardize: bool,
}

impl KnnPrep {
    pub fn smoothing_only(lle: LLEConfig) -> Self {
        KnnPrep {
            lle,
            standardize: false,
        }
    }

    pub fn smoothing_and_standardization(lle: LLEConfig) -> Self {
        KnnPrep {
            lle,
            standardize: true,
        }
    }

    fn apply(&self, sample: &MultiCurve) -> Result<MultiCurve> {
        let smoothed = smooth_order0(sample, &self.lle)?;
        if self.standardize {
            crate::layers::standardize(&smoothed)
        } else {
            Ok(smoothed)
        }
    }
}

/// Squared L2 distance `sum_channels <X_i - Y_i, X_i - Y_i>` under the
/// module quadrature.
pub fn distance_sq(a: &MultiCurve, b: &MultiCurve) -> Result<f64> {
    if a.num_channels() != b.num_channels() {
        return Err(Error::ChannelMismatch {
            expected: a.num_channels(),
            got: b.num_channels(),
        });
    }
    let mut total = 0.0;
    for (ca, cb) in a.channels().iter().zip(b.channels()) {
        if ca.grid() != cb.grid() {
            return Err(Error::GridMismatch {
                expected: ca.len(),
                got: cb.len(),
            });
        }
        let diff = crate::curves::Curve::new(
            ca.grid(),
            ca.values()
                .iter()
                .zip(cb.values())
                .map(|(x, y)| x - y)
                .collect(),
        )?;
        total += inner_product(&diff, &diff)?;
    }
    Ok(total)
}

/// L2 distance on smoothed representations (a metric).
pub fn distance(a: &MultiCurve, b: &MultiCurve) -> Result<f64> {
    Ok(distance_sq(a, b)?.sqrt())
}

fn smooth_order0(sample: &MultiCurve, lle: &LLEConfig) -> Result<MultiCurve> {
    let channels = sample
        .channels()
        .iter()
        .map(|ch| lle_smooth_channel(ch, lle, 0))
        .collect::<Result<Vec<_>>>()?;
    MultiCurve::new(channels)
}

/// Smooth the training samples (order-0 channels only) and store them.
pub fn knn_fit(train: &[LabeledSample], lle: &LLEConfig, k: usize) -> Result<KnnModel> {
    knn_fit_with(train, &KnnPrep::smoothing_only(lle.clone()), k)
}

/// Fit with an explicit preprocessing pipeline.
pub fn knn_fit_with(train: &[LabeledSample], prep: &KnnPrep, k: usize) -> Result<KnnModel> {
    if train.is_empty() {
        return Err(Error::InvalidConfig("training set is empty".into()));
    }
    if k == 0 || k > train.len() {
        return Err(Error::InvalidConfig(format!(
            "k = {k} outside 1..={}",
            train.len()
        )));
    }
    let labels: Vec<usize> = train
        .iter()
        .map(|s| match &s.label {
            Label::Class(c) => Ok(*c),
            Label::Curves(_) => Err(Error::InvalidConfig(
                "knn requires class-index labels".into(),
            )),
        })
        .collect::<Result<_>>()?;
    let classes = *labels.iter().max().expect("nonempty");
    let smoothed = train
        .par_iter()
        .map(|s| prep.apply(&s.data))
        .collect::<Result<Vec<_>>>()?;
    Ok(KnnModel {
        smoothed,
        labels,
        classes,
        prep: prep.clone(),
        k,
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Distances to all training points, sorted ascending; exact distance
    /// ties are broken by training-set order.
    fn sorted_neighbors(&self, query: &MultiCurve) -> Result<Vec<(f64, usize)>> {
        let q = self.prep.apply(query)?;
        let mut dists: Vec<(f64, usize)> = self
            .smoothed
            .iter()
            .enumerate()
            .map(|(i, s)| Ok((distance_sq(s, &q)?, i)))
            .collect::<Result<_>>()?;
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        Ok(dists)
    }

    /// Majority vote among the `k` nearest; vote ties are broken by the
    /// smaller mean distance among tied classes, then by the lower class
    /// index.
    fn vote(&self, sorted: &[(f64, usize)], k: usize) -> usize {
        let mut counts = vec![0usize; self.classes];
        let mut dist_sums = vec![0.0f64; self.classes];
        for &(d, idx) in &sorted[..k] {
            let c = self.labels[idx] - 1;
            counts[c] += 1;
            dist_sums[c] += d.sqrt();
        }
        let best_count = *counts.iter().max().unwrap();
        let mut winner = None;
        for c in 0..self.classes {
            if counts[c] != best_count {
                continue;
            }
            let mean = dist_sums[c] / counts[c] as f64;
            winner = match winner {
                None => Some((c, mean)),
                Some((wc, wm)) => {
                    if mean < wm {
                        Some((c, mean))
                    } else {
                        Some((wc, wm))
                    }
                }
            };
        }
        winner.unwrap().0 + 1
    }

    /// Predict the class of a raw (unsmoothed) query.
    pub fn predict(&self, query: &MultiCurve) -> Result<usize> {
        let sorted = self.sorted_neighbors(query)?;
        Ok(self.vote(&sorted, self.k))
    }
}

/// Predict the class of a query with a fitted model.
pub fn knn_predict(model: &KnnModel, query: &MultiCurve) -> Result<usize> {
    model.predict(query)
}

/// Accuracy on the test set for every `k` in `k_values`, smoothing and
/// sorting each query once. Results match repeated single-`k` fits exactly.
pub fn knn_sweep(
    train: &[LabeledSample],
    test: &[LabeledSample],
    lle: &LLEConfig,
    k_values: &[usize],
) -> Result<Vec<(usize, f64)>> {
    knn_sweep_with(
        train,
        test,
        &KnnPrep::smoothing_only(lle.clone()),
        k_values,
    )
}

/// Sweep with an explicit preprocessing pipeline.
pub fn knn_sweep_with(
    train: &[LabeledSample],
    test: &[LabeledSample],
    prep: &KnnPrep,
    k_values: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if test.is_empty() {
        return Err(Error::InvalidConfig("test set is empty".into()));
    }
    let max_k = *k_values
        .iter()
        .max()
        .ok_or_else(|| Error::InvalidConfig("k_values is empty".into()))?;
    let model = knn_fit_with(train, prep, max_k)?;
    let hits: Vec<Vec<bool>> = test
        .par_iter()
        .map(|s| {
            let truth = match &s.label {
                Label::Class(c) => *c,
                Label::Curves(_) => {
                    return Err(Error::InvalidConfig(
                        "knn requires class-index labels".into(),
                    ))
                }
            };
            let sorted = model.sorted_neighbors(&s.data)?;
            Ok(k_values
                .iter()
                .map(|&k| model.vote(&sorted, k) == truth)
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(k_values
        .iter()
        .enumerate()
        .map(|(ki, &k)| {
            let correct = hits.iter().filter(|h| h[ki]).count();
            (k, correct as f64 / test.len() as f64)
        })
        .collect())
}
