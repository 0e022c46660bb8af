//! Seeded generators for the simulated two-channel, three-class data sets
//! and a labeled-stream synthesizer used by the sliding-window pipeline
//! tests.
//!
//! Each sample is generated from its own RNG stream derived from the master
//! seed, so generation is deterministic and parallelizable per sample.

use crate::curves::{Grid, Label, LabeledSample, MultiCurve};
use crate::error::{Error, Result};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Which simulated data set to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimDataset {
    /// Two-band sinusoid mixtures with random phase shifts.
    One,
    /// Localized spikes in noise.
    Two,
}

/// Configuration of the simulated data generators.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_samples: usize,
    pub n_timepoints: usize,
    pub seed: u64,
    pub dataset: SimDataset,
    /// Standard deviation multiplier of the observation noise. 1 reproduces
    /// the observation model; 0 yields the noiseless signals (test use).
    pub noise_scale: f64,
}

impl SimConfig {
    pub fn new(dataset: SimDataset, n_samples: usize, n_timepoints: usize, seed: u64) -> Self {
        SimConfig {
            n_samples,
            n_timepoints,
            seed,
            dataset,
            noise_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
        }
        if self.n_timepoints < 2 {
            return Err(Error::GridTooShort(self.n_timepoints));
        }
        Ok(())
    }
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per draw keeps the stream layout simple.
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Mixture coefficients `gamma_i(c)` of data set (I).
const GAMMA_ONE: [[f64; 2]; 3] = [[0.0, 0.0], [0.8, 0.4], [0.4, 0.8]];
/// Channel coefficients `gamma_i(c)` of data set (II).
const GAMMA_TWO: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// The spike signal of data set (II): `max(-4/w^2 (x - t)^2 + 3, 0)`.
pub fn spike_signal(x: f64, width: f64, center: f64) -> f64 {
    (-4.0 / (width * width) * (x - center) * (x - center) + 3.0).max(0.0)
}

/// Data set (I): per sample, frequencies `alpha ~ U[8,12]`, `beta ~ U[13,30]`,
/// phase shifts `t_1, t_2 ~ U[0,1]`, a uniform class in `{1,2,3}` and i.i.d.
/// standard normal errors. Channel `i` observes
/// `(1-gamma_i) sin(2 pi alpha (x + t_i)) + gamma_i sin(2 pi beta (x + t_i))`
/// plus noise at the grid points `x = t/T`.
pub fn gen_dataset1(config: &SimConfig) -> Result<Vec<LabeledSample>> {
    if config.dataset != SimDataset::One {
        return Err(Error::InvalidConfig("config.dataset must be One".into()));
    }
    config.validate()?;
    let t_len = config.n_timepoints;
    let grid = Grid::new(t_len)?;
    (0..config.n_samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = sample_rng(config.seed, idx);
            let alpha: f64 = rng.random_range(8.0..12.0);
            let beta: f64 = rng.random_range(13.0..30.0);
            let shifts = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let class: usize = rng.random_range(1..=3);
            let gamma = GAMMA_ONE[class - 1];
            let mut channels = Vec::with_capacity(2);
            for i in 0..2 {
                let mut vals = Vec::with_capacity(t_len);
                for t in 1..=t_len {
                    let x = t as f64 / t_len as f64;
                    let clean = (1.0 - gamma[i]) * (2.0 * PI * alpha * (x + shifts[i])).sin()
                        + gamma[i] * (2.0 * PI * beta * (x + shifts[i])).sin();
                    vals.push(clean + config.noise_scale * standard_normal(&mut rng));
                }
                channels.push(vals);
            }
            LabeledSample::new(
                MultiCurve::from_values(grid, channels)?,
                Label::Class(class),
            )
        })
        .collect()
}

/// Data set (II): per sample, a spike width `w ~ U[0.05,0.1]`, a spike
/// location `t ~ U[0,1]` and a uniform class; channel `i` observes
/// `gamma_i(c) * spike(x)` plus standard normal noise. Class 1 is pure noise.
pub fn gen_dataset2(config: &SimConfig) -> Result<Vec<LabeledSample>> {
    if config.dataset != SimDataset::Two {
        return Err(Error::InvalidConfig("config.dataset must be Two".into()));
    }
    config.validate()?;
    let t_len = config.n_timepoints;
    let grid = Grid::new(t_len)?;
    (0..config.n_samples)
        .into_par_iter()
        .map(|idx| {
            let mut rng = sample_rng(config.seed, idx);
            let width: f64 = rng.random_range(0.05..0.1);
            let center: f64 = rng.random_range(0.0..1.0);
            let class: usize = rng.random_range(1..=3);
            let gamma = GAMMA_TWO[class - 1];
            let mut channels = Vec::with_capacity(2);
            for i in 0..2 {
                let mut vals = Vec::with_capacity(t_len);
                for t in 1..=t_len {
                    let x = t as f64 / t_len as f64;
                    vals.push(
                        gamma[i] * spike_signal(x, width, center)
                            + config.noise_scale * standard_normal(&mut rng),
                    );
                }
                channels.push(vals);
            }
            LabeledSample::new(
                MultiCurve::from_values(grid, channels)?,
                Label::Class(class),
            )
        })
        .collect()
}

/// Generate either data set from one entry point.
pub fn generate(config: &SimConfig) -> Result<Vec<LabeledSample>> {
    match config.dataset {
        SimDataset::One => gen_dataset1(config),
        SimDataset::Two => gen_dataset2(config),
    }
}

/// Configuration of the synthetic labeled stream: a long two-channel
/// recording whose class changes at segment boundaries, with data-set-(I)
/// style signals re-drawn per segment.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    pub total_len: usize,
    /// segment length bounds in samples (inclusive)
    pub segment_len: (usize, usize),
    /// samples per unit interval; sets the time scale of the signals
    pub samples_per_unit: usize,
    pub classes: usize,
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            total_len: 20_000,
            segment_len: (600, 1200),
            samples_per_unit: 250,
            classes: 3,
            noise_scale: 1.0,
            seed: 0,
        }
    }
}

/// Continuous labeled recording with class transitions: returns the
/// two-channel stream and one class label per timepoint.
pub fn gen_labeled_stream(config: &StreamConfig) -> Result<(MultiCurve, Vec<usize>)> {
    if config.total_len < 2 {
        return Err(Error::GridTooShort(config.total_len));
    }
    if config.classes < 2 || config.classes > 3 {
        return Err(Error::InvalidConfig(
            "stream synthesizer supports 2 or 3 classes".into(),
        ));
    }
    if config.segment_len.0 == 0 || config.segment_len.0 > config.segment_len.1 {
        return Err(Error::InvalidConfig("bad segment length bounds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut labels = Vec::with_capacity(config.total_len);
    let mut ch = vec![Vec::with_capacity(config.total_len); 2];
    let mut prev_class = 0usize;
    let mut start = 0usize;
    while start < config.total_len {
        let seg_len = rng
            .random_range(config.segment_len.0..=config.segment_len.1)
            .min(config.total_len - start);
        // avoid repeating the previous class so every boundary is a transition
        let class = loop {
            let c: usize = rng.random_range(1..=config.classes);
            if c != prev_class {
                break c;
            }
        };
        prev_class = class;
        let alpha: f64 = rng.random_range(8.0..12.0);
        let beta: f64 = rng.random_range(13.0..30.0);
        let shifts = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let gamma = GAMMA_ONE[class - 1];
        for t in start..start + seg_len {
            let x = (t + 1) as f64 / config.samples_per_unit as f64;
            for i in 0..2 {
                let clean = (1.0 - gamma[i]) * (2.0 * PI * alpha * (x + shifts[i])).sin()
                    + gamma[i] * (2.0 * PI * beta * (x + shifts[i])).sin();
                ch[i].push(clean + config.noise_scale * standard_normal(&mut rng));
            }
            labels.push(class);
        }
        start += seg_len;
    }
    let grid = Grid::new(config.total_len)?;
    let mc = MultiCurve::from_values(grid, ch)?;
    Ok((mc, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn cfg1(n: usize, seed: u64) -> SimConfig {
        SimConfig::new(SimDataset::One, n, 250, seed)
    }

    fn cfg2(n: usize, seed: u64) -> SimConfig {
        SimConfig::new(SimDataset::Two, n, 250, seed)
    }

    #[test]
    fn dataset1_class1_noiseless_is_bounded_alpha_band() {
        let mut cfg = cfg1(200, 5);
        cfg.noise_scale = 0.0;
        let data = gen_dataset1(&cfg).unwrap();
        let class1: Vec<_> = data
            .iter()
            .filter(|s| s.label == Label::Class(1))
            .collect();
        assert!(!class1.is_empty());
        for s in class1 {
            for ch in s.data.channels() {
                let max = ch.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
                // gamma(1) = (0, 0): a pure unit-amplitude alpha sinusoid
                assert!(max <= 1.0 + 1e-12);
                assert!(max > 0.5);
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_dataset1(&cfg1(50, 7)).unwrap();
        let b = gen_dataset1(&cfg1(50, 7)).unwrap();
        assert_eq!(a, b);
        let a = gen_dataset2(&cfg2(50, 7)).unwrap();
        let b = gen_dataset2(&cfg2(50, 7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dataset1_variance_decomposes() {
        // Monte-Carlo moment oracle: Var(X) = Var(f) + 1 per channel.
        let n = 5000;
        let noisy = gen_dataset1(&cfg1(n, 11)).unwrap();
        let mut clean_cfg = cfg1(n, 11);
        clean_cfg.noise_scale = 0.0;
        let clean = gen_dataset1(&clean_cfg).unwrap();
        for ch in 0..2 {
            let var = |data: &[LabeledSample]| {
                let vals: Vec<f64> = data
                    .iter()
                    .flat_map(|s| s.data.channel(ch).values().iter().copied())
                    .collect();
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64
            };
            let vx = var(&noisy);
            let vf = var(&clean);
            assert!(
                (vx / (vf + 1.0) - 1.0).abs() < 0.05,
                "channel {ch}: var(X) = {vx}, var(f) + 1 = {}",
                vf + 1.0
            );
        }
    }

    #[test]
    fn spike_formula() {
        let w = 0.07;
        let t0 = 0.4;
        assert_eq!(spike_signal(t0, w, t0), 3.0);
        let radius = 3.0f64.sqrt() / 2.0 * w;
        assert_abs_diff_eq!(spike_signal(t0 + radius, w, t0), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(spike_signal(t0 - radius, w, t0), 0.0, epsilon = 1e-12);
        assert!(spike_signal(t0 + radius + 1e-6, w, t0) == 0.0);
        assert!(spike_signal(t0 + radius - 1e-3, w, t0) > 0.0);
    }

    #[test]
    fn dataset2_class1_is_standard_normal_noise() {
        // KS statistic of pooled class-1 values against N(0,1), at least
        // 1e5 points, below the asymptotic 1% critical value 1.6276/sqrt(n).
        let data = gen_dataset2(&cfg2(900, 13)).unwrap();
        let mut pooled: Vec<f64> = data
            .iter()
            .filter(|s| s.label == Label::Class(1))
            .flat_map(|s| {
                s.data
                    .channels()
                    .iter()
                    .flat_map(|c| c.values().iter().copied())
            })
            .collect();
        assert!(pooled.len() >= 100_000, "pooled {} points", pooled.len());
        pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let normal = Normal::new(0.0, 1.0).unwrap();
        let n = pooled.len() as f64;
        let mut d = 0.0f64;
        for (i, &x) in pooled.iter().enumerate() {
            let cdf = normal.cdf(x);
            d = d.max(((i + 1) as f64 / n - cdf).abs());
            d = d.max((cdf - i as f64 / n).abs());
        }
        let critical = 1.62762 / n.sqrt();
        assert!(d < critical, "KS statistic {d} >= critical {critical}");
    }

    #[test]
    fn class_labels_are_uniform() {
        let data = generate(&SimConfig::new(SimDataset::Two, 30_000, 10, 17)).unwrap();
        let mut counts = [0usize; 3];
        for s in &data {
            if let Label::Class(c) = s.label {
                counts[c - 1] += 1;
            }
        }
        for c in counts {
            let freq = c as f64 / 30_000.0;
            assert!(
                (freq - 1.0 / 3.0).abs() < 0.015,
                "class frequency {freq} outside 1.5% of 1/3"
            );
        }
    }

    #[test]
    fn shapes_and_finiteness() {
        for cfg in [cfg1(20, 3), cfg2(20, 3)] {
            let data = generate(&cfg).unwrap();
            assert_eq!(data.len(), 20);
            for s in &data {
                assert_eq!(s.data.num_channels(), 2);
                assert_eq!(s.data.len(), 250);
                // Curve construction rejects non-finite values already.
            }
        }
    }

    #[test]
    fn labeled_stream_has_transitions_and_consistent_shapes() {
        let cfg = StreamConfig {
            total_len: 5000,
            seed: 23,
            ..StreamConfig::default()
        };
        let (mc, labels) = gen_labeled_stream(&cfg).unwrap();
        assert_eq!(mc.len(), 5000);
        assert_eq!(labels.len(), 5000);
        let transitions = labels.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(transitions >= 3);
        assert!(labels.iter().all(|&l| (1..=3).contains(&l)));
        let (mc2, labels2) = gen_labeled_stream(&cfg).unwrap();
        assert_eq!(mc, mc2);
        assert_eq!(labels, labels2);
    }
}
