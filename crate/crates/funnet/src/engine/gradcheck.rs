use super::model::{ce_functional, ce_scalar, Model, Value};
use super::train::{forward_backward, prep_label, PrepLabel, PrepSample};
use crate::curves::LabeledSample;
use crate::error::Result;
use crate::mat::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Central-difference step for numeric gradients.
pub const FD_STEP: f64 = 1e-5;

/// Floor applied to the relative-error denominator, so that coefficients
/// with (numerically) zero gradient do not produce spurious failures.
const REL_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckEntry {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

/// Comparison of analytic and central-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn from_pairs(pairs: Vec<(usize, f64, f64)>, tolerance: f64) -> Self {
        let entries: Vec<GradCheckEntry> = pairs
            .into_iter()
            .map(|(index, analytic, numeric)| GradCheckEntry {
                index,
                analytic,
                numeric,
                rel_error: rel_error(analytic, numeric),
            })
            .collect();
        let max_rel_error = entries.iter().map(|e| e.rel_error).fold(0.0, f64::max);
        GradCheckReport {
            passed: max_rel_error <= tolerance,
            entries,
            max_rel_error,
            tolerance,
        }
    }
}

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR)
}

fn loss_at(model: &Model, x: &Mat, label: &PrepLabel) -> Result<f64> {
    let compiled = model.compile(x.cols())?;
    let out = model.run_suffix(&compiled, x.clone(), None)?;
    Ok(match (&out, label) {
        (Value::Scalars(p), PrepLabel::Class(c)) => ce_scalar(p, *c),
        (Value::Curves(p), PrepLabel::Curves(y)) => ce_functional(p, y),
        _ => unreachable!("label kinds validated by prep_label"),
    })
}

/// Compare analytic gradients against central finite differences on up to
/// `max_coeffs` coefficients (all of them when the model is small enough;
/// otherwise a seeded random subset). A model without trainable coefficients
/// yields an empty passing report.
pub fn gradient_check(
    model: &Model,
    sample: &LabeledSample,
    tolerance: f64,
    max_coeffs: usize,
    seed: u64,
) -> Result<GradCheckReport> {
    let n = model.num_params();
    if n == 0 {
        return Ok(GradCheckReport {
            entries: Vec::new(),
            max_rel_error: 0.0,
            tolerance,
            passed: true,
        });
    }

    let pre = model.run_prefix(&sample.data)?;
    let prep = PrepSample {
        x: Mat::from_multicurve(&pre),
        label: prep_label(model, &sample.label)?,
    };

    let compiled = model.compile(prep.x.cols())?;
    let (_, _, analytic) = forward_backward(model, &compiled, &prep)?;

    let indices: Vec<usize> = if n <= max_coeffs {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, n, max_coeffs).into_vec()
    };

    let mut probe = model.clone();
    let mut pairs = Vec::with_capacity(indices.len());
    for idx in indices {
        let original = probe.params()[idx];
        probe.params_mut()[idx] = original + FD_STEP;
        let loss_plus = loss_at(&probe, &prep.x, &prep.label)?;
        probe.params_mut()[idx] = original - FD_STEP;
        let loss_minus = loss_at(&probe, &prep.x, &prep.label)?;
        probe.params_mut()[idx] = original;
        let numeric = (loss_plus - loss_minus) / (2.0 * FD_STEP);
        pairs.push((idx, analytic[idx], numeric));
    }
    Ok(GradCheckReport::from_pairs(pairs, tolerance))
}
