//! Confusion matrices and classification metrics: accuracy, macro recall,
//! macro precision and per-timepoint accuracy for functional predictions.

use crate::curves::MultiCurve;
use crate::error::{Error, Result};

/// `c x c` counts, rows indexed by true class, columns by predicted class
/// (both 1-based at the API).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<usize>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Result<Self> {
        if classes == 0 {
            return Err(Error::InvalidConfig("need at least one class".into()));
        }
        Ok(ConfusionMatrix {
            classes,
            counts: vec![0; classes * classes],
        })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn add(&mut self, true_class: usize, predicted: usize) -> Result<()> {
        for c in [true_class, predicted] {
            if c == 0 || c > self.classes {
                return Err(Error::LabelOutOfRange {
                    label: c,
                    classes: self.classes,
                });
            }
        }
        self.counts[(true_class - 1) * self.classes + (predicted - 1)] += 1;
        Ok(())
    }

    /// Merge counts of another matrix of the same size.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::ChannelMismatch {
                expected: self.classes,
                got: other.classes,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn count(&self, true_class: usize, predicted: usize) -> usize {
        self.counts[(true_class - 1) * self.classes + (predicted - 1)]
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    fn row_sum(&self, row: usize) -> usize {
        self.counts[row * self.classes..(row + 1) * self.classes]
            .iter()
            .sum()
    }

    fn col_sum(&self, col: usize) -> usize {
        (0..self.classes)
            .map(|r| self.counts[r * self.classes + col])
            .sum()
    }

    fn trace(&self) -> usize {
        (0..self.classes)
            .map(|i| self.counts[i * self.classes + i])
            .sum()
    }

    /// CSV rendering: raw counts followed by percent-normalized entries
    /// (percent of all evaluated samples, as in the confusion figures).
    pub fn to_csv(&self) -> String {
        let total = self.total().max(1) as f64;
        let mut out = String::from("section,true_class");
        for c in 1..=self.classes {
            out.push_str(&format!(",pred_{c}"));
        }
        out.push('\n');
        for r in 0..self.classes {
            out.push_str(&format!("counts,{}", r + 1));
            for c in 0..self.classes {
                out.push_str(&format!(",{}", self.counts[r * self.classes + c]));
            }
            out.push('\n');
        }
        for r in 0..self.classes {
            out.push_str(&format!("percent,{}", r + 1));
            for c in 0..self.classes {
                let pct = 100.0 * self.counts[r * self.classes + c] as f64 / total;
                out.push_str(&format!(",{pct:.1}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Tally a confusion matrix from parallel label sequences (1-based labels).
pub fn confusion(
    true_labels: &[usize],
    predicted_labels: &[usize],
    classes: usize,
) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted_labels.len() {
        return Err(Error::LengthMismatch {
            expected: true_labels.len(),
            got: predicted_labels.len(),
        });
    }
    let mut cm = ConfusionMatrix::new(classes)?;
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        cm.add(t, p)?;
    }
    Ok(cm)
}

/// Accuracy, macro recall and macro precision of a confusion matrix.
/// A class with zero denominator contributes 0 to the macro average and is
/// reported in the corresponding flagged list.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_recall: f64,
    pub macro_precision: f64,
    pub per_class_recall: Vec<f64>,
    pub per_class_precision: Vec<f64>,
    /// classes with no true samples (recall denominator zero)
    pub flagged_recall: Vec<usize>,
    /// classes never predicted (precision denominator zero)
    pub flagged_precision: Vec<usize>,
}

impl Metrics {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        out.push_str(&format!("accuracy,{}\n", self.accuracy));
        out.push_str(&format!("macro_recall,{}\n", self.macro_recall));
        out.push_str(&format!("macro_precision,{}\n", self.macro_precision));
        for (i, r) in self.per_class_recall.iter().enumerate() {
            out.push_str(&format!("recall_class_{},{}\n", i + 1, r));
        }
        for (i, p) in self.per_class_precision.iter().enumerate() {
            out.push_str(&format!("precision_class_{},{}\n", i + 1, p));
        }
        out
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InvalidConfig("empty confusion matrix".into()));
    }
    let c = cm.classes();
    let mut per_class_recall = Vec::with_capacity(c);
    let mut per_class_precision = Vec::with_capacity(c);
    let mut flagged_recall = Vec::new();
    let mut flagged_precision = Vec::new();
    for i in 0..c {
        let diag = cm.counts[i * c + i] as f64;
        let row = cm.row_sum(i);
        let col = cm.col_sum(i);
        if row == 0 {
            flagged_recall.push(i + 1);
            per_class_recall.push(0.0);
        } else {
            per_class_recall.push(diag / row as f64);
        }
        if col == 0 {
            flagged_precision.push(i + 1);
            per_class_precision.push(0.0);
        } else {
            per_class_precision.push(diag / col as f64);
        }
    }
    Ok(Metrics {
        accuracy: cm.trace() as f64 / total as f64,
        macro_recall: per_class_recall.iter().sum::<f64>() / c as f64,
        macro_precision: per_class_precision.iter().sum::<f64>() / c as f64,
        per_class_recall,
        per_class_precision,
        flagged_recall,
        flagged_precision,
    })
}

/// Per-timepoint accuracy of functional predictions: the pointwise argmax of
/// the predicted probability curves compared to the argmax of the true label
/// curves, averaged over the grid.
pub fn per_timepoint_accuracy(truth: &MultiCurve, predicted: &MultiCurve) -> Result<f64> {
    if truth.grid() != predicted.grid() {
        return Err(Error::GridMismatch {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    if truth.num_channels() != predicted.num_channels() {
        return Err(Error::ChannelMismatch {
            expected: truth.num_channels(),
            got: predicted.num_channels(),
        });
    }
    let t_len = truth.len();
    let argmax_at = |mc: &MultiCurve, t: usize| {
        let mut best = 0usize;
        for k in 1..mc.num_channels() {
            if mc.channel(k).values()[t] > mc.channel(best).values()[t] {
                best = k;
            }
        }
        best
    };
    let hits = (0..t_len)
        .filter(|&t| argmax_at(truth, t) == argmax_at(predicted, t))
        .count();
    Ok(hits as f64 / t_len as f64)
}
