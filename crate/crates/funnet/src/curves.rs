//! Discretized-function core: grids, curves, integration, inner products and
//! window extraction.
//!
//! A function on `[0, 1]` is observed at the uniform grid points `t/T` for
//! `t = 1..T`. Integrals are discretized with the right-endpoint Riemann rule
//! `(1/T) * sum_t f(t/T)`, which reproduces `∫ 1 = 1` exactly and keeps every
//! integral a plain dot product.

use crate::error::{Error, Result};

/// Uniform evaluation grid `t/T`, `t = 1..T`, on the unit interval.
///
/// The grid is fully determined by its length, so this is a cheap value type.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    len: usize,
}

impl Grid {
    pub fn new(len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::GridTooShort(len));
        }
        Ok(Grid { len })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid point for the 0-based sample index, i.e. `(idx + 1) / T`.
    #[inline]
    pub fn point(&self, idx: usize) -> f64 {
        (idx + 1) as f64 / self.len as f64
    }

    /// All grid points in order.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.point(i))
    }
}

/// Values of one function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: Grid,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Curve { grid, values })
    }

    /// Sample a function at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Curve::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Ordered collection of [`Curve`]s sharing one grid (the channels of one
/// observation or the activations of one layer).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCurve {
    channels: Vec<Curve>,
}

impl MultiCurve {
    pub fn new(channels: Vec<Curve>) -> Result<Self> {
        let first = channels.first().ok_or(Error::EmptyMultiCurve)?;
        let grid = first.grid();
        for c in &channels {
            if c.grid() != grid {
                return Err(Error::GridMismatch {
                    expected: grid.len(),
                    got: c.grid().len(),
                });
            }
        }
        Ok(MultiCurve { channels })
    }

    /// Build from per-channel value vectors on a shared grid.
    pub fn from_values(grid: Grid, values: Vec<Vec<f64>>) -> Result<Self> {
        let channels = values
            .into_iter()
            .map(|v| Curve::new(grid, v))
            .collect::<Result<Vec<_>>>()?;
        MultiCurve::new(channels)
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.channels[0].grid()
    }

    #[inline]
    pub fn channels(&self) -> &[Curve] {
        &self.channels
    }

    #[inline]
    pub fn channel(&self, i: usize) -> &Curve {
        &self.channels[i]
    }

    #[inline]
    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.grid().len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Class assignment of one sample: a single index in `1..=c`, or per-timepoint
/// class probability curves (one channel per class).
#[derive(Debug, Clone, PartialEq)]
pub enum Label {
    Class(usize),
    Curves(MultiCurve),
}

/// A [`MultiCurve`] observation together with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub data: MultiCurve,
    pub label: Label,
}

impl LabeledSample {
    pub fn new(data: MultiCurve, label: Label) -> Result<Self> {
        if let Label::Curves(curves) = &label {
            if curves.grid() != data.grid() {
                return Err(Error::GridMismatch {
                    expected: data.len(),
                    got: curves.len(),
                });
            }
            // Functional labels are pointwise probability vectors.
            for t in 0..curves.len() {
                let mut sum = 0.0;
                for ch in curves.channels() {
                    let v = ch.values()[t];
                    if v < 0.0 {
                        return Err(Error::InvalidConfig(format!(
                            "functional label negative at grid index {t}"
                        )));
                    }
                    sum += v;
                }
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidConfig(format!(
                        "functional label sums to {sum} at grid index {t}, expected 1"
                    )));
                }
            }
        }
        Ok(LabeledSample { data, label })
    }
}

/// Right-endpoint Riemann integral `(1/T) * sum_t f(t/T)` over `[0, 1]`.
pub fn integrate(f: &Curve) -> f64 {
    let sum: f64 = f.values().iter().sum();
    sum / f.len() as f64
}

/// L2 inner product `∫ f·g` under the module quadrature rule.
pub fn inner_product(f: &Curve, g: &Curve) -> Result<f64> {
    if f.grid() != g.grid() {
        return Err(Error::GridMismatch {
            expected: f.len(),
            got: g.len(),
        });
    }
    Ok(dot(f.values(), g.values()) / f.len() as f64)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Number of sliding windows of `window_len` at `step` over a recording of
/// length `len`: `floor((len - window_len) / step) + 1`.
pub fn window_count(len: usize, window_len: usize, step: usize) -> usize {
    (len - window_len) / step + 1
}

/// Lazy iterator over sliding windows; each window is re-gridded to the unit
/// interval on its own grid of length `window_len`.
pub struct Windows<'a> {
    recording: &'a MultiCurve,
    window_len: usize,
    step: usize,
    next: usize,
    remaining: usize,
}

impl<'a> Windows<'a> {
    /// Start offset of the `i`-th window.
    pub fn offset(&self, i: usize) -> usize {
        i * self.step
    }
}

impl<'a> Iterator for Windows<'a> {
    type Item = MultiCurve;

    fn next(&mut self) -> Option<MultiCurve> {
        if self.remaining == 0 {
            return None;
        }
        let start = self.next;
        self.next += self.step;
        self.remaining -= 1;
        let grid = Grid::new(self.window_len).expect("window_len >= 2 checked at construction");
        let channels = self
            .recording
            .channels()
            .iter()
            .map(|c| Curve {
                grid,
                values: c.values()[start..start + self.window_len].to_vec(),
            })
            .collect();
        Some(MultiCurve { channels })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl<'a> ExactSizeIterator for Windows<'a> {}

/// Extract overlapping windows starting at offsets `0, step, 2*step, ...`.
pub fn extract_windows(
    recording: &MultiCurve,
    window_len: usize,
    step: usize,
) -> Result<Windows<'_>> {
    if window_len == 0 || step == 0 {
        return Err(Error::InvalidConfig(
            "window_len and step must be positive".into(),
        ));
    }
    if window_len < 2 {
        return Err(Error::GridTooShort(window_len));
    }
    let len = recording.len();
    if window_len > len {
        return Err(Error::EmptyWindow { window_len, len });
    }
    Ok(Windows {
        recording,
        window_len,
        step,
        next: 0,
        remaining: window_count(len, window_len, step),
    })
}

/// Majority class over the covered timepoints, ties broken toward the lower
/// class index. Labels are 1-based.
pub fn majority_label(labels: &[usize], classes: usize) -> Result<usize> {
    let mut counts = vec![0usize; classes];
    for &l in labels {
        if l == 0 || l > classes {
            return Err(Error::LabelOutOfRange { label: l, classes });
        }
        counts[l - 1] += 1;
    }
    let mut best = 0usize;
    for c in 1..classes {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    Ok(best + 1)
}

/// One-hot per-timepoint label curves for a window of scalar labels.
pub fn label_curves(labels: &[usize], classes: usize) -> Result<MultiCurve> {
    let grid = Grid::new(labels.len())?;
    let mut values = vec![vec![0.0; labels.len()]; classes];
    for (t, &l) in labels.iter().enumerate() {
        if l == 0 || l > classes {
            return Err(Error::LabelOutOfRange { label: l, classes });
        }
        values[l - 1][t] = 1.0;
    }
    MultiCurve::from_values(grid, values)
}
