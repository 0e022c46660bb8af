//! Minimal row-major matrix used for channel-by-timepoint activations and
//! materialized filter/weight tables in the hot paths.

use crate::curves::{Grid, MultiCurve};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_multicurve(mc: &MultiCurve) -> Self {
        let rows = mc.num_channels();
        let cols = mc.len();
        let mut data = Vec::with_capacity(rows * cols);
        for ch in mc.channels() {
            data.extend_from_slice(ch.values());
        }
        Mat { rows, cols, data }
    }

    pub fn to_multicurve(&self, grid: Grid) -> Result<MultiCurve> {
        debug_assert_eq!(grid.len(), self.cols);
        MultiCurve::from_values(grid, (0..self.rows).map(|r| self.row(r).to_vec()).collect())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}
