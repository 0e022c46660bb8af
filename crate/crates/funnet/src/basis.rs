//! Base-function sets used to parameterize functional weights, filters and
//! biases as linear combinations with trainable scalar coefficients.
//!
//! Two families are supported: Legendre polynomials (canonical domain
//! `[-1, 1]`) and the Fourier basis (constant plus sine-cosine pairs on
//! `[0, 1]`). A weight function living on some interval `[lo, hi]` is pulled
//! back affinely onto the family's canonical domain before evaluation.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Legendre polynomial `P_i(x)` on `[-1, 1]` via the three-term recurrence.
///
/// The first five match the closed forms `1`, `x`, `(3x^2-1)/2`,
/// `(5x^3-3x)/2`, `(35x^4-30x^2+3)/8`.
pub fn legendre_eval(i: usize, x: f64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    if i == 1 {
        return x;
    }
    let mut prev = 1.0;
    let mut curr = x;
    for n in 1..i {
        let next = ((2 * n + 1) as f64 * x * curr - n as f64 * prev) / (n + 1) as f64;
        prev = curr;
        curr = next;
    }
    curr
}

/// Fourier basis function on `[0, 1]`: `i = 0` is the constant `1`,
/// `i = 2m - 1` is `sin(2πmx)` and `i = 2m` is `cos(2πmx)`.
pub fn fourier_eval(i: usize, x: f64) -> f64 {
    if i == 0 {
        return 1.0;
    }
    let m = i.div_ceil(2) as f64;
    if i % 2 == 1 {
        (2.0 * PI * m * x).sin()
    } else {
        (2.0 * PI * m * x).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    Legendre,
    Fourier,
}

/// A finite base-function set: family, count `q + 1` and the interval that is
/// mapped affinely onto the family's canonical domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub count: usize,
    pub domain: (f64, f64),
}

impl BasisSpec {
    pub fn new(family: BasisFamily, count: usize, domain: (f64, f64)) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidConfig("basis count must be >= 1".into()));
        }
        if family == BasisFamily::Fourier && count % 2 == 0 {
            return Err(Error::InvalidConfig(format!(
                "Fourier basis count must be odd (constant plus whole sine-cosine pairs), got {count}"
            )));
        }
        if !(domain.0 < domain.1) {
            return Err(Error::InvalidConfig(format!(
                "basis domain must be a proper interval, got [{}, {}]",
                domain.0, domain.1
            )));
        }
        Ok(BasisSpec {
            family,
            count,
            domain,
        })
    }

    /// Legendre basis on the given domain.
    pub fn legendre(count: usize, domain: (f64, f64)) -> Result<Self> {
        BasisSpec::new(BasisFamily::Legendre, count, domain)
    }

    /// Fourier basis on the given domain.
    pub fn fourier(count: usize, domain: (f64, f64)) -> Result<Self> {
        BasisSpec::new(BasisFamily::Fourier, count, domain)
    }

    /// Map a point of the domain onto the family's canonical domain.
    #[inline]
    pub fn to_canonical(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain;
        let u = (x - lo) / (hi - lo);
        match self.family {
            BasisFamily::Legendre => 2.0 * u - 1.0,
            BasisFamily::Fourier => u,
        }
    }

    /// Evaluate `φ_i` at a point of the domain.
    #[inline]
    pub fn eval(&self, i: usize, x: f64) -> f64 {
        let u = self.to_canonical(x);
        match self.family {
            BasisFamily::Legendre => legendre_eval(i, u),
            BasisFamily::Fourier => fourier_eval(i, u),
        }
    }
}

/// Evaluation cache: `φ_i` at each point of an evaluation grid,
/// row `i`, column `t`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    spec: BasisSpec,
    n_points: usize,
    data: Vec<f64>,
}

impl BasisMatrix {
    /// Evaluate the basis at arbitrary points of the spec's domain.
    pub fn at_points(spec: &BasisSpec, points: &[f64]) -> Self {
        let mut data = Vec::with_capacity(spec.count * points.len());
        for i in 0..spec.count {
            for &x in points {
                data.push(spec.eval(i, x));
            }
        }
        BasisMatrix {
            spec: *spec,
            n_points: points.len(),
            data,
        }
    }

    /// Evaluate on the unit-interval grid `t/T`, `t = 1..T`.
    pub fn on_grid(spec: &BasisSpec, grid: crate::curves::Grid) -> Self {
        let points: Vec<f64> = grid.points().collect();
        BasisMatrix::at_points(spec, &points)
    }

    #[inline]
    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Row of `φ_i` values over the evaluation points.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_points..(i + 1) * self.n_points]
    }

    /// Linear combination `sum_i coeffs[i] * φ_i` over the evaluation points.
    pub fn expand(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.spec.count {
            return Err(Error::CoeffLengthMismatch {
                expected: self.spec.count,
                got: coeffs.len(),
            });
        }
        let mut out = vec![0.0; self.n_points];
        self.expand_into(coeffs, &mut out);
        Ok(out)
    }

    #[inline]
    pub(crate) fn expand_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), self.spec.count);
        debug_assert_eq!(out.len(), self.n_points);
        out.fill(0.0);
        for (i, &c) in coeffs.iter().enumerate() {
            for (o, &b) in out.iter_mut().zip(self.row(i)) {
                *o += c * b;
            }
        }
    }

    /// Adjoint of [`expand`](Self::expand): project per-point gradients back
    /// onto coefficient space, `out[i] += sum_t grad[t] * φ_i(t)`.
    #[inline]
    pub(crate) fn project_add(&self, grad: &[f64], out: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.n_points);
        debug_assert_eq!(out.len(), self.spec.count);
        for (i, o) in out.iter_mut().enumerate() {
            *o += crate::curves::dot(grad, self.row(i));
        }
    }
}

/// Pointwise linear combination of the basis at the given evaluation points.
///
/// Convenience wrapper over a one-shot [`BasisMatrix`]; the cached and
/// uncached paths produce identical values.
pub fn expand(coeffs: &[f64], spec: &BasisSpec, points: &[f64]) -> Result<Vec<f64>> {
    BasisMatrix::at_points(spec, points).expand(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    // Closed forms of the first five Legendre polynomials.
    fn legendre_closed(i: usize, x: f64) -> f64 {
        match i {
            0 => 1.0,
            1 => x,
            2 => 0.5 * (3.0 * x * x - 1.0),
            3 => 0.5 * (5.0 * x.powi(3) - 3.0 * x),
            4 => 0.125 * (35.0 * x.powi(4) - 30.0 * x * x + 3.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn legendre_values_from_closed_forms() {
        assert_eq!(legendre_eval(2, 1.0), 1.0);
        assert_eq!(legendre_eval(3, 0.0), 0.0);
        assert_eq!(legendre_eval(4, 0.0), 0.375);
    }

    #[test]
    fn legendre_recurrence_matches_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x: f64 = rng.random_range(-1.0..=1.0);
            for i in 0..=4 {
                assert_abs_diff_eq!(
                    legendre_eval(i, x),
                    legendre_closed(i, x),
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn fourier_values() {
        assert_eq!(fourier_eval(0, 0.37), 1.0);
        assert_abs_diff_eq!(fourier_eval(1, 0.25), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fourier_eval(2, 0.5), -1.0, epsilon = 1e-15);
    }

    #[test]
    fn fourier_count_must_be_odd() {
        assert!(BasisSpec::fourier(4, (0.0, 1.0)).is_err());
        assert!(BasisSpec::fourier(5, (0.0, 1.0)).is_ok());
    }

    #[test]
    fn expand_constant() {
        let spec = BasisSpec::legendre(5, (0.0, 1.0)).unwrap();
        let grid = Grid::new(10).unwrap();
        let points: Vec<f64> = grid.points().collect();
        let vals = expand(&[2.5, 0.0, 0.0, 0.0, 0.0], &spec, &points).unwrap();
        for v in vals {
            assert_abs_diff_eq!(v, 2.5, epsilon = 1e-15);
        }
    }

    #[test]
    fn expand_linear_legendre_on_unit_interval() {
        // φ_1 pulled back from [-1,1] to [0,1] is 2x - 1.
        let spec = BasisSpec::legendre(5, (0.0, 1.0)).unwrap();
        let grid = Grid::new(16).unwrap();
        let points: Vec<f64> = grid.points().collect();
        let vals = expand(&[0.0, 1.0, 0.0, 0.0, 0.0], &spec, &points).unwrap();
        for (v, x) in vals.iter().zip(points) {
            assert_abs_diff_eq!(*v, 2.0 * x - 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn expand_matches_per_point_oracle() {
        let spec = BasisSpec::legendre(5, (0.0, 1.0)).unwrap();
        let grid = Grid::new(50).unwrap();
        let points: Vec<f64> = grid.points().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let coeffs: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
        let vals = expand(&coeffs, &spec, &points).unwrap();
        for (t, &x) in points.iter().enumerate() {
            let oracle: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| c * legendre_closed(i, 2.0 * x - 1.0))
                .sum();
            assert_abs_diff_eq!(vals[t], oracle, epsilon = 1e-14);
        }
    }

    #[test]
    fn expand_rejects_wrong_length() {
        let spec = BasisSpec::legendre(5, (0.0, 1.0)).unwrap();
        assert!(expand(&[1.0; 4], &spec, &[0.5]).is_err());
    }

    #[test]
    fn basis_matrix_first_row_is_constant_one() {
        for spec in [
            BasisSpec::legendre(5, (-3.0, 2.0)).unwrap(),
            BasisSpec::fourier(5, (0.0, 1.0)).unwrap(),
        ] {
            let m = BasisMatrix::at_points(&spec, &[-3.0, -1.0, 0.0, 1.5, 2.0]);
            assert!(m.row(0).iter().all(|&v| v == 1.0));
        }
    }

    #[test]
    fn cached_and_uncached_evaluation_identical() {
        let spec = BasisSpec::fourier(5, (0.0, 1.0)).unwrap();
        let grid = Grid::new(33).unwrap();
        let points: Vec<f64> = grid.points().collect();
        let cached = BasisMatrix::on_grid(&spec, grid);
        let coeffs = [0.3, -1.2, 0.5, 2.0, -0.7];
        let a = cached.expand(&coeffs).unwrap();
        let b = expand(&coeffs, &spec, &points).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn expand_is_linear_in_coeffs(
            c1 in proptest::collection::vec(-5.0f64..5.0, 5),
            c2 in proptest::collection::vec(-5.0f64..5.0, 5),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let spec = BasisSpec::legendre(5, (0.0, 1.0)).unwrap();
            let grid = Grid::new(20).unwrap();
            let m = BasisMatrix::on_grid(&spec, grid);
            let combo: Vec<f64> = c1.iter().zip(&c2).map(|(x, y)| a * x + b * y).collect();
            let lhs = m.expand(&combo).unwrap();
            let e1 = m.expand(&c1).unwrap();
            let e2 = m.expand(&c2).unwrap();
            for t in 0..lhs.len() {
                let rhs = a * e1[t] + b * e2[t];
                prop_assert!((lhs[t] - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
            }
        }
    }
}
