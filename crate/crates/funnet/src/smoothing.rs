//! Local polynomial estimation of the underlying functions and their
//! derivatives.
//!
//! At a grid point `x = s/T` the estimator solves the kernel-weighted least
//! squares problem over the samples with `|t - s| <= h` (bandwidth `h` in
//! grid samples, kernel argument `(t - s)/h`) and reads the derivative of
//! interest off the fitted monomial coefficients. On the interior the
//! estimator is a fixed filter; near the boundaries the window is truncated
//! and solved as-is.

use crate::curves::{Curve, MultiCurve};
use crate::error::{Error, Result};

/// Quartic kernel `K(x) = 15/16 (1 - x^2)^2` on `[-1, 1]`, zero elsewhere.
pub fn quartic_kernel(x: f64) -> f64 {
    if x.abs() > 1.0 {
        return 0.0;
    }
    let u = 1.0 - x * x;
    15.0 / 16.0 * u * u
}

/// Smoothing kernel: symmetric, supported on `[-1, 1]`, unit integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelSpec {
    #[default]
    Quartic,
}

impl KernelSpec {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            KernelSpec::Quartic => quartic_kernel(x),
        }
    }
}

/// Configuration of the local polynomial estimator.
///
/// `bandwidths[k]` is the bandwidth (in grid samples) used when estimating
/// the `k`-th derivative, for `k = 0..=derivative_orders`.
#[derive(Debug, Clone, PartialEq)]
pub struct LLEConfig {
    pub degree: usize,
    pub bandwidths: Vec<usize>,
    pub kernel: KernelSpec,
    pub derivative_orders: usize,
}

impl LLEConfig {
    pub fn new(
        degree: usize,
        bandwidths: Vec<usize>,
        kernel: KernelSpec,
        derivative_orders: usize,
    ) -> Result<Self> {
        let cfg = LLEConfig {
            degree,
            bandwidths,
            kernel,
            derivative_orders,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.derivative_orders > self.degree {
            return Err(Error::InvalidConfig(format!(
                "derivative order {} exceeds polynomial degree {}",
                self.derivative_orders, self.degree
            )));
        }
        if self.bandwidths.len() != self.derivative_orders + 1 {
            return Err(Error::InvalidConfig(format!(
                "expected {} bandwidths (orders 0..={}), got {}",
                self.derivative_orders + 1,
                self.derivative_orders,
                self.bandwidths.len()
            )));
        }
        for &h in &self.bandwidths {
            if h < self.degree + 1 {
                return Err(Error::InvalidConfig(format!(
                    "bandwidth {h} too small for degree {} (need >= {})",
                    self.degree,
                    self.degree + 1
                )));
            }
        }
        Ok(())
    }

    /// Local linear estimation with the quartic kernel, function bandwidth 5
    /// and derivative bandwidth 10.
    pub fn local_linear_default() -> Self {
        LLEConfig {
            degree: 1,
            bandwidths: vec![5, 10],
            kernel: KernelSpec::Quartic,
            derivative_orders: 1,
        }
    }

    fn bandwidth_for(&self, order: usize) -> Result<usize> {
        if order > self.degree {
            return Err(Error::InvalidConfig(format!(
                "requested order {} exceeds degree {}",
                order, self.degree
            )));
        }
        self.bandwidths.get(order).copied().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "no bandwidth configured for derivative order {order}"
            ))
        })
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Solve the `n x n` system `a * x = b` for `nrhs` right-hand sides with
/// partial pivoting. `a` is row-major and destroyed; `b` holds the solutions
/// on return (column-major: rhs `r` lives at `b[r*n..(r+1)*n]`).
fn solve_small(a: &mut [f64], n: usize, b: &mut [f64], nrhs: usize) -> Option<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n * nrhs);
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            for r in 0..nrhs {
                b.swap(r * n + col, r * n + pivot);
            }
        }
        let inv = 1.0 / a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] * inv;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            for r in 0..nrhs {
                b[r * n + row] -= factor * b[r * n + col];
            }
        }
    }
    for r in 0..nrhs {
        let x = &mut b[r * n..(r + 1) * n];
        for row in (0..n).rev() {
            let mut acc = x[row];
            for k in row + 1..n {
                acc -= a[row * n + k] * x[k];
            }
            x[row] = acc / a[row * n + row];
        }
    }
    Some(())
}

/// Weighted least squares fit of one window. Regressors are scaled to
/// `(t - s)/h` for conditioning; the monomial-scale coefficients are
/// recovered afterwards. Returns `order! * beta_order`.
fn wls_at(
    values: &[f64],
    center: usize,
    h: usize,
    degree: usize,
    kernel: KernelSpec,
    order: usize,
    len: usize,
) -> Result<f64> {
    let lo = center.saturating_sub(h);
    let hi = (center + h).min(len - 1);
    let n_points = hi - lo + 1;
    let n = degree + 1;
    if n_points < n {
        return Err(Error::RankDeficient {
            point: center,
            needed: n,
            got: n_points,
        });
    }

    let h_f = h as f64;
    let mut a = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    // Moments sum_t w_t u^m for m = 0..2*degree, u = (t - center)/h.
    let mut moments = vec![0.0; 2 * degree + 1];
    for t in lo..=hi {
        let u = (t as f64 - center as f64) / h_f;
        let w = kernel.eval(u);
        if w == 0.0 {
            continue;
        }
        let mut pw = w;
        for m in moments.iter_mut() {
            *m += pw;
            pw *= u;
        }
        let y = values[t];
        let mut py = w * y;
        for r in rhs.iter_mut() {
            *r += py;
            py *= u;
        }
    }
    for j in 0..n {
        for k in 0..n {
            a[j * n + k] = moments[j + k];
        }
    }
    solve_small(&mut a, n, &mut rhs, 1).ok_or(Error::RankDeficient {
        point: center,
        needed: n,
        got: n_points,
    })?;
    // beta in monomial scale (t/T - x)^j is rhs[j] * (T/h)^j.
    let scale = (len as f64 / h_f).powi(order as i32);
    Ok(factorial(order) * rhs[order] * scale)
}

/// Local polynomial estimate of `order!·beta_order` at one grid point, i.e.
/// the `order`-th derivative of the underlying function at `x = (idx+1)/T`.
pub fn lle_fit_at(signal: &Curve, idx: usize, config: &LLEConfig, order: usize) -> Result<f64> {
    config.validate()?;
    if idx >= signal.len() {
        return Err(Error::InvalidConfig(format!(
            "grid index {idx} out of range 0..{}",
            signal.len()
        )));
    }
    let h = config.bandwidth_for(order)?;
    wls_at(
        signal.values(),
        idx,
        h,
        config.degree,
        config.kernel,
        order,
        signal.len(),
    )
}

/// Smooth every channel and estimate derivatives up to
/// `config.derivative_orders`. Output channels are ordered
/// `[ch1 order0, ..., chd order0, ch1 order1, ...]`.
pub fn lle_smooth(sample: &MultiCurve, config: &LLEConfig) -> Result<MultiCurve> {
    config.validate()?;
    let len = sample.len();
    let grid = sample.grid();
    let mut out = Vec::with_capacity(sample.num_channels() * (config.derivative_orders + 1));
    for order in 0..=config.derivative_orders {
        let h = config.bandwidth_for(order)?;
        for ch in sample.channels() {
            let mut vals = Vec::with_capacity(len);
            for idx in 0..len {
                vals.push(wls_at(
                    ch.values(),
                    idx,
                    h,
                    config.degree,
                    config.kernel,
                    order,
                    len,
                )?);
            }
            out.push(Curve::new(grid, vals)?);
        }
    }
    MultiCurve::new(out)
}

/// Smooth a single channel at one derivative order.
pub fn lle_smooth_channel(signal: &Curve, config: &LLEConfig, order: usize) -> Result<Curve> {
    config.validate()?;
    let h = config.bandwidth_for(order)?;
    let len = signal.len();
    let mut vals = Vec::with_capacity(len);
    for idx in 0..len {
        vals.push(wls_at(
            signal.values(),
            idx,
            h,
            config.degree,
            config.kernel,
            order,
            len,
        )?);
    }
    Curve::new(signal.grid(), vals)
}

/// The interior filter of length `2h + 1` whose discrete convolution with the
/// signal equals [`lle_fit_at`] at all points farther than `h` samples from
/// the boundary. `grid_len` is the `T` of the target grid (the monomial scale
/// of the estimator depends on it).
pub fn lle_filter(config: &LLEConfig, order: usize, grid_len: usize) -> Result<Vec<f64>> {
    config.validate()?;
    if grid_len < 2 {
        return Err(Error::GridTooShort(grid_len));
    }
    let h = config.bandwidth_for(order)?;
    let n = config.degree + 1;
    let taps = 2 * h + 1;
    if taps > grid_len {
        return Err(Error::InvalidConfig(format!(
            "filter of {taps} taps does not fit a grid of length {grid_len}"
        )));
    }
    let h_f = h as f64;

    let mut a = vec![0.0; n * n];
    // One right-hand side per tap: column m is w_m * [u^0, ..., u^degree].
    let mut b = vec![0.0; n * taps];
    for m in 0..taps {
        let u = (m as f64 - h_f) / h_f;
        let w = config.kernel.eval(u);
        let mut pw = w;
        for j in 0..n {
            b[m * n + j] = pw;
            pw *= u;
        }
        let mut pu = w;
        for j in 0..n {
            for k in 0..n {
                a[j * n + k] += pu * u.powi(k as i32);
            }
            pu *= u;
        }
    }
    solve_small(&mut a, n, &mut b, taps).ok_or(Error::RankDeficient {
        point: h,
        needed: n,
        got: taps,
    })?;
    let scale = factorial(order) * (grid_len as f64 / h_f).powi(order as i32);
    Ok((0..taps).map(|m| scale * b[m * n + order]).collect())
}

/// Convolve a signal with an interior filter of odd length, truncating at the
/// boundaries (used for the filter/WLS equivalence checks; only interior
/// outputs are meaningful).
pub fn convolve_interior(values: &[f64], filter: &[f64]) -> Vec<f64> {
    let radius = filter.len() / 2;
    let len = values.len();
    let mut out = vec![0.0; len];
    for (s, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (m, &f) in filter.iter().enumerate() {
            let t = s as i64 + m as i64 - radius as i64;
            if t >= 0 && (t as usize) < len {
                acc += f * values[t as usize];
            }
        }
        *o = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Grid;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn curve(t: usize, f: impl Fn(f64) -> f64) -> Curve {
        Curve::from_fn(Grid::new(t).unwrap(), f).unwrap()
    }

    /// Independent per-point WLS oracle on the unscaled monomials
    /// `((t - s)/T)^j`, solved by Cramer's rule for degree 1.
    fn wls_oracle_deg1(values: &[f64], s: usize, h: usize, order: usize) -> f64 {
        let len = values.len();
        let lo = s.saturating_sub(h);
        let hi = (s + h).min(len - 1);
        let (mut s0, mut s1, mut s2, mut r0, mut r1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for t in lo..=hi {
            let w = quartic_kernel((t as f64 - s as f64) / h as f64);
            let u = (t as f64 - s as f64) / len as f64;
            s0 += w;
            s1 += w * u;
            s2 += w * u * u;
            r0 += w * values[t];
            r1 += w * u * values[t];
        }
        let det = s0 * s2 - s1 * s1;
        let beta0 = (s2 * r0 - s1 * r1) / det;
        let beta1 = (s0 * r1 - s1 * r0) / det;
        if order == 0 {
            beta0
        } else {
            beta1
        }
    }

    #[test]
    fn quartic_kernel_values() {
        assert_eq!(quartic_kernel(0.0), 0.9375);
        assert_eq!(quartic_kernel(1.0), 0.0);
        assert_eq!(quartic_kernel(-1.0), 0.0);
        assert_eq!(quartic_kernel(0.5), 0.52734375);
        assert_eq!(quartic_kernel(1.5), 0.0);
    }

    #[test]
    fn quartic_kernel_unit_integral() {
        // Midpoint quadrature over [-1, 1].
        let n = 200_000;
        let sum: f64 = (0..n)
            .map(|i| quartic_kernel(-1.0 + (i as f64 + 0.5) * 2.0 / n as f64))
            .sum();
        assert_abs_diff_eq!(sum * 2.0 / n as f64, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn local_linear_reproduces_lines() {
        let cfg = LLEConfig::local_linear_default();
        let sig = curve(250, |x| 2.0 * x + 1.0);
        for idx in [10, 100, 200] {
            let x = (idx + 1) as f64 / 250.0;
            let f0 = lle_fit_at(&sig, idx, &cfg, 0).unwrap();
            assert_abs_diff_eq!(f0, 2.0 * x + 1.0, epsilon = 1e-10);
            let f1 = lle_fit_at(&sig, idx, &cfg, 1).unwrap();
            assert_abs_diff_eq!(f1, 2.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn noisy_constant_gives_kernel_weighted_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<f64> = (0..80).map(|_| 1.0 + rng.random_range(-0.5..0.5)).collect();
        let sig = Curve::new(Grid::new(80).unwrap(), vals.clone()).unwrap();
        let cfg = LLEConfig::local_linear_default();
        let s = 40;
        let h = 5;
        // At an interior point the odd kernel moments vanish, so the local
        // linear intercept equals the kernel-weighted window mean.
        let (mut num, mut den) = (0.0, 0.0);
        for t in s - h..=s + h {
            let w = quartic_kernel((t as f64 - s as f64) / h as f64);
            num += w * vals[t];
            den += w;
        }
        let fit = lle_fit_at(&sig, s, &cfg, 0).unwrap();
        assert_abs_diff_eq!(fit, num / den, epsilon = 1e-12);
        assert_abs_diff_eq!(fit, wls_oracle_deg1(&vals, s, h, 0), epsilon = 1e-12);
    }

    #[test]
    fn lle_smooth_channel_layout() {
        let g = Grid::new(60).unwrap();
        let sample = MultiCurve::from_values(
            g,
            vec![
                (0..60).map(|t| t as f64 / 60.0).collect(),
                (0..60).map(|t| 1.0 - t as f64 / 60.0).collect(),
            ],
        )
        .unwrap();
        let cfg = LLEConfig::local_linear_default();
        let out = lle_smooth(&sample, &cfg).unwrap();
        assert_eq!(out.num_channels(), 4);
        // order-0 of channel 0 tracks the ramp, order-1 (channel 2) its slope.
        assert_abs_diff_eq!(out.channel(0).values()[30], 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(out.channel(2).values()[30], 1.0, epsilon = 1e-7);
        assert_abs_diff_eq!(out.channel(3).values()[30], -1.0, epsilon = 1e-7);
    }

    #[test]
    fn lle_smooth_zero_input_gives_zero() {
        let g = Grid::new(40).unwrap();
        let sample = MultiCurve::from_values(g, vec![vec![0.0; 40]]).unwrap();
        let out = lle_smooth(&sample, &LLEConfig::local_linear_default()).unwrap();
        for ch in out.channels() {
            assert!(ch.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn lle_smooth_matches_per_point_fit_and_oracle() {
        let t = 250;
        let sig = curve(t, |x| (2.0 * PI * x).sin());
        let sample = MultiCurve::new(vec![sig.clone()]).unwrap();
        let cfg = LLEConfig::local_linear_default();
        let out = lle_smooth(&sample, &cfg).unwrap();
        let h = 5;
        for idx in 0..t {
            // Same code path as lle_fit_at: exact agreement.
            let fit = lle_fit_at(&sig, idx, &cfg, 0).unwrap();
            assert_eq!(out.channel(0).values()[idx], fit);
            // Independent Cramer-rule oracle.
            assert_abs_diff_eq!(
                fit,
                wls_oracle_deg1(sig.values(), idx, h, 0),
                epsilon = 1e-12
            );
            // Smoothing bias stays small on the interior.
            if idx >= h && idx < t - h {
                let x = (idx + 1) as f64 / t as f64;
                assert_abs_diff_eq!(fit, (2.0 * PI * x).sin(), epsilon = 5e-3);
            }
        }
    }

    #[test]
    fn filter_moments() {
        let cfg = LLEConfig::local_linear_default();
        let f0 = lle_filter(&cfg, 0, 250).unwrap();
        assert_eq!(f0.len(), 11);
        let sum0: f64 = f0.iter().sum();
        assert_abs_diff_eq!(sum0, 1.0, epsilon = 1e-12);
        for m in 0..f0.len() {
            assert_abs_diff_eq!(f0[m], f0[f0.len() - 1 - m], epsilon = 1e-12);
        }

        let f1 = lle_filter(&cfg, 1, 250).unwrap();
        assert_eq!(f1.len(), 21);
        let sum1: f64 = f1.iter().sum();
        assert!(sum1.abs() < 1e-12);
        for m in 0..f1.len() {
            assert_abs_diff_eq!(f1[m], -f1[f1.len() - 1 - m], epsilon = 1e-12);
        }
    }

    #[test]
    fn filter_convolution_equals_wls_on_interior() {
        let t = 120;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let vals: Vec<f64> = (0..t).map(|_| rng.random_range(-2.0..2.0)).collect();
        let sig = Curve::new(Grid::new(t).unwrap(), vals).unwrap();
        let cfg = LLEConfig::local_linear_default();
        for order in 0..=1 {
            let h = cfg.bandwidths[order];
            let filt = lle_filter(&cfg, order, t).unwrap();
            let conv = convolve_interior(sig.values(), &filt);
            for idx in h..t - h {
                let fit = lle_fit_at(&sig, idx, &cfg, order).unwrap();
                assert_abs_diff_eq!(conv[idx], fit, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficiency_on_tiny_window() {
        // Degree 2 needs 3 window points; a grid of length 2 cannot supply them.
        let cfg = LLEConfig::new(2, vec![3], KernelSpec::Quartic, 0).unwrap();
        let sig = curve(2, |x| x);
        assert!(matches!(
            lle_fit_at(&sig, 0, &cfg, 0),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(LLEConfig::new(1, vec![5, 10], KernelSpec::Quartic, 2).is_err());
        assert!(LLEConfig::new(1, vec![5], KernelSpec::Quartic, 1).is_err());
        assert!(LLEConfig::new(1, vec![1, 10], KernelSpec::Quartic, 1).is_err());
        assert!(LLEConfig::new(1, vec![5, 10], KernelSpec::Quartic, 1).is_ok());
    }

    #[test]
    fn order_without_bandwidth_is_rejected() {
        // degree 2 permits order 2 fits, but only orders 0..=1 have bandwidths.
        let cfg = LLEConfig::new(2, vec![5, 10], KernelSpec::Quartic, 1).unwrap();
        let sig = curve(50, |x| x * x);
        assert!(lle_fit_at(&sig, 25, &cfg, 2).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn polynomial_reproduction_on_interior(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let t = 100;
            let sig = curve(t, |x| a * x + b);
            let cfg = LLEConfig::local_linear_default();
            let h = cfg.bandwidths[0];
            for idx in h..t - h {
                let x = (idx + 1) as f64 / t as f64;
                let fit = lle_fit_at(&sig, idx, &cfg, 0).unwrap();
                prop_assert!((fit - (a * x + b)).abs() < 1e-9);
            }
        }

        #[test]
        fn smoothing_is_linear(
            seed in 0u64..1000,
            a in -2.0f64..2.0,
            b in -2.0f64..2.0,
        ) {
            let t = 60;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = Grid::new(t).unwrap();
            let xv: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
            let yv: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
            let combo: Vec<f64> = xv.iter().zip(&yv).map(|(x, y)| a * x + b * y).collect();
            let cfg = LLEConfig::local_linear_default();
            let sx = lle_smooth(&MultiCurve::from_values(g, vec![xv]).unwrap(), &cfg).unwrap();
            let sy = lle_smooth(&MultiCurve::from_values(g, vec![yv]).unwrap(), &cfg).unwrap();
            let sc = lle_smooth(&MultiCurve::from_values(g, vec![combo]).unwrap(), &cfg).unwrap();
            for ch in 0..2 {
                for t in 0..sc.len() {
                    let lhs = sc.channel(ch).values()[t];
                    let rhs = a * sx.channel(ch).values()[t] + b * sy.channel(ch).values()[t];
                    prop_assert!((lhs - rhs).abs() < 1e-11 * (1.0 + rhs.abs()));
                }
            }
        }
    }
}
