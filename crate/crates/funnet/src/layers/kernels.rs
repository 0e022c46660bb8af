//! Shared compute kernels behind the functional layers. The public layer ops
//! and the training engine both go through these, so forward semantics and
//! gradients cannot drift apart.
//!
//! Activations are `channels x T` matrices. Filters and weight functions are
//! materialized from their basis coefficients into per-tap / per-gridpoint
//! tables once per parameter update, then applied with plain dot products.

use crate::basis::{BasisFamily, BasisMatrix, BasisSpec};
use crate::curves::dot;
use crate::mat::Mat;

use super::ActivationKind;

/// Basis matrix over the taps of a filter supported on `[-R, R]` samples,
/// affinely mapped onto the family's canonical domain. A single-tap filter
/// degenerates to the canonical midpoint.
pub(crate) fn filter_basis_matrix(basis: &BasisSpec, filter_len: usize) -> BasisMatrix {
    debug_assert!(filter_len % 2 == 1);
    let radius = (filter_len / 2) as f64;
    let points: Vec<f64> = (0..filter_len)
        .map(|m| {
            if radius == 0.0 {
                0.0
            } else {
                m as f64 - radius
            }
        })
        .collect();
    let support = if radius == 0.0 {
        BasisSpec {
            family: basis.family,
            count: basis.count,
            domain: (-1.0, 1.0),
        }
    } else {
        BasisSpec {
            family: basis.family,
            count: basis.count,
            domain: (-radius, radius),
        }
    };
    BasisMatrix::at_points(&support, &points)
}

/// Basis matrix over the evaluation grid `t/T` for weight and bias functions
/// living on `[0, 1]`.
pub(crate) fn grid_basis_matrix(basis: &BasisSpec, grid_len: usize) -> BasisMatrix {
    let spec = BasisSpec {
        family: basis.family,
        count: basis.count,
        domain: (0.0, 1.0),
    };
    let points: Vec<f64> = (1..=grid_len)
        .map(|t| t as f64 / grid_len as f64)
        .collect();
    BasisMatrix::at_points(&spec, &points)
}

/// Expand a `[blocks x count]` coefficient table into a `[blocks x n_points]`
/// value table through the given basis matrix.
pub(crate) fn materialize(coeffs: &[f64], blocks: usize, basis: &BasisMatrix) -> Mat {
    let count = basis.spec().count;
    debug_assert_eq!(coeffs.len(), blocks * count);
    let mut out = Mat::zeros(blocks, basis.n_points());
    for b in 0..blocks {
        basis.expand_into(&coeffs[b * count..(b + 1) * count], out.row_mut(b));
    }
    out
}

/// `out[s] += scale * sum_i taps[i] * x[s - radius + i]`, with `x` extended
/// by zeros. Used as convolution when `taps` is reversed and as correlation
/// when it is not.
fn sliding_dot_add(taps: &[f64], x: &[f64], out: &mut [f64], scale: f64) {
    let radius = taps.len() / 2;
    let len = x.len();
    debug_assert_eq!(out.len(), len);
    for (s, o) in out.iter_mut().enumerate() {
        let i0 = radius.saturating_sub(s);
        let i1 = (taps.len() - 1).min(len - 1 + radius - s);
        if i0 > i1 {
            continue;
        }
        let xoff = s + i0 - radius;
        *o += scale * dot(&taps[i0..=i1], &x[xoff..xoff + (i1 - i0 + 1)]);
    }
}

/// `sum_s a[s] * b[s + shift]` over the overlap of the two slices.
fn shifted_dot(a: &[f64], b: &[f64], shift: i64) -> f64 {
    let len = a.len() as i64;
    debug_assert_eq!(b.len() as i64, len);
    let s0 = (-shift).max(0);
    let s1 = (len - shift).min(len);
    if s0 >= s1 {
        return 0.0;
    }
    dot(
        &a[s0 as usize..s1 as usize],
        &b[(s0 + shift) as usize..(s1 + shift) as usize],
    )
}

/// Functional convolution pre-activation:
/// `pre_k(s) = bias_k(s) + (1/T) sum_j sum_t u_jk(s - t) in_j(t)`,
/// inputs extended by zero outside the unit interval.
pub(crate) fn conv_pre(input: &Mat, taps: &Mat, bias: &Mat, j_in: usize, j_out: usize) -> Mat {
    let t_len = input.cols();
    let filter_len = taps.cols();
    let inv_t = 1.0 / t_len as f64;
    let mut pre = bias.clone();
    debug_assert_eq!(pre.rows(), j_out);
    debug_assert_eq!(pre.cols(), t_len);
    let mut rev = vec![0.0; filter_len];
    for k in 0..j_out {
        for j in 0..j_in {
            let u = taps.row(j * j_out + k);
            for (r, &v) in rev.iter_mut().zip(u.iter().rev()) {
                *r = v;
            }
            sliding_dot_add(&rev, input.row(j), pre.row_mut(k), inv_t);
        }
    }
    pre
}

/// Gradient w.r.t. the convolution input:
/// `gin_j(t) = (1/T) sum_k sum_m u_jk(m) delta_k(t + m - R)`.
pub(crate) fn conv_input_grad(delta: &Mat, taps: &Mat, j_in: usize, j_out: usize) -> Mat {
    let t_len = delta.cols();
    let inv_t = 1.0 / t_len as f64;
    let mut gin = Mat::zeros(j_in, t_len);
    for j in 0..j_in {
        for k in 0..j_out {
            let u = taps.row(j * j_out + k);
            sliding_dot_add(u, delta.row(k), gin.row_mut(j), inv_t);
        }
    }
    gin
}

/// Gradient w.r.t. the materialized filter taps:
/// `G_jk(m) = (1/T) sum_s delta_k(s) in_j(s - m + R)`.
pub(crate) fn conv_tap_grads(
    input: &Mat,
    delta: &Mat,
    filter_len: usize,
    j_in: usize,
    j_out: usize,
) -> Mat {
    let t_len = input.cols();
    let radius = (filter_len / 2) as i64;
    let inv_t = 1.0 / t_len as f64;
    let mut grads = Mat::zeros(j_in * j_out, filter_len);
    for j in 0..j_in {
        for k in 0..j_out {
            let row = grads.row_mut(j * j_out + k);
            for (m, g) in row.iter_mut().enumerate() {
                let shift = radius - m as i64;
                *g = inv_t * shifted_dot(delta.row(k), input.row(j), shift);
            }
        }
    }
    grads
}

/// Scalar functional-dense pre-activation:
/// `z_k = b_k + (1/T) sum_j <w_jk, in_j>` with weights materialized on the grid.
pub(crate) fn dense_scalar_pre(
    input: &Mat,
    weights: &Mat,
    bias: &[f64],
    j_in: usize,
    j_out: usize,
) -> Vec<f64> {
    let inv_t = 1.0 / input.cols() as f64;
    let mut z = bias.to_vec();
    for (k, zk) in z.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..j_in {
            acc += dot(weights.row(j * j_out + k), input.row(j));
        }
        *zk += inv_t * acc;
    }
    z
}

/// Gradient w.r.t. the scalar-dense input: `gin_j(t) = (1/T) sum_k dz_k w_jk(t)`.
pub(crate) fn dense_scalar_input_grad(
    dz: &[f64],
    weights: &Mat,
    j_in: usize,
    j_out: usize,
    t_len: usize,
) -> Mat {
    let inv_t = 1.0 / t_len as f64;
    let mut gin = Mat::zeros(j_in, t_len);
    for j in 0..j_in {
        let row = gin.row_mut(j);
        for (k, &d) in dz.iter().enumerate() {
            let w = weights.row(j * j_out + k);
            let scale = inv_t * d;
            for (r, &wv) in row.iter_mut().zip(w) {
                *r += scale * wv;
            }
        }
    }
    gin
}

/// Pointwise functional-dense pre-activation (fully functional neurons):
/// `pre_k(t) = b_k(t) + sum_j w_jk(t) in_j(t)`.
pub(crate) fn dense_functional_pre(
    input: &Mat,
    weights: &Mat,
    bias: &Mat,
    j_in: usize,
    j_out: usize,
) -> Mat {
    let t_len = input.cols();
    let mut pre = bias.clone();
    for k in 0..j_out {
        let row = pre.row_mut(k);
        for j in 0..j_in {
            let w = weights.row(j * j_out + k);
            let x = input.row(j);
            for ((r, &wv), &xv) in row.iter_mut().zip(w).zip(x) {
                *r += wv * xv;
            }
        }
    }
    debug_assert_eq!(pre.cols(), t_len);
    pre
}

/// Gradient w.r.t. the pointwise-dense input: `gin_j(t) = sum_k delta_k(t) w_jk(t)`.
pub(crate) fn dense_functional_input_grad(
    delta: &Mat,
    weights: &Mat,
    j_in: usize,
    j_out: usize,
) -> Mat {
    let t_len = delta.cols();
    let mut gin = Mat::zeros(j_in, t_len);
    for j in 0..j_in {
        let row = gin.row_mut(j);
        for k in 0..j_out {
            let w = weights.row(j * j_out + k);
            let d = delta.row(k);
            for ((r, &wv), &dv) in row.iter_mut().zip(w).zip(d) {
                *r += wv * dv;
            }
        }
    }
    gin
}

/// Apply an activation to a `channels x T` pre-activation in place. Softmax
/// acts pointwise across channels at each grid point.
pub(crate) fn activate(kind: ActivationKind, pre: &mut Mat) {
    match kind {
        ActivationKind::Identity => {}
        ActivationKind::Elu => {
            for v in pre.data_mut() {
                *v = super::elu(*v);
            }
        }
        ActivationKind::Softmax => softmax_channels(pre),
    }
}

fn softmax_channels(pre: &mut Mat) {
    let (rows, cols) = (pre.rows(), pre.cols());
    for t in 0..cols {
        let mut max = f64::NEG_INFINITY;
        for r in 0..rows {
            max = max.max(pre.at(r, t));
        }
        let mut sum = 0.0;
        for r in 0..rows {
            let e = (pre.at(r, t) - max).exp();
            pre.row_mut(r)[t] = e;
            sum += e;
        }
        for r in 0..rows {
            pre.row_mut(r)[t] /= sum;
        }
    }
}

/// Backpropagate an activation from its output values: given
/// `g = dL/d out`, return `delta = dL/d pre`.
pub(crate) fn activation_backward(kind: ActivationKind, out: &Mat, grad_out: &Mat) -> Mat {
    let mut delta = grad_out.clone();
    match kind {
        ActivationKind::Identity => {}
        ActivationKind::Elu => {
            for (d, &o) in delta.data_mut().iter_mut().zip(out.data()) {
                *d *= super::elu_prime_from_output(o);
            }
        }
        ActivationKind::Softmax => {
            // Pointwise across channels: delta_k = p_k (g_k - sum_c p_c g_c).
            let (rows, cols) = (out.rows(), out.cols());
            for t in 0..cols {
                let mut s = 0.0;
                for r in 0..rows {
                    s += out.at(r, t) * grad_out.at(r, t);
                }
                for r in 0..rows {
                    delta.row_mut(r)[t] = out.at(r, t) * (grad_out.at(r, t) - s);
                }
            }
        }
    }
    delta
}

/// Same for a scalar vector of outputs (the scalar-dense head).
pub(crate) fn activation_backward_vec(kind: ActivationKind, out: &[f64], grad_out: &[f64]) -> Vec<f64> {
    match kind {
        ActivationKind::Identity => grad_out.to_vec(),
        ActivationKind::Elu => grad_out
            .iter()
            .zip(out)
            .map(|(&g, &o)| g * super::elu_prime_from_output(o))
            .collect(),
        ActivationKind::Softmax => {
            let s: f64 = out.iter().zip(grad_out).map(|(&p, &g)| p * g).sum();
            out.iter()
                .zip(grad_out)
                .map(|(&p, &g)| p * (g - s))
                .collect()
        }
    }
}

/// Project per-tap or per-gridpoint gradients back onto basis coefficients,
/// block by block: `out[b*count + i] += sum_p grads[b][p] * phi_i(p)`.
pub(crate) fn project_blocks(grads: &Mat, basis: &BasisMatrix, out: &mut [f64]) {
    let count = basis.spec().count;
    debug_assert_eq!(out.len(), grads.rows() * count);
    for b in 0..grads.rows() {
        basis.project_add(grads.row(b), &mut out[b * count..(b + 1) * count]);
    }
}

/// Fourier bases need an odd count; used by validation helpers.
pub(crate) fn basis_count_valid(basis: &BasisSpec) -> bool {
    basis.count >= 1 && (basis.family != BasisFamily::Fourier || basis.count % 2 == 1)
}
