//! Forward semantics of the functional layers: standardization, functional
//! convolution, functional dense layers (scalar and functional output) and
//! activations.
//!
//! Filters and weight functions are linear combinations of a finite basis;
//! only the scalar combination coefficients are trainable. Convolutions use
//! zero extension outside the unit interval, stride 1 and "same" output
//! length, so activations stay functions on `[0, 1]`.

pub(crate) mod kernels;

use crate::basis::BasisSpec;
use crate::curves::{integrate, inner_product, Curve, MultiCurve};
use crate::error::{Error, Result};
use crate::mat::Mat;

/// Activation applied inside a layer. Softmax is only valid on a final layer
/// and acts jointly: across neurons for the scalar head, across channels at
/// each grid point for functional outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivationKind {
    Identity,
    Elu,
    Softmax,
}

/// Exponential linear unit: `x` for `x >= 0`, `exp(x) - 1` otherwise.
#[inline]
pub fn elu(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        x.exp() - 1.0
    }
}

/// ELU derivative recovered from the activation output (`out = elu(pre)`).
#[inline]
pub(crate) fn elu_prime_from_output(out: f64) -> f64 {
    if out >= 0.0 {
        1.0
    } else {
        out + 1.0
    }
}

/// Numerically stable softmax (max-shifted), summing to 1.
pub fn softmax_head(values: &[f64]) -> Vec<f64> {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = values.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Center each channel by its integral mean and scale it to unit L2 norm
/// under the module quadrature. Constant channels are rejected.
pub fn standardize(sample: &MultiCurve) -> Result<MultiCurve> {
    let grid = sample.grid();
    let mut out = Vec::with_capacity(sample.num_channels());
    for (i, ch) in sample.channels().iter().enumerate() {
        let mean = integrate(ch);
        let centered: Vec<f64> = ch.values().iter().map(|v| v - mean).collect();
        let centered = Curve::new(grid, centered)?;
        let norm = inner_product(&centered, &centered)?.sqrt();
        if norm < 1e-12 {
            return Err(Error::DegenerateChannel { channel: i, norm });
        }
        out.push(Curve::new(
            grid,
            centered.values().iter().map(|v| v / norm).collect(),
        )?);
    }
    MultiCurve::new(out)
}

/// Parameters of one functional convolutional layer.
///
/// `filter_coeffs` has shape `[in_channels x out_channels x count]`
/// (row-major), `bias_coeffs` has shape `[out_channels x count]`. The filter
/// support `[-b, b]` (here `filter_len` grid samples) and the bias domain
/// `[0, 1]` are both mapped affinely onto the basis family's canonical
/// domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncConvParams {
    pub in_channels: usize,
    pub out_channels: usize,
    pub filter_len: usize,
    pub filter_coeffs: Vec<f64>,
    pub bias_coeffs: Vec<f64>,
    pub basis: BasisSpec,
    pub activation: ActivationKind,
}

impl FuncConvParams {
    /// Zero-initialized parameters.
    pub fn zeros(
        in_channels: usize,
        out_channels: usize,
        filter_len: usize,
        basis: BasisSpec,
        activation: ActivationKind,
    ) -> Result<Self> {
        let p = FuncConvParams {
            in_channels,
            out_channels,
            filter_len,
            filter_coeffs: vec![0.0; in_channels * out_channels * basis.count],
            bias_coeffs: vec![0.0; out_channels * basis.count],
            basis,
            activation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::InvalidConfig("channel counts must be positive".into()));
        }
        if self.filter_len % 2 == 0 || self.filter_len == 0 {
            return Err(Error::InvalidConfig(format!(
                "filter_len must be odd and positive, got {}",
                self.filter_len
            )));
        }
        if !kernels::basis_count_valid(&self.basis) {
            return Err(Error::InvalidConfig("invalid basis count".into()));
        }
        let want = self.in_channels * self.out_channels * self.basis.count;
        if self.filter_coeffs.len() != want {
            return Err(Error::CoeffLengthMismatch {
                expected: want,
                got: self.filter_coeffs.len(),
            });
        }
        let want = self.out_channels * self.basis.count;
        if self.bias_coeffs.len() != want {
            return Err(Error::CoeffLengthMismatch {
                expected: want,
                got: self.bias_coeffs.len(),
            });
        }
        Ok(())
    }
}

/// Bias of a functional dense layer: a plain scalar per neuron for the
/// scalar-output head, or basis coefficients of a bias function for fully
/// functional neurons.
#[derive(Debug, Clone, PartialEq)]
pub enum DenseBias {
    Scalar(Vec<f64>),
    Coeffs(Vec<f64>),
}

/// Parameters of a functional dense layer (either output kind).
///
/// `weight_coeffs` has shape `[in_channels x out_neurons x count]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncDenseParams {
    pub in_channels: usize,
    pub out_neurons: usize,
    pub weight_coeffs: Vec<f64>,
    pub bias: DenseBias,
    pub basis: BasisSpec,
    pub activation: ActivationKind,
}

impl FuncDenseParams {
    /// Zero-initialized scalar-output parameters.
    pub fn zeros_scalar(
        in_channels: usize,
        out_neurons: usize,
        basis: BasisSpec,
        activation: ActivationKind,
    ) -> Result<Self> {
        let p = FuncDenseParams {
            in_channels,
            out_neurons,
            weight_coeffs: vec![0.0; in_channels * out_neurons * basis.count],
            bias: DenseBias::Scalar(vec![0.0; out_neurons]),
            basis,
            activation,
        };
        p.validate()?;
        Ok(p)
    }

    /// Zero-initialized functional-output parameters.
    pub fn zeros_functional(
        in_channels: usize,
        out_neurons: usize,
        basis: BasisSpec,
        activation: ActivationKind,
    ) -> Result<Self> {
        let p = FuncDenseParams {
            in_channels,
            out_neurons,
            weight_coeffs: vec![0.0; in_channels * out_neurons * basis.count],
            bias: DenseBias::Coeffs(vec![0.0; out_neurons * basis.count]),
            basis,
            activation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_neurons == 0 {
            return Err(Error::InvalidConfig("channel counts must be positive".into()));
        }
        if !kernels::basis_count_valid(&self.basis) {
            return Err(Error::InvalidConfig("invalid basis count".into()));
        }
        let want = self.in_channels * self.out_neurons * self.basis.count;
        if self.weight_coeffs.len() != want {
            return Err(Error::CoeffLengthMismatch {
                expected: want,
                got: self.weight_coeffs.len(),
            });
        }
        match &self.bias {
            DenseBias::Scalar(b) => {
                if b.len() != self.out_neurons {
                    return Err(Error::CoeffLengthMismatch {
                        expected: self.out_neurons,
                        got: b.len(),
                    });
                }
            }
            DenseBias::Coeffs(b) => {
                let want = self.out_neurons * self.basis.count;
                if b.len() != want {
                    return Err(Error::CoeffLengthMismatch {
                        expected: want,
                        got: b.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Functional convolution forward pass. Output grid equals the input grid.
pub fn func_conv_forward(input: &MultiCurve, params: &FuncConvParams) -> Result<MultiCurve> {
    params.validate()?;
    if input.num_channels() != params.in_channels {
        return Err(Error::ChannelMismatch {
            expected: params.in_channels,
            got: input.num_channels(),
        });
    }
    let t_len = input.len();
    if params.filter_len > t_len {
        return Err(Error::InvalidConfig(format!(
            "filter_len {} exceeds grid length {}",
            params.filter_len, t_len
        )));
    }
    let fb = kernels::filter_basis_matrix(&params.basis, params.filter_len);
    let gb = kernels::grid_basis_matrix(&params.basis, t_len);
    let taps = kernels::materialize(
        &params.filter_coeffs,
        params.in_channels * params.out_channels,
        &fb,
    );
    let bias = kernels::materialize(&params.bias_coeffs, params.out_channels, &gb);
    let x = Mat::from_multicurve(input);
    let mut pre = kernels::conv_pre(&x, &taps, &bias, params.in_channels, params.out_channels);
    kernels::activate(params.activation, &mut pre);
    pre.to_multicurve(input.grid())
}

/// Scalar-output functional dense forward pass:
/// `H_k = sigma(b_k + sum_j <w_jk, H_j>)`.
pub fn func_dense_scalar_forward(input: &MultiCurve, params: &FuncDenseParams) -> Result<Vec<f64>> {
    params.validate()?;
    if input.num_channels() != params.in_channels {
        return Err(Error::ChannelMismatch {
            expected: params.in_channels,
            got: input.num_channels(),
        });
    }
    let bias = match &params.bias {
        DenseBias::Scalar(b) => b,
        DenseBias::Coeffs(_) => {
            return Err(Error::InvalidConfig(
                "scalar-output dense layer requires a scalar bias".into(),
            ))
        }
    };
    let gb = kernels::grid_basis_matrix(&params.basis, input.len());
    let weights = kernels::materialize(
        &params.weight_coeffs,
        params.in_channels * params.out_neurons,
        &gb,
    );
    let x = Mat::from_multicurve(input);
    let z = kernels::dense_scalar_pre(&x, &weights, bias, params.in_channels, params.out_neurons);
    Ok(match params.activation {
        ActivationKind::Identity => z,
        ActivationKind::Elu => z.into_iter().map(elu).collect(),
        ActivationKind::Softmax => softmax_head(&z),
    })
}

/// Fully functional dense forward pass:
/// `H_k(t) = sigma(b_k(t) + sum_j w_jk(t) H_j(t))`.
pub fn func_dense_functional_forward(
    input: &MultiCurve,
    params: &FuncDenseParams,
) -> Result<MultiCurve> {
    params.validate()?;
    if input.num_channels() != params.in_channels {
        return Err(Error::ChannelMismatch {
            expected: params.in_channels,
            got: input.num_channels(),
        });
    }
    let bias_coeffs = match &params.bias {
        DenseBias::Coeffs(b) => b,
        DenseBias::Scalar(_) => {
            return Err(Error::InvalidConfig(
                "functional dense layer requires a functional bias".into(),
            ))
        }
    };
    let gb = kernels::grid_basis_matrix(&params.basis, input.len());
    let weights = kernels::materialize(
        &params.weight_coeffs,
        params.in_channels * params.out_neurons,
        &gb,
    );
    let bias = kernels::materialize(bias_coeffs, params.out_neurons, &gb);
    let x = Mat::from_multicurve(input);
    let mut pre =
        kernels::dense_functional_pre(&x, &weights, &bias, params.in_channels, params.out_neurons);
    kernels::activate(params.activation, &mut pre);
    pre.to_multicurve(input.grid())
}
