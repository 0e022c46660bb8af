use crate::basis::{BasisFamily, BasisMatrix, BasisSpec};
use crate::curves::{Label, MultiCurve};
use crate::error::{Error, Result};
use crate::layers::kernels;
use crate::layers::ActivationKind;
use crate::mat::Mat;
use crate::smoothing::LLEConfig;
use rand::Rng;

/// One layer of a model. `Lle` and `Standardize` are fixed preprocessing
/// layers and must precede all trainable layers; the remaining kinds carry
/// trainable basis coefficients stored in the model's flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Lle(LLEConfig),
    Standardize,
    FuncConv {
        in_channels: usize,
        out_channels: usize,
        filter_len: usize,
        basis: BasisSpec,
        activation: ActivationKind,
    },
    FuncDenseScalar {
        in_channels: usize,
        out_neurons: usize,
        basis: BasisSpec,
        activation: ActivationKind,
    },
    FuncDenseFunctional {
        in_channels: usize,
        out_channels: usize,
        basis: BasisSpec,
        activation: ActivationKind,
    },
}

impl LayerSpec {
    pub fn is_fixed(&self) -> bool {
        matches!(self, LayerSpec::Lle(_) | LayerSpec::Standardize)
    }

    fn activation(&self) -> Option<ActivationKind> {
        match self {
            LayerSpec::Lle(_) | LayerSpec::Standardize => None,
            LayerSpec::FuncConv { activation, .. }
            | LayerSpec::FuncDenseScalar { activation, .. }
            | LayerSpec::FuncDenseFunctional { activation, .. } => Some(*activation),
        }
    }
}

/// Which tensor of a layer a parameter block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Filter,
    Weight,
    BiasCoeffs,
    BiasScalar,
}

/// A contiguous slice of the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamBlock {
    pub layer: usize,
    pub kind: ParamKind,
    pub offset: usize,
    pub len: usize,
    /// fan-in and fan-out channel counts of the owning layer
    pub fans: (usize, usize),
    /// basis count of the owning layer (1 for scalar biases)
    pub basis_count: usize,
}

/// Kind of classification head a model ends in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadKind {
    /// Scalar-output functional dense layer with joint softmax.
    Scalar,
    /// Functional output with pointwise softmax across channels.
    Functional,
}

/// Model prediction: class probabilities, or per-class probability curves.
#[derive(Debug, Clone, PartialEq)]
pub enum Prediction {
    Classes(Vec<f64>),
    Curves(MultiCurve),
}

/// An ordered stack of layers plus one flat vector of trainable coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub(crate) input_channels: usize,
    pub(crate) layers: Vec<LayerSpec>,
    pub(crate) params: Vec<f64>,
    pub(crate) blocks: Vec<ParamBlock>,
    pub(crate) head: Option<HeadKind>,
    pub(crate) prefix_len: usize,
    pub(crate) out_units: usize,
}

impl Model {
    /// Validate the layer stack and allocate zeroed parameters.
    pub fn new(input_channels: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        if input_channels == 0 {
            return Err(Error::InvalidConfig("input_channels must be positive".into()));
        }
        if layers.is_empty() {
            return Err(Error::InvalidConfig("model needs at least one layer".into()));
        }
        let mut channels = input_channels;
        let mut blocks = Vec::new();
        let mut offset = 0usize;
        let mut prefix_len = 0usize;
        let mut seen_trainable = false;
        let last = layers.len() - 1;

        for (idx, layer) in layers.iter().enumerate() {
            if layer.is_fixed() {
                if seen_trainable {
                    return Err(Error::InvalidConfig(
                        "fixed preprocessing layers must precede all trainable layers".into(),
                    ));
                }
                prefix_len = idx + 1;
            } else {
                seen_trainable = true;
            }
            if layer.activation() == Some(ActivationKind::Softmax) && idx != last {
                return Err(Error::InvalidConfig(
                    "softmax is only valid on the final layer".into(),
                ));
            }
            match layer {
                LayerSpec::Lle(cfg) => {
                    cfg.validate()?;
                    channels *= cfg.derivative_orders + 1;
                }
                LayerSpec::Standardize => {}
                LayerSpec::FuncConv {
                    in_channels,
                    out_channels,
                    filter_len,
                    basis,
                    ..
                } => {
                    if *in_channels != channels {
                        return Err(Error::ChannelMismatch {
                            expected: channels,
                            got: *in_channels,
                        });
                    }
                    if filter_len % 2 == 0 || *filter_len == 0 {
                        return Err(Error::InvalidConfig(format!(
                            "filter_len must be odd and positive, got {filter_len}"
                        )));
                    }
                    if !kernels::basis_count_valid(basis) {
                        return Err(Error::InvalidConfig("invalid basis count".into()));
                    }
                    let q1 = basis.count;
                    blocks.push(ParamBlock {
                        layer: idx,
                        kind: ParamKind::Filter,
                        offset,
                        len: in_channels * out_channels * q1,
                        fans: (*in_channels, *out_channels),
                        basis_count: q1,
                    });
                    offset += in_channels * out_channels * q1;
                    blocks.push(ParamBlock {
                        layer: idx,
                        kind: ParamKind::BiasCoeffs,
                        offset,
                        len: out_channels * q1,
                        fans: (*in_channels, *out_channels),
                        basis_count: q1,
                    });
                    offset += out_channels * q1;
                    channels = *out_channels;
                }
                LayerSpec::FuncDenseFunctional {
                    in_channels,
                    out_channels,
                    basis,
                    ..
                } => {
                    if *in_channels != channels {
                        return Err(Error::ChannelMismatch {
                            expected: channels,
                            got: *in_channels,
                        });
                    }
                    if !kernels::basis_count_valid(basis) {
                        return Err(Error::InvalidConfig("invalid basis count".into()));
                    }
                    let q1 = basis.count;
                    blocks.push(ParamBlock {
                        layer: idx,
                        kind: ParamKind::Weight,
                        offset,
                        len: in_channels * out_channels * q1,
                        fans: (*in_channels, *out_channels),
                        basis_count: q1,
                    });
                    offset += in_channels * out_channels * q1;
                    blocks.push(ParamBlock {
                        layer: idx,
                        kind: ParamKind::BiasCoeffs,
                        offset,
                        len: out_channels * q1,
                        fans: (*in_channels, *out_channels),
                        basis_count: q1,
                    });
                    offset += out_channels * q1;
                    channels = *out_channels;
                }
                LayerSpec::FuncDenseScalar {
                    in_channels,
                    out_neurons,
                    basis,
                    ..
                } => {
                    if idx != last {
                        return Err(Error::InvalidConfig(
                            "scalar-output dense layer must be the final layer".into(),
                        ));
                    }
                    if *in_channels != channels {
                        return Err(Error::ChannelMismatch {
                            expected: channels,
                            got: *in_channels,
                        });
                    }
                    if !kernels::basis_count_valid(basis) {
                        return Err(Error::InvalidConfig("invalid basis count".into()));
                    }
                    let q1 = basis.count;
                    blocks.push(ParamBlock {
                        layer: idx,
                        kind: ParamKind::Weight,
                        offset,
                        len: in_channels * out_neurons * q1,
                        fans: (*in_channels, *out_neurons),
                        basis_count: q1,
                    });
                    offset += in_channels * out_neurons * q1;
                    blocks.push(ParamBlock {
                        layer: idx,
                        kind: ParamKind::BiasScalar,
                        offset,
                        len: *out_neurons,
                        fans: (*in_channels, *out_neurons),
                        basis_count: 1,
                    });
                    offset += out_neurons;
                    channels = *out_neurons;
                }
            }
        }

        let head = match &layers[last] {
            LayerSpec::FuncDenseScalar { activation, .. }
                if *activation == ActivationKind::Softmax =>
            {
                Some(HeadKind::Scalar)
            }
            LayerSpec::FuncConv { activation, .. }
            | LayerSpec::FuncDenseFunctional { activation, .. }
                if *activation == ActivationKind::Softmax =>
            {
                Some(HeadKind::Functional)
            }
            _ => None,
        };

        Ok(Model {
            input_channels,
            layers,
            params: vec![0.0; offset],
            blocks,
            head,
            prefix_len,
            out_units: channels,
        })
    }

    /// The default scalar-output architecture: LLE, standardization, one ELU
    /// functional convolution per entry of `conv_filters`, and a softmax
    /// functional dense head.
    pub fn scalar_classifier(d: usize, classes: usize, spec: &ModelSpec) -> Result<Model> {
        spec.validate()?;
        let basis = BasisSpec::new(spec.basis_family, spec.basis_count, (0.0, 1.0))?;
        let mut layers = vec![LayerSpec::Lle(spec.lle.clone()), LayerSpec::Standardize];
        let mut channels = d * (spec.lle.derivative_orders + 1);
        for &filters in &spec.conv_filters {
            layers.push(LayerSpec::FuncConv {
                in_channels: channels,
                out_channels: filters,
                filter_len: spec.filter_len,
                basis,
                activation: ActivationKind::Elu,
            });
            channels = filters;
        }
        layers.push(LayerSpec::FuncDenseScalar {
            in_channels: channels,
            out_neurons: classes,
            basis,
            activation: ActivationKind::Softmax,
        });
        Model::new(d, layers)
    }

    /// The functional-output architecture: as [`Model::scalar_classifier`]
    /// but ending in a third convolution with pointwise softmax.
    pub fn functional_classifier(d: usize, classes: usize, spec: &ModelSpec) -> Result<Model> {
        spec.validate()?;
        let basis = BasisSpec::new(spec.basis_family, spec.basis_count, (0.0, 1.0))?;
        let mut layers = vec![LayerSpec::Lle(spec.lle.clone()), LayerSpec::Standardize];
        let mut channels = d * (spec.lle.derivative_orders + 1);
        for &filters in &spec.conv_filters {
            layers.push(LayerSpec::FuncConv {
                in_channels: channels,
                out_channels: filters,
                filter_len: spec.filter_len,
                basis,
                activation: ActivationKind::Elu,
            });
            channels = filters;
        }
        layers.push(LayerSpec::FuncConv {
            in_channels: channels,
            out_channels: classes,
            filter_len: spec.filter_len,
            basis,
            activation: ActivationKind::Softmax,
        });
        Model::new(d, layers)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn head(&self) -> Option<HeadKind> {
        self.head
    }

    pub fn input_channels(&self) -> usize {
        self.input_channels
    }

    /// Number of output classes (head units) of the final layer.
    pub fn num_classes(&self) -> usize {
        self.out_units
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    /// Draw filter and weight coefficients uniformly on
    /// `±sqrt(6 / ((fan_in + fan_out) * basis_count)) * s`; biases start at
    /// zero. The factor `s` undoes the `1/T` quadrature shrink of the layer
    /// so that pre-activations stay O(1) under unit-norm standardized
    /// inputs: `T / sqrt(filter_len)` for convolutions, `sqrt(T)` for the
    /// scalar-product dense layer, and 1 for pointwise functional neurons.
    /// Blocks are initialized in layout order, so the draw sequence is a pure
    /// function of the RNG state.
    pub fn init_params(&mut self, rng: &mut impl Rng, grid_len: usize) {
        let t = grid_len as f64;
        for block in &self.blocks {
            match block.kind {
                ParamKind::Filter | ParamKind::Weight => {
                    let scale = match &self.layers[block.layer] {
                        LayerSpec::FuncConv { filter_len, .. } => t / (*filter_len as f64).sqrt(),
                        LayerSpec::FuncDenseScalar { .. } => t.sqrt(),
                        LayerSpec::FuncDenseFunctional { .. } => 1.0,
                        _ => unreachable!("fixed layers have no parameters"),
                    };
                    let (fan_in, fan_out) = block.fans;
                    let limit = (6.0 / ((fan_in + fan_out) as f64 * block.basis_count as f64))
                        .sqrt()
                        * scale;
                    for v in &mut self.params[block.offset..block.offset + block.len] {
                        *v = rng.random_range(-limit..limit);
                    }
                }
                ParamKind::BiasCoeffs | ParamKind::BiasScalar => {
                    for v in &mut self.params[block.offset..block.offset + block.len] {
                        *v = 0.0;
                    }
                }
            }
        }
    }

    /// [`Model::init_params`] with the crate's named generator (ChaCha8)
    /// seeded from `seed`.
    pub fn init_params_seeded(&mut self, seed: u64, grid_len: usize) {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        self.init_params(&mut rng, grid_len);
    }

    /// Per-parameter reparameterization scale for a given grid length: the
    /// same quadrature-compensation factor used at initialization. The
    /// optimizer steps in these normalized coordinates, which makes training
    /// behave like gradient descent on the effective per-tap weights
    /// regardless of `T`.
    pub(crate) fn param_scales(&self, grid_len: usize) -> Vec<f64> {
        let t = grid_len as f64;
        let mut scales = vec![1.0; self.params.len()];
        for block in &self.blocks {
            if matches!(block.kind, ParamKind::Filter | ParamKind::Weight) {
                let s = match &self.layers[block.layer] {
                    LayerSpec::FuncConv { filter_len, .. } => t / (*filter_len as f64).sqrt(),
                    LayerSpec::FuncDenseScalar { .. } => t.sqrt(),
                    LayerSpec::FuncDenseFunctional { .. } => 1.0,
                    _ => unreachable!("fixed layers have no parameters"),
                };
                for v in &mut scales[block.offset..block.offset + block.len] {
                    *v = s;
                }
            }
        }
        scales
    }

    /// Run the fixed preprocessing prefix on one raw observation.
    pub(crate) fn run_prefix(&self, sample: &MultiCurve) -> Result<MultiCurve> {
        if sample.num_channels() != self.input_channels {
            return Err(Error::ChannelMismatch {
                expected: self.input_channels,
                got: sample.num_channels(),
            });
        }
        let mut x = sample.clone();
        for layer in &self.layers[..self.prefix_len] {
            x = match layer {
                LayerSpec::Lle(cfg) => crate::smoothing::lle_smooth(&x, cfg)?,
                LayerSpec::Standardize => crate::layers::standardize(&x)?,
                _ => unreachable!("prefix holds only fixed layers"),
            };
        }
        Ok(x)
    }

    /// Materialize filters, weights and bias curves for a given grid length.
    pub(crate) fn compile(&self, t_len: usize) -> Result<Compiled> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (idx, layer) in self.layers.iter().enumerate() {
            let compiled = match layer {
                LayerSpec::Lle(_) | LayerSpec::Standardize => None,
                LayerSpec::FuncConv {
                    in_channels,
                    out_channels,
                    filter_len,
                    basis,
                    activation,
                } => {
                    if *filter_len > t_len {
                        return Err(Error::InvalidConfig(format!(
                            "filter_len {filter_len} exceeds grid length {t_len}"
                        )));
                    }
                    let fb = kernels::filter_basis_matrix(basis, *filter_len);
                    let gb = kernels::grid_basis_matrix(basis, t_len);
                    let (filters, bias) = self.layer_param_slices(idx);
                    let taps = kernels::materialize(filters, in_channels * out_channels, &fb);
                    let bias_vals = kernels::materialize(bias, *out_channels, &gb);
                    Some(CompiledLayer {
                        table: taps,
                        bias_vals: Some(bias_vals),
                        bias_scalar: None,
                        filter_basis: Some(fb),
                        grid_basis: gb,
                        in_channels: *in_channels,
                        out_channels: *out_channels,
                        activation: *activation,
                    })
                }
                LayerSpec::FuncDenseFunctional {
                    in_channels,
                    out_channels,
                    basis,
                    activation,
                } => {
                    let gb = kernels::grid_basis_matrix(basis, t_len);
                    let (weights, bias) = self.layer_param_slices(idx);
                    let table = kernels::materialize(weights, in_channels * out_channels, &gb);
                    let bias_vals = kernels::materialize(bias, *out_channels, &gb);
                    Some(CompiledLayer {
                        table,
                        bias_vals: Some(bias_vals),
                        bias_scalar: None,
                        filter_basis: None,
                        grid_basis: gb,
                        in_channels: *in_channels,
                        out_channels: *out_channels,
                        activation: *activation,
                    })
                }
                LayerSpec::FuncDenseScalar {
                    in_channels,
                    out_neurons,
                    basis,
                    activation,
                } => {
                    let gb = kernels::grid_basis_matrix(basis, t_len);
                    let (weights, bias) = self.layer_param_slices(idx);
                    let table = kernels::materialize(weights, in_channels * out_neurons, &gb);
                    Some(CompiledLayer {
                        table,
                        bias_vals: None,
                        bias_scalar: Some(bias.to_vec()),
                        filter_basis: None,
                        grid_basis: gb,
                        in_channels: *in_channels,
                        out_channels: *out_neurons,
                        activation: *activation,
                    })
                }
            };
            layers.push(compiled);
        }
        Ok(Compiled { layers })
    }

    /// (filters/weights, bias) parameter slices of a trainable layer.
    fn layer_param_slices(&self, layer_idx: usize) -> (&[f64], &[f64]) {
        let mut main: Option<&ParamBlock> = None;
        let mut bias: Option<&ParamBlock> = None;
        for b in &self.blocks {
            if b.layer == layer_idx {
                match b.kind {
                    ParamKind::Filter | ParamKind::Weight => main = Some(b),
                    ParamKind::BiasCoeffs | ParamKind::BiasScalar => bias = Some(b),
                }
            }
        }
        let main = main.expect("trainable layer has a main block");
        let bias = bias.expect("trainable layer has a bias block");
        (
            &self.params[main.offset..main.offset + main.len],
            &self.params[bias.offset..bias.offset + bias.len],
        )
    }

    /// Forward pass through the trainable suffix, optionally caching
    /// layer inputs and outputs for the backward pass.
    pub(crate) fn run_suffix(
        &self,
        compiled: &Compiled,
        input: Mat,
        mut cache: Option<&mut Vec<SuffixCache>>,
    ) -> Result<Value> {
        let mut value = Value::Curves(input);
        for idx in self.prefix_len..self.layers.len() {
            let cl = compiled.layers[idx]
                .as_ref()
                .expect("suffix layers are compiled");
            let x = match value {
                Value::Curves(m) => m,
                Value::Scalars(_) => {
                    return Err(Error::InvalidConfig(
                        "scalar output must come from the final layer".into(),
                    ))
                }
            };
            if x.rows() != cl.in_channels {
                return Err(Error::ChannelMismatch {
                    expected: cl.in_channels,
                    got: x.rows(),
                });
            }
            let out = match &self.layers[idx] {
                LayerSpec::FuncConv { .. } => {
                    let mut pre = kernels::conv_pre(
                        &x,
                        &cl.table,
                        cl.bias_vals.as_ref().unwrap(),
                        cl.in_channels,
                        cl.out_channels,
                    );
                    kernels::activate(cl.activation, &mut pre);
                    Value::Curves(pre)
                }
                LayerSpec::FuncDenseFunctional { .. } => {
                    let mut pre = kernels::dense_functional_pre(
                        &x,
                        &cl.table,
                        cl.bias_vals.as_ref().unwrap(),
                        cl.in_channels,
                        cl.out_channels,
                    );
                    kernels::activate(cl.activation, &mut pre);
                    Value::Curves(pre)
                }
                LayerSpec::FuncDenseScalar { .. } => {
                    let z = kernels::dense_scalar_pre(
                        &x,
                        &cl.table,
                        cl.bias_scalar.as_ref().unwrap(),
                        cl.in_channels,
                        cl.out_channels,
                    );
                    let out = match cl.activation {
                        ActivationKind::Identity => z,
                        ActivationKind::Elu => z.into_iter().map(crate::layers::elu).collect(),
                        ActivationKind::Softmax => crate::layers::softmax_head(&z),
                    };
                    Value::Scalars(out)
                }
                _ => unreachable!("suffix holds only trainable layers"),
            };
            if let Some(c) = cache.as_deref_mut() {
                c.push(SuffixCache {
                    input: x,
                    output: out.clone(),
                });
            }
            value = out;
        }
        Ok(value)
    }

    /// Full forward pass on one observation: preprocessing prefix plus the
    /// trainable stack, ending in class probabilities or probability curves.
    pub fn forward(&self, sample: &MultiCurve) -> Result<Prediction> {
        if self.head.is_none() {
            return Err(Error::InvalidConfig(
                "model has no classification head (final softmax layer)".into(),
            ));
        }
        let pre = self.run_prefix(sample)?;
        let grid = pre.grid();
        let compiled = self.compile(grid.len())?;
        let x = Mat::from_multicurve(&pre);
        match self.run_suffix(&compiled, x, None)? {
            Value::Scalars(p) => Ok(Prediction::Classes(p)),
            Value::Curves(m) => Ok(Prediction::Curves(m.to_multicurve(grid)?)),
        }
    }
}

/// Per-grid-length materialization of every trainable layer.
pub(crate) struct Compiled {
    pub layers: Vec<Option<CompiledLayer>>,
}

pub(crate) struct CompiledLayer {
    /// materialized filter taps (conv) or weight functions (dense)
    pub table: Mat,
    pub bias_vals: Option<Mat>,
    pub bias_scalar: Option<Vec<f64>>,
    pub filter_basis: Option<BasisMatrix>,
    pub grid_basis: BasisMatrix,
    pub in_channels: usize,
    pub out_channels: usize,
    pub activation: ActivationKind,
}

/// Activation value flowing between layers.
#[derive(Debug, Clone)]
pub(crate) enum Value {
    Curves(Mat),
    Scalars(Vec<f64>),
}

/// Cached input/output of one trainable layer for the backward pass.
pub(crate) struct SuffixCache {
    pub input: Mat,
    pub output: Value,
}

/// Default experiment architecture description.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub lle: LLEConfig,
    pub conv_filters: Vec<usize>,
    pub filter_len: usize,
    pub basis_count: usize,
    pub basis_family: BasisFamily,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.lle.validate()?;
        if self.conv_filters.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one convolutional layer is required".into(),
            ));
        }
        if self.conv_filters.iter().any(|&f| f == 0) {
            return Err(Error::InvalidConfig("filter counts must be positive".into()));
        }
        if self.filter_len % 2 == 0 || self.filter_len == 0 {
            return Err(Error::InvalidConfig(format!(
                "filter_len must be odd and positive, got {}",
                self.filter_len
            )));
        }
        if self.basis_count == 0 {
            return Err(Error::InvalidConfig("basis count must be >= 1".into()));
        }
        Ok(())
    }
}

impl Default for ModelSpec {
    /// The simulation-study architecture: local linear smoothing with
    /// bandwidths 5 and 10, two convolutions with 20 and 10 filters of size
    /// 25, and the first five Legendre polynomials as base functions.
    fn default() -> Self {
        ModelSpec {
            lle: LLEConfig::local_linear_default(),
            conv_filters: vec![20, 10],
            filter_len: 25,
            basis_count: 5,
            basis_family: BasisFamily::Legendre,
        }
    }
}

const PROB_CLAMP: f64 = 1e-12;

/// Categorical cross-entropy. For scalar labels this is `-ln p_true`; for
/// functional labels the per-timepoint cross-entropy averaged over the grid.
/// Probabilities are clamped at `1e-12`.
///
/// Panics if the prediction and label kinds or shapes do not match; kind
/// agreement is a structural property checked when datasets are validated.
pub fn cross_entropy(pred: &Prediction, label: &Label) -> f64 {
    match (pred, label) {
        (Prediction::Classes(p), Label::Class(c)) => {
            assert!(*c >= 1 && *c <= p.len(), "label {c} out of range");
            -(p[c - 1].max(PROB_CLAMP)).ln()
        }
        (Prediction::Curves(p), Label::Curves(y)) => {
            assert_eq!(p.grid(), y.grid(), "prediction/label grid mismatch");
            assert_eq!(
                p.num_channels(),
                y.num_channels(),
                "prediction/label class count mismatch"
            );
            let t_len = p.len();
            let mut total = 0.0;
            for t in 0..t_len {
                for (pc, yc) in p.channels().iter().zip(y.channels()) {
                    let yv = yc.values()[t];
                    if yv != 0.0 {
                        total -= yv * pc.values()[t].max(PROB_CLAMP).ln();
                    }
                }
            }
            total / t_len as f64
        }
        _ => panic!("prediction and label kinds do not match"),
    }
}

pub(crate) fn ce_scalar(p: &[f64], class: usize) -> f64 {
    -(p[class - 1].max(PROB_CLAMP)).ln()
}

pub(crate) fn ce_functional(p: &Mat, y: &Mat) -> f64 {
    let t_len = p.cols();
    let mut total = 0.0;
    for k in 0..p.rows() {
        let pr = p.row(k);
        let yr = y.row(k);
        for t in 0..t_len {
            if yr[t] != 0.0 {
                total -= yr[t] * pr[t].max(PROB_CLAMP).ln();
            }
        }
    }
    total / t_len as f64
}

/// dLoss/dProbability for the scalar head (before the softmax Jacobian).
pub(crate) fn ce_scalar_grad(p: &[f64], class: usize) -> Vec<f64> {
    let mut g = vec![0.0; p.len()];
    g[class - 1] = -1.0 / p[class - 1].max(PROB_CLAMP);
    g
}

/// dLoss/dProbability for the functional head.
pub(crate) fn ce_functional_grad(p: &Mat, y: &Mat) -> Mat {
    let t_len = p.cols();
    let inv_t = 1.0 / t_len as f64;
    let mut g = Mat::zeros(p.rows(), t_len);
    for k in 0..p.rows() {
        let pr = p.row(k);
        let yr = y.row(k);
        let gr = g.row_mut(k);
        for t in 0..t_len {
            if yr[t] != 0.0 {
                gr[t] = -inv_t * yr[t] / pr[t].max(PROB_CLAMP);
            }
        }
    }
    g
}

/// Per-sample scalar accuracy: 1 if the argmax class matches (ties resolved
/// toward the lower index), else 0.
pub(crate) fn scalar_accuracy(p: &[f64], class: usize) -> f64 {
    if argmax(p) + 1 == class {
        1.0
    } else {
        0.0
    }
}

/// Fraction of grid points where predicted and true argmax classes agree.
pub(crate) fn functional_accuracy(p: &Mat, y: &Mat) -> f64 {
    let t_len = p.cols();
    let mut hits = 0usize;
    for t in 0..t_len {
        let (mut bp, mut by) = (0usize, 0usize);
        for k in 1..p.rows() {
            if p.at(k, t) > p.at(bp, t) {
                bp = k;
            }
            if y.at(k, t) > y.at(by, t) {
                by = k;
            }
        }
        if bp == by {
            hits += 1;
        }
    }
    hits as f64 / t_len as f64
}

// Lower index wins ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
