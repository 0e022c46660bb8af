//! Flat text serialization of model architecture and coefficients.
//!
//! Format (one record per line, comma separated):
//!
//! ```text
//! funnet-model,v1
//! input_channels,<d>
//! layer,lle,<degree>,<orders>,<h0;h1;...>
//! layer,standardize
//! layer,func_conv,<in>,<out>,<filter_len>,<family>,<count>,<activation>
//! layer,func_dense_scalar,<in>,<out>,<family>,<count>,<activation>
//! layer,func_dense_functional,<in>,<out>,<family>,<count>,<activation>
//! coeffs,<layer_index>,<filter|weight|bias_coeffs|bias_scalar>,<len>,v0,v1,...
//! ```
//!
//! Coefficients are row-major in the shapes documented on the layer types.
//! Floats use Rust's shortest round-trip representation, so save/load is
//! bit-exact.

use super::model::{LayerSpec, Model, ParamKind};
use crate::basis::{BasisFamily, BasisSpec};
use crate::error::{Error, Result};
use crate::layers::ActivationKind;
use crate::smoothing::{KernelSpec, LLEConfig};
use std::path::Path;

fn activation_name(a: ActivationKind) -> &'static str {
    match a {
        ActivationKind::Identity => "identity",
        ActivationKind::Elu => "elu",
        ActivationKind::Softmax => "softmax",
    }
}

fn parse_activation(s: &str) -> Result<ActivationKind> {
    match s {
        "identity" => Ok(ActivationKind::Identity),
        "elu" => Ok(ActivationKind::Elu),
        "softmax" => Ok(ActivationKind::Softmax),
        _ => Err(Error::InvalidConfig(format!("unknown activation {s:?}"))),
    }
}

fn family_name(f: BasisFamily) -> &'static str {
    match f {
        BasisFamily::Legendre => "legendre",
        BasisFamily::Fourier => "fourier",
    }
}

fn parse_family(s: &str) -> Result<BasisFamily> {
    match s {
        "legendre" => Ok(BasisFamily::Legendre),
        "fourier" => Ok(BasisFamily::Fourier),
        _ => Err(Error::InvalidConfig(format!("unknown basis family {s:?}"))),
    }
}

fn kind_name(k: ParamKind) -> &'static str {
    match k {
        ParamKind::Filter => "filter",
        ParamKind::Weight => "weight",
        ParamKind::BiasCoeffs => "bias_coeffs",
        ParamKind::BiasScalar => "bias_scalar",
    }
}

impl Model {
    /// Serialize architecture and coefficients to the documented text format.
    pub fn to_params_string(&self) -> String {
        let mut out = String::from("funnet-model,v1\n");
        out.push_str(&format!("input_channels,{}\n", self.input_channels));
        for layer in &self.layers {
            match layer {
                LayerSpec::Lle(cfg) => {
                    let hs: Vec<String> = cfg.bandwidths.iter().map(|h| h.to_string()).collect();
                    out.push_str(&format!(
                        "layer,lle,{},{},{}\n",
                        cfg.degree,
                        cfg.derivative_orders,
                        hs.join(";")
                    ));
                }
                LayerSpec::Standardize => out.push_str("layer,standardize\n"),
                LayerSpec::FuncConv {
                    in_channels,
                    out_channels,
                    filter_len,
                    basis,
                    activation,
                } => out.push_str(&format!(
                    "layer,func_conv,{},{},{},{},{},{}\n",
                    in_channels,
                    out_channels,
                    filter_len,
                    family_name(basis.family),
                    basis.count,
                    activation_name(*activation)
                )),
                LayerSpec::FuncDenseScalar {
                    in_channels,
                    out_neurons,
                    basis,
                    activation,
                } => out.push_str(&format!(
                    "layer,func_dense_scalar,{},{},{},{},{}\n",
                    in_channels,
                    out_neurons,
                    family_name(basis.family),
                    basis.count,
                    activation_name(*activation)
                )),
                LayerSpec::FuncDenseFunctional {
                    in_channels,
                    out_channels,
                    basis,
                    activation,
                } => out.push_str(&format!(
                    "layer,func_dense_functional,{},{},{},{},{}\n",
                    in_channels,
                    out_channels,
                    family_name(basis.family),
                    basis.count,
                    activation_name(*activation)
                )),
            }
        }
        for block in &self.blocks {
            let vals: Vec<String> = self.params[block.offset..block.offset + block.len]
                .iter()
                .map(|v| v.to_string())
                .collect();
            out.push_str(&format!(
                "coeffs,{},{},{},{}\n",
                block.layer,
                kind_name(block.kind),
                block.len,
                vals.join(",")
            ));
        }
        out
    }

    /// Parse a model from the documented text format.
    pub fn from_params_string(text: &str) -> Result<Model> {
        let bad = |msg: &str| Error::InvalidConfig(format!("model file: {msg}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next() != Some("funnet-model,v1") {
            return Err(bad("missing funnet-model,v1 header"));
        }
        let mut input_channels = None;
        let mut layers = Vec::new();
        let mut coeff_lines = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            match fields[0] {
                "input_channels" => {
                    let d: usize = fields
                        .get(1)
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad("bad input_channels"))?;
                    input_channels = Some(d);
                }
                "layer" => {
                    let kind = *fields.get(1).ok_or_else(|| bad("missing layer kind"))?;
                    match kind {
                        "lle" => {
                            if fields.len() != 5 {
                                return Err(bad("lle layer needs degree,orders,bandwidths"));
                            }
                            let degree: usize =
                                fields[2].parse().map_err(|_| bad("bad lle degree"))?;
                            let orders: usize =
                                fields[3].parse().map_err(|_| bad("bad lle orders"))?;
                            let bandwidths: Vec<usize> = fields[4]
                                .split(';')
                                .map(|h| h.parse().map_err(|_| bad("bad lle bandwidth")))
                                .collect::<Result<_>>()?;
                            layers.push(LayerSpec::Lle(LLEConfig::new(
                                degree,
                                bandwidths,
                                KernelSpec::Quartic,
                                orders,
                            )?));
                        }
                        "standardize" => layers.push(LayerSpec::Standardize),
                        "func_conv" => {
                            if fields.len() != 8 {
                                return Err(bad("func_conv layer needs 6 fields"));
                            }
                            layers.push(LayerSpec::FuncConv {
                                in_channels: fields[2].parse().map_err(|_| bad("bad in"))?,
                                out_channels: fields[3].parse().map_err(|_| bad("bad out"))?,
                                filter_len: fields[4].parse().map_err(|_| bad("bad filter_len"))?,
                                basis: BasisSpec::new(
                                    parse_family(fields[5])?,
                                    fields[6].parse().map_err(|_| bad("bad count"))?,
                                    (0.0, 1.0),
                                )?,
                                activation: parse_activation(fields[7])?,
                            });
                        }
                        "func_dense_scalar" | "func_dense_functional" => {
                            if fields.len() != 7 {
                                return Err(bad("dense layer needs 5 fields"));
                            }
                            let in_channels = fields[2].parse().map_err(|_| bad("bad in"))?;
                            let out = fields[3].parse().map_err(|_| bad("bad out"))?;
                            let basis = BasisSpec::new(
                                parse_family(fields[4])?,
                                fields[5].parse().map_err(|_| bad("bad count"))?,
                                (0.0, 1.0),
                            )?;
                            let activation = parse_activation(fields[6])?;
                            layers.push(if kind == "func_dense_scalar" {
                                LayerSpec::FuncDenseScalar {
                                    in_channels,
                                    out_neurons: out,
                                    basis,
                                    activation,
                                }
                            } else {
                                LayerSpec::FuncDenseFunctional {
                                    in_channels,
                                    out_channels: out,
                                    basis,
                                    activation,
                                }
                            });
                        }
                        _ => return Err(bad(&format!("unknown layer kind {kind:?}"))),
                    }
                }
                "coeffs" => coeff_lines.push(fields),
                other => return Err(bad(&format!("unknown record {other:?}"))),
            }
        }
        let input_channels = input_channels.ok_or_else(|| bad("missing input_channels"))?;
        let mut model = Model::new(input_channels, layers)?;
        for fields in coeff_lines {
            if fields.len() < 4 {
                return Err(bad("short coeffs record"));
            }
            let layer: usize = fields[1].parse().map_err(|_| bad("bad coeffs layer"))?;
            let kind = fields[2];
            let len: usize = fields[3].parse().map_err(|_| bad("bad coeffs len"))?;
            if fields.len() != 4 + len {
                return Err(bad("coeffs record length mismatch"));
            }
            let block = model
                .blocks
                .iter()
                .find(|b| b.layer == layer && kind_name(b.kind) == kind)
                .copied()
                .ok_or_else(|| bad(&format!("no block {kind} for layer {layer}")))?;
            if block.len != len {
                return Err(bad(&format!(
                    "block {kind} of layer {layer} expects {} coefficients, file has {len}",
                    block.len
                )));
            }
            for (i, raw) in fields[4..].iter().enumerate() {
                model.params[block.offset + i] =
                    raw.parse().map_err(|_| bad("bad coefficient value"))?;
            }
        }
        Ok(model)
    }

    pub fn save_params(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_params_string())?;
        Ok(())
    }

    pub fn load_params(path: impl AsRef<Path>) -> Result<Model> {
        let text = std::fs::read_to_string(path)?;
        Model::from_params_string(&text)
    }
}
