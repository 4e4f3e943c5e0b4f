//! Layer stack, flat parameter storage, forward and backward passes.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Result};
use crate::sim::stream_rng;

use super::ops::{self, ConvDims, PoolIndex};
use super::tensor::{ComplexTensor, RealTensor, Shape, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealActivation {
    Tanh,
    Linear,
}

/// One entry of the architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    ComplexConv1d {
        kernel_len: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
    },
    SplitMaxpool {
        pool_len: usize,
        stride: usize,
    },
    ComplexAffine {
        inputs: usize,
        outputs: usize,
    },
    RealAffine {
        inputs: usize,
        outputs: usize,
        activation: RealActivation,
    },
    /// Real SAME convolution followed by an activation (time-delay layers).
    RealConv1d {
        kernel_len: usize,
        in_channels: usize,
        out_channels: usize,
        activation: RealActivation,
    },
    Ctanh,
    Csigmoid,
    PhaseMap,
    Flatten,
    /// `ctanh(conv(ctanh(conv(x)))) + shortcut(x)`; the shortcut is a 1x1
    /// complex convolution when the channel count changes.
    ResidualBlock {
        in_channels: usize,
        out_channels: usize,
        kernel_len: usize,
    },
}

impl LayerSpec {
    pub fn conv(kernel_len: usize, in_channels: usize, out_channels: usize) -> Self {
        LayerSpec::ComplexConv1d {
            kernel_len,
            in_channels,
            out_channels,
            stride: 1,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::ComplexConv1d { .. } => "complex_conv1d",
            LayerSpec::SplitMaxpool { .. } => "split_maxpool",
            LayerSpec::ComplexAffine { .. } => "complex_affine",
            LayerSpec::RealAffine { .. } => "real_affine",
            LayerSpec::RealConv1d { .. } => "real_conv1d",
            LayerSpec::Ctanh => "ctanh",
            LayerSpec::Csigmoid => "csigmoid",
            LayerSpec::PhaseMap => "phase_map",
            LayerSpec::Flatten => "flatten",
            LayerSpec::ResidualBlock { .. } => "residual_block",
        }
    }

    /// Whether the layer's parameters are complex (stored as `[re | im]` blocks).
    pub fn is_complex(&self) -> bool {
        matches!(
            self,
            LayerSpec::ComplexConv1d { .. } | LayerSpec::ComplexAffine { .. } | LayerSpec::ResidualBlock { .. }
        )
    }

    /// Number of real scalars held by the layer.
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::ComplexConv1d {
                kernel_len,
                in_channels,
                out_channels,
                ..
            } => 2 * (kernel_len * in_channels * out_channels + out_channels),
            LayerSpec::ComplexAffine { inputs, outputs } => 2 * (inputs * outputs + outputs),
            LayerSpec::RealAffine { inputs, outputs, .. } => inputs * outputs + outputs,
            LayerSpec::RealConv1d {
                kernel_len,
                in_channels,
                out_channels,
                ..
            } => kernel_len * in_channels * out_channels + out_channels,
            LayerSpec::ResidualBlock { .. } => self.block_parts().iter().map(|d| conv_params(*d)).sum(),
            _ => 0,
        }
    }

    /// Convolutions of a residual block: first, second, optional shortcut.
    pub(crate) fn block_parts(&self) -> Vec<ConvDims> {
        let LayerSpec::ResidualBlock {
            in_channels,
            out_channels,
            kernel_len,
        } = *self
        else {
            return Vec::new();
        };
        let mut parts = vec![
            ConvDims {
                kernel_len,
                in_channels,
                out_channels,
                stride: 1,
            },
            ConvDims {
                kernel_len,
                in_channels: out_channels,
                out_channels,
                stride: 1,
            },
        ];
        if in_channels != out_channels {
            parts.push(ConvDims {
                kernel_len: 1,
                in_channels,
                out_channels,
                stride: 1,
            });
        }
        parts
    }

    pub fn output_shape(&self, input: Shape) -> Result<Shape> {
        let need_complex = |s: Shape| {
            if s.complex {
                Ok(())
            } else {
                shape(format!("{} needs complex input", self.kind_name()))
            }
        };
        let need_real = |s: Shape| {
            if s.complex {
                shape(format!("{} needs real input", self.kind_name()))
            } else {
                Ok(())
            }
        };
        let check_channels = |want: usize| {
            if input.channels == want {
                Ok(())
            } else {
                shape(format!(
                    "{} expects {want} channels, got {}",
                    self.kind_name(),
                    input.channels
                ))
            }
        };
        match *self {
            LayerSpec::ComplexConv1d {
                kernel_len,
                in_channels,
                out_channels,
                stride,
            } => {
                need_complex(input)?;
                check_channels(in_channels)?;
                if kernel_len == 0 || stride == 0 {
                    return shape("conv kernel and stride must be positive");
                }
                Ok(Shape::complex(input.len.div_ceil(stride), out_channels))
            }
            LayerSpec::RealConv1d {
                kernel_len,
                in_channels,
                out_channels,
                ..
            } => {
                need_real(input)?;
                check_channels(in_channels)?;
                if kernel_len == 0 {
                    return shape("conv kernel must be positive");
                }
                Ok(Shape::real(input.len, out_channels))
            }
            LayerSpec::ResidualBlock {
                in_channels,
                out_channels,
                kernel_len,
            } => {
                need_complex(input)?;
                check_channels(in_channels)?;
                if kernel_len == 0 {
                    return shape("conv kernel must be positive");
                }
                Ok(Shape::complex(input.len, out_channels))
            }
            LayerSpec::SplitMaxpool { pool_len, stride } => {
                need_complex(input)?;
                if pool_len == 0 || stride == 0 {
                    return shape("pool window and stride must be positive");
                }
                Ok(Shape::complex(input.len.div_ceil(stride), input.channels))
            }
            LayerSpec::ComplexAffine { inputs, outputs } => {
                need_complex(input)?;
                if input.size() != inputs {
                    return shape(format!("complex affine expects {inputs} inputs, got {}", input.size()));
                }
                Ok(Shape::complex(outputs, 1))
            }
            LayerSpec::RealAffine { inputs, outputs, .. } => {
                need_real(input)?;
                if input.size() != inputs {
                    return shape(format!("real affine expects {inputs} inputs, got {}", input.size()));
                }
                Ok(Shape::real(outputs, 1))
            }
            LayerSpec::Ctanh | LayerSpec::Csigmoid => {
                need_complex(input)?;
                Ok(input)
            }
            LayerSpec::PhaseMap => {
                need_complex(input)?;
                Ok(Shape::real(input.len, input.channels))
            }
            LayerSpec::Flatten => Ok(Shape {
                len: input.size(),
                channels: 1,
                complex: input.complex,
            }),
        }
    }
}

fn conv_params(d: ConvDims) -> usize {
    2 * (d.weights() + d.out_channels)
}

/// Per-layer intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
enum Cache {
    None,
    Pool(PoolIndex),
    Block {
        a1: ComplexTensor,
        a2: ComplexTensor,
    },
}

/// Activations recorded by [`Network::forward_trace`].
#[derive(Debug, Clone)]
pub struct Trace {
    /// `signals[i]` is the input of layer `i`; the last entry is the output.
    signals: Vec<Signal>,
    caches: Vec<Cache>,
}

impl Trace {
    pub fn output(&self) -> &Signal {
        self.signals.last().expect("trace holds the input")
    }

    pub fn prediction(&self) -> f64 {
        match self.output() {
            Signal::Real(t) => t.data[0],
            Signal::Complex(t) => t.re[0],
        }
    }
}

/// Feed-forward network with all parameters in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input: Shape,
    layers: Vec<LayerSpec>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

impl Network {
    /// Builds a zero-initialized network, checking the shape chain.
    pub fn new(input: Shape, layers: Vec<LayerSpec>) -> Result<Self> {
        let mut s = input;
        let mut offsets = Vec::with_capacity(layers.len());
        let mut total = 0;
        for layer in &layers {
            s = layer.output_shape(s)?;
            offsets.push(total);
            total += layer.param_count();
        }
        Ok(Self {
            input,
            layers,
            offsets,
            params: vec![0.0; total],
        })
    }

    pub fn with_params(input: Shape, layers: Vec<LayerSpec>, params: Vec<f64>) -> Result<Self> {
        let mut net = Self::new(input, layers)?;
        if params.len() != net.params.len() {
            return shape(format!(
                "{} parameters supplied for a network holding {}",
                params.len(),
                net.params.len()
            ));
        }
        net.params = params;
        Ok(net)
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn output_shape(&self) -> Shape {
        self.layers
            .iter()
            .try_fold(self.input, |s, l| l.output_shape(s))
            .expect("validated at construction")
    }

    /// Input shape of every layer followed by the final output shape.
    pub fn shapes(&self) -> Vec<Shape> {
        let mut out = vec![self.input];
        for l in &self.layers {
            let next = l.output_shape(*out.last().unwrap()).expect("validated at construction");
            out.push(next);
        }
        out
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Parameter slice of layer `i`.
    pub fn layer_params(&self, i: usize) -> &[f64] {
        let start = self.offsets[i];
        &self.params[start..start + self.layers[i].param_count()]
    }

    pub fn layer_range(&self, i: usize) -> std::ops::Range<usize> {
        let start = self.offsets[i];
        start..start + self.layers[i].param_count()
    }

    /// Complex Glorot-style uniform initialization; biases zero.
    ///
    /// Complex weights draw `W_R` and `W_I` from `±sqrt(3 / (2 (fan_in + fan_out)))`,
    /// real weights from `±sqrt(6 / (fan_in + fan_out))`.
    pub fn init_glorot(&mut self, seed: u64) {
        let mut rng = stream_rng(seed, 0x1417);
        self.params.iter_mut().for_each(|p| *p = 0.0);
        for i in 0..self.layers.len() {
            let start = self.offsets[i];
            let layer = self.layers[i].clone();
            let params = &mut self.params[start..start + layer.param_count()];
            match layer {
                LayerSpec::ComplexConv1d {
                    kernel_len,
                    in_channels,
                    out_channels,
                    stride,
                } => init_complex_conv(
                    params,
                    ConvDims {
                        kernel_len,
                        in_channels,
                        out_channels,
                        stride,
                    },
                    &mut rng,
                ),
                LayerSpec::ResidualBlock { .. } => {
                    let mut off = 0;
                    for d in layer.block_parts() {
                        let n = conv_params(d);
                        init_complex_conv(&mut params[off..off + n], d, &mut rng);
                        off += n;
                    }
                }
                LayerSpec::ComplexAffine { inputs, outputs } => {
                    let bound = (3.0 / (2.0 * (inputs + outputs) as f64)).sqrt();
                    for w in &mut params[..2 * inputs * outputs] {
                        *w = rng.gen_range(-bound..bound);
                    }
                }
                LayerSpec::RealAffine { inputs, outputs, .. } => {
                    let bound = (6.0 / (inputs + outputs) as f64).sqrt();
                    for w in &mut params[..inputs * outputs] {
                        *w = rng.gen_range(-bound..bound);
                    }
                }
                LayerSpec::RealConv1d {
                    kernel_len,
                    in_channels,
                    out_channels,
                    ..
                } => {
                    let bound = (6.0 / (kernel_len * (in_channels + out_channels)) as f64).sqrt();
                    for w in &mut params[..kernel_len * in_channels * out_channels] {
                        *w = rng.gen_range(-bound..bound);
                    }
                }
                _ => {}
            }
        }
    }

    /// Converts a complex feature vector into this network's input: as-is for
    /// complex inputs, `[Re; Im]` for real inputs of twice the length.
    pub fn encode(&self, feature: &[Complex64]) -> Result<Signal> {
        if self.input.complex {
            if feature.len() != self.input.size() {
                return shape(format!(
                    "network expects {} complex inputs, got {}",
                    self.input.size(),
                    feature.len()
                ));
            }
            Ok(Signal::Complex(ComplexTensor::from_complex(feature)))
        } else {
            if 2 * feature.len() != self.input.size() {
                return shape(format!(
                    "network expects {} real inputs, got a complex feature of length {}",
                    self.input.size(),
                    feature.len()
                ));
            }
            let data = feature.iter().map(|z| z.re).chain(feature.iter().map(|z| z.im)).collect();
            Ok(Signal::Real(RealTensor::from_vec(data)))
        }
    }

    /// Scalar prediction for a complex feature vector.
    pub fn forward(&self, feature: &[Complex64]) -> Result<f64> {
        Ok(self.forward_trace(self.encode(feature)?)?.prediction())
    }

    pub fn forward_trace(&self, input: Signal) -> Result<Trace> {
        if input.shape() != self.input {
            return shape(format!("input shape {:?} != {:?}", input.shape(), self.input));
        }
        let mut signals = Vec::with_capacity(self.layers.len() + 1);
        let mut caches = Vec::with_capacity(self.layers.len());
        signals.push(input);
        for (i, layer) in self.layers.iter().enumerate() {
            let x = signals.last().unwrap();
            let (y, cache) = layer_forward(layer, self.layer_params(i), x)?;
            signals.push(y);
            caches.push(cache);
        }
        Ok(Trace { signals, caches })
    }

    /// Backpropagates `∂L/∂output` (for a scalar output), accumulating
    /// into `grads`, and returns the gradient with respect to the input.
    pub fn backward(&self, trace: &Trace, grad_output: f64, grads: &mut [f64]) -> Signal {
        let mut g = trace.output().zeros_like();
        match &mut g {
            Signal::Real(t) => t.data[0] = grad_output,
            Signal::Complex(t) => t.re[0] = grad_output,
        }
        self.backward_signal(trace, g, grads)
    }

    pub fn backward_signal(&self, trace: &Trace, mut g: Signal, grads: &mut [f64]) -> Signal {
        assert_eq!(grads.len(), self.params.len());
        for i in (0..self.layers.len()).rev() {
            let range = self.layer_range(i);
            g = layer_backward(
                &self.layers[i],
                &self.params[range.clone()],
                &trace.signals[i],
                &trace.signals[i + 1],
                &trace.caches[i],
                &g,
                &mut grads[range],
            );
        }
        g
    }
}

fn init_complex_conv<R: Rng>(params: &mut [f64], d: ConvDims, rng: &mut R) {
    let fan_in = d.kernel_len * d.in_channels;
    let fan_out = d.kernel_len * d.out_channels;
    let bound = (3.0 / (2.0 * (fan_in + fan_out) as f64)).sqrt();
    for w in &mut params[..2 * d.weights()] {
        *w = rng.gen_range(-bound..bound);
    }
}

fn block_forward(parts: &[ConvDims], params: &[f64], x: &ComplexTensor) -> Result<(ComplexTensor, Cache)> {
    let n0 = conv_params(parts[0]);
    let n1 = conv_params(parts[1]);
    let a1 = ops::ctanh(&ops::complex_conv1d_forward(x, parts[0], &params[..n0])?);
    let a2 = ops::ctanh(&ops::complex_conv1d_forward(&a1, parts[1], &params[n0..n0 + n1])?);
    let short = match parts.get(2) {
        Some(&d) => ops::complex_conv1d_forward(x, d, &params[n0 + n1..])?,
        None => x.clone(),
    };
    let mut y = a2.clone();
    for (a, b) in y.re.iter_mut().zip(&short.re) {
        *a += b;
    }
    for (a, b) in y.im.iter_mut().zip(&short.im) {
        *a += b;
    }
    Ok((y, Cache::Block { a1, a2 }))
}

fn layer_forward(layer: &LayerSpec, params: &[f64], x: &Signal) -> Result<(Signal, Cache)> {
    Ok(match *layer {
        LayerSpec::ComplexConv1d {
            kernel_len,
            in_channels,
            out_channels,
            stride,
        } => {
            let d = ConvDims {
                kernel_len,
                in_channels,
                out_channels,
                stride,
            };
            (Signal::Complex(ops::complex_conv1d_forward(x.as_complex()?, d, params)?), Cache::None)
        }
        LayerSpec::RealConv1d {
            kernel_len,
            in_channels,
            out_channels,
            activation,
        } => {
            let d = ConvDims {
                kernel_len,
                in_channels,
                out_channels,
                stride: 1,
            };
            let y = ops::real_conv1d_forward(x.as_real()?, d, params)?;
            let y = match activation {
                RealActivation::Tanh => ops::tanh_forward(&y),
                RealActivation::Linear => y,
            };
            (Signal::Real(y), Cache::None)
        }
        LayerSpec::ResidualBlock { .. } => {
            let (y, cache) = block_forward(&layer.block_parts(), params, x.as_complex()?)?;
            (Signal::Complex(y), cache)
        }
        LayerSpec::SplitMaxpool { pool_len, stride } => {
            let (y, idx) = ops::split_maxpool_forward(x.as_complex()?, pool_len, stride);
            (Signal::Complex(y), Cache::Pool(idx))
        }
        LayerSpec::ComplexAffine { inputs, outputs } => (
            Signal::Complex(ops::complex_affine_forward(x.as_complex()?, inputs, outputs, params)?),
            Cache::None,
        ),
        LayerSpec::RealAffine {
            inputs,
            outputs,
            activation,
        } => {
            let y = ops::real_affine_forward(x.as_real()?, inputs, outputs, params)?;
            let y = match activation {
                RealActivation::Tanh => ops::tanh_forward(&y),
                RealActivation::Linear => y,
            };
            (Signal::Real(y), Cache::None)
        }
        LayerSpec::Ctanh => (Signal::Complex(ops::ctanh(x.as_complex()?)), Cache::None),
        LayerSpec::Csigmoid => (Signal::Complex(ops::csigmoid(x.as_complex()?)), Cache::None),
        LayerSpec::PhaseMap => (Signal::Real(ops::phase_map(x.as_complex()?)?), Cache::None),
        LayerSpec::Flatten => {
            let y = match x {
                Signal::Complex(t) => Signal::Complex(ComplexTensor {
                    len: t.size(),
                    channels: 1,
                    re: t.re.clone(),
                    im: t.im.clone(),
                }),
                Signal::Real(t) => Signal::Real(RealTensor::from_vec(t.data.clone())),
            };
            (y, Cache::None)
        }
    })
}

fn complex_of(s: &Signal) -> &ComplexTensor {
    s.as_complex().expect("shape chain validated at construction")
}

fn real_of(s: &Signal) -> &RealTensor {
    s.as_real().expect("shape chain validated at construction")
}

fn layer_backward(
    layer: &LayerSpec,
    params: &[f64],
    x: &Signal,
    y: &Signal,
    cache: &Cache,
    g: &Signal,
    grads: &mut [f64],
) -> Signal {
    match *layer {
        LayerSpec::ComplexConv1d {
            kernel_len,
            in_channels,
            out_channels,
            stride,
        } => {
            let d = ConvDims {
                kernel_len,
                in_channels,
                out_channels,
                stride,
            };
            Signal::Complex(ops::complex_conv1d_backward(complex_of(x), d, params, complex_of(g), grads))
        }
        LayerSpec::RealConv1d {
            kernel_len,
            in_channels,
            out_channels,
            activation,
        } => {
            let d = ConvDims {
                kernel_len,
                in_channels,
                out_channels,
                stride: 1,
            };
            let g_pre = match activation {
                RealActivation::Tanh => ops::tanh_backward(real_of(y), real_of(g)),
                RealActivation::Linear => real_of(g).clone(),
            };
            Signal::Real(ops::real_conv1d_backward(real_of(x), d, params, &g_pre, grads))
        }
        LayerSpec::ResidualBlock { .. } => {
            let Cache::Block { a1, a2 } = cache else {
                unreachable!("residual block without cache")
            };
            let parts = layer.block_parts();
            let n0 = conv_params(parts[0]);
            let n1 = conv_params(parts[1]);
            let (g0, rest) = grads.split_at_mut(n0);
            let (g1, g2) = rest.split_at_mut(n1);
            let x = complex_of(x);
            let g = complex_of(g);
            let g_h2 = ops::ctanh_backward(a2, g);
            let g_a1 = ops::complex_conv1d_backward(a1, parts[1], &params[n0..n0 + n1], &g_h2, g1);
            let g_h1 = ops::ctanh_backward(a1, &g_a1);
            let mut gx = ops::complex_conv1d_backward(x, parts[0], &params[..n0], &g_h1, g0);
            let g_short = match parts.get(2) {
                Some(&d) => ops::complex_conv1d_backward(x, d, &params[n0 + n1..], g, g2),
                None => g.clone(),
            };
            for (a, b) in gx.re.iter_mut().zip(&g_short.re) {
                *a += b;
            }
            for (a, b) in gx.im.iter_mut().zip(&g_short.im) {
                *a += b;
            }
            Signal::Complex(gx)
        }
        LayerSpec::SplitMaxpool { .. } => {
            let Cache::Pool(idx) = cache else {
                unreachable!("pool without cache")
            };
            Signal::Complex(ops::split_maxpool_backward(complex_of(x), idx, complex_of(g)))
        }
        LayerSpec::ComplexAffine { inputs, outputs } => Signal::Complex(ops::complex_affine_backward(
            complex_of(x),
            inputs,
            outputs,
            params,
            complex_of(g),
            grads,
        )),
        LayerSpec::RealAffine {
            inputs,
            outputs,
            activation,
        } => {
            let g_pre = match activation {
                RealActivation::Tanh => ops::tanh_backward(real_of(y), real_of(g)),
                RealActivation::Linear => real_of(g).clone(),
            };
            Signal::Real(ops::real_affine_backward(real_of(x), inputs, outputs, params, &g_pre, grads))
        }
        LayerSpec::Ctanh => Signal::Complex(ops::ctanh_backward(complex_of(y), complex_of(g))),
        LayerSpec::Csigmoid => Signal::Complex(ops::csigmoid_backward(complex_of(y), complex_of(g))),
        LayerSpec::PhaseMap => Signal::Complex(ops::phase_map_backward(complex_of(x), real_of(g))),
        LayerSpec::Flatten => match (x, g) {
            (Signal::Complex(xt), Signal::Complex(gt)) => Signal::Complex(ComplexTensor {
                len: xt.len,
                channels: xt.channels,
                re: gt.re.clone(),
                im: gt.im.clone(),
            }),
            (Signal::Real(xt), Signal::Real(gt)) => Signal::Real(RealTensor {
                len: xt.len,
                channels: xt.channels,
                data: gt.data.clone(),
            }),
            _ => unreachable!("flatten preserves the domain"),
        },
    }
}

/// The complex residual network: two residual blocks (1→8, 8→4 channels,
/// 3-tap kernels) each followed by 2x2 split max-pooling, a 20-unit complex
/// affine layer with Csigmoid and phase mapping, two 10-unit tanh layers and
/// a linear scalar output.
pub fn cvnn_layers(n_in: usize) -> Vec<LayerSpec> {
    let after_pools = n_in.div_ceil(2).div_ceil(2);
    let n_flat = after_pools * 4;
    vec![
        LayerSpec::ResidualBlock {
            in_channels: 1,
            out_channels: 8,
            kernel_len: 3,
        },
        LayerSpec::SplitMaxpool { pool_len: 2, stride: 2 },
        LayerSpec::ResidualBlock {
            in_channels: 8,
            out_channels: 4,
            kernel_len: 3,
        },
        LayerSpec::SplitMaxpool { pool_len: 2, stride: 2 },
        LayerSpec::Flatten,
        LayerSpec::ComplexAffine {
            inputs: n_flat,
            outputs: 20,
        },
        LayerSpec::Csigmoid,
        LayerSpec::PhaseMap,
        LayerSpec::RealAffine {
            inputs: 20,
            outputs: 10,
            activation: RealActivation::Tanh,
        },
        LayerSpec::RealAffine {
            inputs: 10,
            outputs: 10,
            activation: RealActivation::Tanh,
        },
        LayerSpec::RealAffine {
            inputs: 10,
            outputs: 1,
            activation: RealActivation::Linear,
        },
    ]
}

/// Zero-initialized complex residual network for `n_in`-length features.
pub fn cvnn(n_in: usize) -> Result<Network> {
    Network::new(Shape::complex(n_in, 1), cvnn_layers(n_in))
}

/// Number of complex units entering the first affine layer.
pub fn flatten_width(net: &Network) -> Option<usize> {
    let shapes = net.shapes();
    net.layers()
        .iter()
        .position(|l| matches!(l, LayerSpec::Flatten))
        .map(|i| shapes[i + 1].size())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_one_shapes() {
        let net = cvnn(33).unwrap();
        let shapes = net.shapes();
        assert_eq!(shapes[1], Shape::complex(33, 8));
        assert_eq!(shapes[2], Shape::complex(17, 8));
        assert_eq!(shapes[4], Shape::complex(9, 4));
        assert_eq!(flatten_width(&net), Some(36));
        assert_eq!(net.output_shape(), Shape::real(1, 1));
    }

    #[test]
    fn shape_algebra_over_valid_sizes() {
        for n_in in (9..=65).filter(|n| n % 4 == 1) {
            let net = cvnn(n_in).unwrap();
            assert_eq!(flatten_width(&net), Some(n_in.div_ceil(2).div_ceil(2) * 4));
        }
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = cvnn(33).unwrap();
        let feature = vec![Complex64::new(0.3, -0.1); 33];
        assert_eq!(net.forward(&feature).unwrap(), 0.0);
    }

    #[test]
    fn residual_identity_and_zero() {
        let block = LayerSpec::ResidualBlock {
            in_channels: 2,
            out_channels: 2,
            kernel_len: 3,
        };
        let net = Network::new(Shape::complex(33, 2), vec![block.clone()]).unwrap();
        let x = ComplexTensor::new(33, 2, (0..66).map(|i| i as f64 * 0.01).collect(), vec![0.2; 66]).unwrap();
        let t = net.forward_trace(Signal::Complex(x.clone())).unwrap();
        assert_eq!(t.output(), &Signal::Complex(x));

        let mut net = Network::new(Shape::complex(33, 1), vec![LayerSpec::ResidualBlock {
            in_channels: 1,
            out_channels: 8,
            kernel_len: 3,
        }])
        .unwrap();
        net.init_glorot(3);
        let t = net.forward_trace(Signal::Complex(ComplexTensor::zeros(33, 1))).unwrap();
        let out = t.output().as_complex().unwrap();
        assert_eq!((out.len, out.channels), (33, 8));
        assert!(out.re.iter().chain(&out.im).all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_chain_rejected() {
        let layers = vec![LayerSpec::PhaseMap, LayerSpec::Ctanh];
        assert!(Network::new(Shape::complex(4, 1), layers).is_err());
        let layers = vec![LayerSpec::ComplexAffine { inputs: 5, outputs: 1 }];
        assert!(Network::new(Shape::complex(4, 1), layers).is_err());
    }

    #[test]
    fn wrong_feature_length_rejected() {
        let net = cvnn(9).unwrap();
        assert!(net.forward(&[Complex64::new(1.0, 0.0); 8]).is_err());
    }

    #[test]
    fn init_is_seeded() {
        let mut a = cvnn(9).unwrap();
        let mut b = cvnn(9).unwrap();
        a.init_glorot(5);
        b.init_glorot(5);
        assert_eq!(a, b);
        b.init_glorot(6);
        assert_ne!(a, b);
        let bound = (3.0f64 / (2.0 * 6.0)).sqrt();
        assert!(a.layer_params(0)[..6].iter().all(|w| w.abs() <= bound));
    }
}
