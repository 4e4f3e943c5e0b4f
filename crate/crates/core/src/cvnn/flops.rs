use super::network::{LayerSpec, Network};
use super::ops::ConvDims;
use super::tensor::Shape;

/// `2 L_i (F_i L_c^2 + 1) F_c` for a real 1-D convolution over input length `L_i`.
pub fn conv_flops(input_len: usize, d: ConvDims) -> u64 {
    2 * input_len as u64 * (d.in_channels * d.kernel_len * d.kernel_len + 1) as u64 * d.out_channels as u64
}

/// `(2 I - 1) O` for a real dense layer.
pub fn dense_flops(inputs: usize, outputs: usize) -> u64 {
    (2 * inputs as u64 - 1) * outputs as u64
}

/// Multiplier applied to complex layers.
pub const COMPLEX_FACTOR: u64 = 4;

/// FLOPs of one layer given its input shape; pooling, activations, phase
/// mapping and flattening are not counted.
pub fn layer_flops(layer: &LayerSpec, input: Shape) -> u64 {
    match *layer {
        LayerSpec::ComplexConv1d {
            kernel_len,
            in_channels,
            out_channels,
            stride,
        } => {
            COMPLEX_FACTOR
                * conv_flops(
                    input.len,
                    ConvDims {
                        kernel_len,
                        in_channels,
                        out_channels,
                        stride,
                    },
                )
        }
        LayerSpec::RealConv1d {
            kernel_len,
            in_channels,
            out_channels,
            ..
        } => conv_flops(
            input.len,
            ConvDims {
                kernel_len,
                in_channels,
                out_channels,
                stride: 1,
            },
        ),
        LayerSpec::ResidualBlock { .. } => layer
            .block_parts()
            .into_iter()
            .map(|d| COMPLEX_FACTOR * conv_flops(input.len, d))
            .sum(),
        LayerSpec::ComplexAffine { inputs, outputs } => COMPLEX_FACTOR * dense_flops(inputs, outputs),
        LayerSpec::RealAffine { inputs, outputs, .. } => dense_flops(inputs, outputs),
        _ => 0,
    }
}

/// Total FLOPs of one forward pass.
pub fn flops_count(net: &Network) -> u64 {
    net.layers()
        .iter()
        .zip(net.shapes())
        .map(|(l, s)| layer_flops(l, s))
        .sum()
}
