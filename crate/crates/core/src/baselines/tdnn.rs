use crate::cvnn::network::{LayerSpec, Network, RealActivation};
use crate::cvnn::tensor::Shape;
use crate::error::Result;

pub const CONTEXT: usize = 5;
pub const FILTERS: [usize; 5] = [8, 8, 4, 2, 1];
pub const DENSE: [usize; 2] = [10, 10];

/// Five context-5 real convolutions (SAME, tanh), two 10-unit tanh dense
/// layers and a linear scalar output, on inputs of length `2 * n_in`.
pub fn tdnn_layers(n_in: usize) -> Vec<LayerSpec> {
    let width = 2 * n_in;
    let mut layers = Vec::new();
    let mut channels = 1;
    for f in FILTERS {
        layers.push(LayerSpec::RealConv1d {
            kernel_len: CONTEXT,
            in_channels: channels,
            out_channels: f,
            activation: RealActivation::Tanh,
        });
        channels = f;
    }
    layers.push(LayerSpec::Flatten);
    let mut inputs = width * channels;
    for w in DENSE {
        layers.push(LayerSpec::RealAffine {
            inputs,
            outputs: w,
            activation: RealActivation::Tanh,
        });
        inputs = w;
    }
    layers.push(LayerSpec::RealAffine {
        inputs,
        outputs: 1,
        activation: RealActivation::Linear,
    });
    layers
}

/// Zero-initialized time-delay network for `n_in`-length complex features.
pub fn tdnn(n_in: usize) -> Result<Network> {
    Network::new(Shape::real(2 * n_in, 1), tdnn_layers(n_in))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvnn::flops::flops_count;
    use crate::cvnn::gradcheck::gradient_check;
    use crate::cvnn::loss::Loss;
    use num_complex::Complex64;

    #[test]
    fn input_is_twice_the_feature() {
        let net = tdnn(33).unwrap();
        assert_eq!(net.input_shape(), Shape::real(66, 1));
        assert_eq!(net.output_shape(), Shape::real(1, 1));
        assert_eq!(net.forward(&vec![Complex64::new(0.1, 0.2); 33]).unwrap(), 0.0);
    }

    #[test]
    fn flops_by_hand() {
        let conv: u64 = [(1, 8), (8, 8), (8, 4), (4, 2), (2, 1)]
            .iter()
            .map(|&(i, o)| 2 * 66 * (i * 25 + 1) * o)
            .sum();
        assert_eq!(flops_count(&tdnn(33).unwrap()), conv + 131 * 10 + 19 * 10 + 19);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut net = tdnn(9).unwrap();
        net.init_glorot(4);
        let feature: Vec<Complex64> = (0..9).map(|i| Complex64::from_polar(0.3, 0.7 * i as f64)).collect();
        let report = gradient_check(&net, &feature, -0.4, Loss::Mae, 1e-6, 1e-6).unwrap();
        assert!(report.passed, "{report:?}");
    }
}
