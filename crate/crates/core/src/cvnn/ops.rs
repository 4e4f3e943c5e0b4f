//! Layer primitives and their backward passes.
//!
//! Gradients of the real loss with respect to a complex activation `u + jv`
//! are carried as a [`ComplexTensor`] whose planes hold `∂L/∂u` and `∂L/∂v`.
//! Complex parameters are stored as independent real blocks
//! `[W_R | W_I | b_R | b_I]` inside the network's flat parameter vector.

use crate::error::{domain, shape, Result};

use super::tensor::{ComplexTensor, RealTensor};

/// Output length and left padding of a "SAME" window of `kernel` taps with `stride`.
pub fn same_padding(len: usize, kernel: usize, stride: usize) -> (usize, usize) {
    let out = len.div_ceil(stride);
    let total = ((out - 1) * stride + kernel).saturating_sub(len);
    (out, total / 2)
}

/// Kernel geometry `L_c x F_i x F_c x S_c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvDims {
    pub kernel_len: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
}

impl ConvDims {
    pub fn weights(&self) -> usize {
        self.kernel_len * self.in_channels * self.out_channels
    }

    fn w(&self, k: usize, i: usize) -> usize {
        (k * self.in_channels + i) * self.out_channels
    }

    fn check(&self, len: usize, channels: usize) -> Result<()> {
        if channels != self.in_channels {
            return shape(format!(
                "conv expects {} input channels, got {channels}",
                self.in_channels
            ));
        }
        if len == 0 {
            return shape("conv on an empty input");
        }
        Ok(())
    }
}

/// `W ⊛ c = (W_R⊛u − W_I⊛v) + j(W_I⊛u + W_R⊛v)` plus bias, SAME padding.
pub fn complex_conv1d_forward(x: &ComplexTensor, dims: ConvDims, params: &[f64]) -> Result<ComplexTensor> {
    dims.check(x.len, x.channels)?;
    let nw = dims.weights();
    let fo = dims.out_channels;
    let (w_re, rest) = params.split_at(nw);
    let (w_im, rest) = rest.split_at(nw);
    let (b_re, b_im) = rest.split_at(fo);
    let (out_len, pad) = same_padding(x.len, dims.kernel_len, dims.stride);
    let mut y = ComplexTensor::zeros(out_len, fo);
    for p in 0..out_len {
        let yr = &mut y.re[p * fo..(p + 1) * fo];
        yr.copy_from_slice(b_re);
        let yi = &mut y.im[p * fo..(p + 1) * fo];
        yi.copy_from_slice(&b_im[..fo]);
    }
    for p in 0..out_len {
        for k in 0..dims.kernel_len {
            let pos = (p * dims.stride + k) as isize - pad as isize;
            if pos < 0 || pos >= x.len as isize {
                continue;
            }
            let pos = pos as usize;
            for i in 0..dims.in_channels {
                let u = x.re[pos * x.channels + i];
                let v = x.im[pos * x.channels + i];
                let base = dims.w(k, i);
                let wr = &w_re[base..base + fo];
                let wi = &w_im[base..base + fo];
                let (yr, yi) = (&mut y.re[p * fo..(p + 1) * fo], &mut y.im[p * fo..(p + 1) * fo]);
                for o in 0..fo {
                    yr[o] += wr[o] * u - wi[o] * v;
                    yi[o] += wi[o] * u + wr[o] * v;
                }
            }
        }
    }
    Ok(y)
}

/// Accumulates parameter gradients into `grads` and returns `∂L/∂x`.
pub fn complex_conv1d_backward(
    x: &ComplexTensor,
    dims: ConvDims,
    params: &[f64],
    g: &ComplexTensor,
    grads: &mut [f64],
) -> ComplexTensor {
    let nw = dims.weights();
    let fo = dims.out_channels;
    let (w_re, rest) = params.split_at(nw);
    let w_im = &rest[..nw];
    let (gw_re, rest) = grads.split_at_mut(nw);
    let (gw_im, rest) = rest.split_at_mut(nw);
    let (gb_re, gb_im) = rest.split_at_mut(fo);
    let (_, pad) = same_padding(x.len, dims.kernel_len, dims.stride);
    let mut gx = ComplexTensor::zeros(x.len, x.channels);
    for p in 0..g.len {
        let gr = &g.re[p * fo..(p + 1) * fo];
        let gi = &g.im[p * fo..(p + 1) * fo];
        for o in 0..fo {
            gb_re[o] += gr[o];
            gb_im[o] += gi[o];
        }
        for k in 0..dims.kernel_len {
            let pos = (p * dims.stride + k) as isize - pad as isize;
            if pos < 0 || pos >= x.len as isize {
                continue;
            }
            let pos = pos as usize;
            for i in 0..dims.in_channels {
                let xi = pos * x.channels + i;
                let (u, v) = (x.re[xi], x.im[xi]);
                let base = dims.w(k, i);
                let mut du = 0.0;
                let mut dv = 0.0;
                for o in 0..fo {
                    let (a, b) = (gr[o], gi[o]);
                    gw_re[base + o] += a * u + b * v;
                    gw_im[base + o] += b * u - a * v;
                    du += a * w_re[base + o] + b * w_im[base + o];
                    dv += b * w_re[base + o] - a * w_im[base + o];
                }
                gx.re[xi] += du;
                gx.im[xi] += dv;
            }
        }
    }
    gx
}

/// Real 1-D convolution (SAME padding) used by the time-delay baseline.
pub fn real_conv1d_forward(x: &RealTensor, dims: ConvDims, params: &[f64]) -> Result<RealTensor> {
    dims.check(x.len, x.channels)?;
    let nw = dims.weights();
    let fo = dims.out_channels;
    let (w, b) = params.split_at(nw);
    let (out_len, pad) = same_padding(x.len, dims.kernel_len, dims.stride);
    let mut y = RealTensor::zeros(out_len, fo);
    for p in 0..out_len {
        let yp = &mut y.data[p * fo..(p + 1) * fo];
        yp.copy_from_slice(&b[..fo]);
        for k in 0..dims.kernel_len {
            let pos = (p * dims.stride + k) as isize - pad as isize;
            if pos < 0 || pos >= x.len as isize {
                continue;
            }
            let pos = pos as usize;
            for i in 0..dims.in_channels {
                let u = x.data[pos * x.channels + i];
                let base = dims.w(k, i);
                for o in 0..fo {
                    yp[o] += w[base + o] * u;
                }
            }
        }
    }
    Ok(y)
}

pub fn real_conv1d_backward(
    x: &RealTensor,
    dims: ConvDims,
    params: &[f64],
    g: &RealTensor,
    grads: &mut [f64],
) -> RealTensor {
    let nw = dims.weights();
    let fo = dims.out_channels;
    let w = &params[..nw];
    let (gw, gb) = grads.split_at_mut(nw);
    let (_, pad) = same_padding(x.len, dims.kernel_len, dims.stride);
    let mut gx = RealTensor::zeros(x.len, x.channels);
    for p in 0..g.len {
        let gp = &g.data[p * fo..(p + 1) * fo];
        for o in 0..fo {
            gb[o] += gp[o];
        }
        for k in 0..dims.kernel_len {
            let pos = (p * dims.stride + k) as isize - pad as isize;
            if pos < 0 || pos >= x.len as isize {
                continue;
            }
            let pos = pos as usize;
            for i in 0..dims.in_channels {
                let xi = pos * x.channels + i;
                let u = x.data[xi];
                let base = dims.w(k, i);
                let mut du = 0.0;
                for o in 0..fo {
                    gw[base + o] += gp[o] * u;
                    du += gp[o] * w[base + o];
                }
                gx.data[xi] += du;
            }
        }
    }
    gx
}

/// `[Re; Im] = [[W_R, −W_I], [W_I, W_R]] [u; v] + b` on the flattened input.
/// Weights are row-major `outputs x inputs`.
pub fn complex_affine_forward(x: &ComplexTensor, inputs: usize, outputs: usize, params: &[f64]) -> Result<ComplexTensor> {
    if x.size() != inputs {
        return shape(format!("affine layer expects {inputs} inputs, got {}", x.size()));
    }
    let nw = inputs * outputs;
    let (w_re, rest) = params.split_at(nw);
    let (w_im, rest) = rest.split_at(nw);
    let (b_re, b_im) = rest.split_at(outputs);
    let mut y = ComplexTensor::zeros(outputs, 1);
    for o in 0..outputs {
        let wr = &w_re[o * inputs..(o + 1) * inputs];
        let wi = &w_im[o * inputs..(o + 1) * inputs];
        let mut re = b_re[o];
        let mut im = b_im[o];
        for i in 0..inputs {
            re += wr[i] * x.re[i] - wi[i] * x.im[i];
            im += wi[i] * x.re[i] + wr[i] * x.im[i];
        }
        y.re[o] = re;
        y.im[o] = im;
    }
    Ok(y)
}

pub fn complex_affine_backward(
    x: &ComplexTensor,
    inputs: usize,
    outputs: usize,
    params: &[f64],
    g: &ComplexTensor,
    grads: &mut [f64],
) -> ComplexTensor {
    let nw = inputs * outputs;
    let (w_re, rest) = params.split_at(nw);
    let w_im = &rest[..nw];
    let (gw_re, rest) = grads.split_at_mut(nw);
    let (gw_im, rest) = rest.split_at_mut(nw);
    let (gb_re, gb_im) = rest.split_at_mut(outputs);
    let mut gx = ComplexTensor::zeros(x.len, x.channels);
    for o in 0..outputs {
        let (a, b) = (g.re[o], g.im[o]);
        gb_re[o] += a;
        gb_im[o] += b;
        let row = o * inputs;
        for i in 0..inputs {
            let (u, v) = (x.re[i], x.im[i]);
            gw_re[row + i] += a * u + b * v;
            gw_im[row + i] += b * u - a * v;
            gx.re[i] += a * w_re[row + i] + b * w_im[row + i];
            gx.im[i] += b * w_re[row + i] - a * w_im[row + i];
        }
    }
    gx
}

pub fn real_affine_forward(x: &RealTensor, inputs: usize, outputs: usize, params: &[f64]) -> Result<RealTensor> {
    if x.data.len() != inputs {
        return shape(format!("affine layer expects {inputs} inputs, got {}", x.data.len()));
    }
    let (w, b) = params.split_at(inputs * outputs);
    let data = (0..outputs)
        .map(|o| {
            let row = &w[o * inputs..(o + 1) * inputs];
            b[o] + row.iter().zip(&x.data).map(|(a, c)| a * c).sum::<f64>()
        })
        .collect();
    Ok(RealTensor::from_vec(data))
}

pub fn real_affine_backward(
    x: &RealTensor,
    inputs: usize,
    outputs: usize,
    params: &[f64],
    g: &RealTensor,
    grads: &mut [f64],
) -> RealTensor {
    let nw = inputs * outputs;
    let w = &params[..nw];
    let (gw, gb) = grads.split_at_mut(nw);
    let mut gx = RealTensor::zeros(x.len, x.channels);
    for (o, gbo) in gb.iter_mut().enumerate().take(outputs) {
        let go = g.data[o];
        *gbo += go;
        let row = o * inputs;
        for i in 0..inputs {
            gw[row + i] += go * x.data[i];
            gx.data[i] += go * w[row + i];
        }
    }
    gx
}

/// Argmax positions of a split max-pool, per plane.
#[derive(Debug, Clone)]
pub struct PoolIndex {
    pub re: Vec<usize>,
    pub im: Vec<usize>,
}

/// Max-pooling applied to the real and imaginary planes independently.
pub fn split_maxpool_forward(x: &ComplexTensor, pool_len: usize, stride: usize) -> (ComplexTensor, PoolIndex) {
    let (out_len, pad) = same_padding(x.len, pool_len, stride);
    let c = x.channels;
    let mut y = ComplexTensor::zeros(out_len, c);
    let mut idx = PoolIndex {
        re: vec![0; out_len * c],
        im: vec![0; out_len * c],
    };
    for p in 0..out_len {
        let start = (p * stride) as isize - pad as isize;
        for ch in 0..c {
            let mut best_re = (f64::NEG_INFINITY, usize::MAX);
            let mut best_im = (f64::NEG_INFINITY, usize::MAX);
            for k in 0..pool_len {
                let pos = start + k as isize;
                if pos < 0 || pos >= x.len as isize {
                    continue;
                }
                let i = pos as usize * c + ch;
                if x.re[i] > best_re.0 {
                    best_re = (x.re[i], i);
                }
                if x.im[i] > best_im.0 {
                    best_im = (x.im[i], i);
                }
            }
            let o = p * c + ch;
            y.re[o] = best_re.0;
            y.im[o] = best_im.0;
            idx.re[o] = best_re.1;
            idx.im[o] = best_im.1;
        }
    }
    (y, idx)
}

pub fn split_maxpool_backward(x: &ComplexTensor, idx: &PoolIndex, g: &ComplexTensor) -> ComplexTensor {
    let mut gx = ComplexTensor::zeros(x.len, x.channels);
    for (o, &i) in idx.re.iter().enumerate() {
        gx.re[i] += g.re[o];
    }
    for (o, &i) in idx.im.iter().enumerate() {
        gx.im[i] += g.im[o];
    }
    gx
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `tanh(u) + j tanh(v)`
pub fn ctanh(x: &ComplexTensor) -> ComplexTensor {
    ComplexTensor {
        len: x.len,
        channels: x.channels,
        re: x.re.iter().map(|v| v.tanh()).collect(),
        im: x.im.iter().map(|v| v.tanh()).collect(),
    }
}

/// Backward through `ctanh` given its output `y`.
pub fn ctanh_backward(y: &ComplexTensor, g: &ComplexTensor) -> ComplexTensor {
    ComplexTensor {
        len: y.len,
        channels: y.channels,
        re: y.re.iter().zip(&g.re).map(|(t, g)| g * (1.0 - t * t)).collect(),
        im: y.im.iter().zip(&g.im).map(|(t, g)| g * (1.0 - t * t)).collect(),
    }
}

/// `sigmoid(u) + j sigmoid(v)`
pub fn csigmoid(x: &ComplexTensor) -> ComplexTensor {
    ComplexTensor {
        len: x.len,
        channels: x.channels,
        re: x.re.iter().map(|&v| sigmoid(v)).collect(),
        im: x.im.iter().map(|&v| sigmoid(v)).collect(),
    }
}

/// Backward through `csigmoid` given its output `y`.
pub fn csigmoid_backward(y: &ComplexTensor, g: &ComplexTensor) -> ComplexTensor {
    ComplexTensor {
        len: y.len,
        channels: y.channels,
        re: y.re.iter().zip(&g.re).map(|(s, g)| g * s * (1.0 - s)).collect(),
        im: y.im.iter().zip(&g.im).map(|(s, g)| g * s * (1.0 - s)).collect(),
    }
}

/// `ρ = arctan(v / u)`; requires `u > 0` everywhere.
pub fn phase_map(x: &ComplexTensor) -> Result<RealTensor> {
    let mut data = Vec::with_capacity(x.size());
    for (&u, &v) in x.re.iter().zip(&x.im) {
        if !(u > 0.0) {
            return domain(format!("phase mapping needs a positive real part, got {u}"));
        }
        data.push((v / u).atan());
    }
    Ok(RealTensor {
        len: x.len,
        channels: x.channels,
        data,
    })
}

pub fn phase_map_backward(x: &ComplexTensor, g: &RealTensor) -> ComplexTensor {
    let mut gx = ComplexTensor::zeros(x.len, x.channels);
    for i in 0..x.size() {
        let (u, v) = (x.re[i], x.im[i]);
        let r2 = u * u + v * v;
        gx.re[i] = -g.data[i] * v / r2;
        gx.im[i] = g.data[i] * u / r2;
    }
    gx
}

pub fn tanh_forward(x: &RealTensor) -> RealTensor {
    RealTensor {
        len: x.len,
        channels: x.channels,
        data: x.data.iter().map(|v| v.tanh()).collect(),
    }
}

pub fn tanh_backward(y: &RealTensor, g: &RealTensor) -> RealTensor {
    RealTensor {
        len: y.len,
        channels: y.channels,
        data: y.data.iter().zip(&g.data).map(|(t, g)| g * (1.0 - t * t)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_4;

    fn real_input(v: &[f64]) -> ComplexTensor {
        ComplexTensor::new(v.len(), 1, v.to_vec(), vec![0.0; v.len()]).unwrap()
    }

    #[test]
    fn same_padding_lengths() {
        assert_eq!(same_padding(33, 3, 1), (33, 1));
        assert_eq!(same_padding(33, 2, 2), (17, 0));
        assert_eq!(same_padding(17, 2, 2), (9, 0));
        assert_eq!(same_padding(5, 2, 2), (3, 0));
        assert_eq!(same_padding(10, 3, 2), (5, 0));
    }

    #[test]
    fn affine_reduces_to_real_map() {
        let x = real_input(&[1.0, -2.0]);
        let params = [1.0, 2.0, 3.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.5, -0.5, 0.0, 0.0];
        let y = complex_affine_forward(&x, 2, 2, &params).unwrap();
        assert_eq!(y.re, vec![1.0 - 4.0 + 0.5, 3.0 - 8.0 - 0.5]);
        assert_eq!(y.im, vec![0.0, 0.0]);
    }

    #[test]
    fn affine_times_j() {
        let x = ComplexTensor::new(2, 1, vec![1.0, 2.0], vec![3.0, -4.0]).unwrap();
        // W = jI
        let params = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let y = complex_affine_forward(&x, 2, 2, &params).unwrap();
        assert_eq!(y.re, vec![-3.0, 4.0]);
        assert_eq!(y.im, vec![1.0, 2.0]);
    }

    #[test]
    fn affine_matches_complex_matvec() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let params: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = ComplexTensor::new(2, 1, vec![0.3, -0.7], vec![1.1, 0.2]).unwrap();
        let y = complex_affine_forward(&x, 2, 2, &params).unwrap();
        for o in 0..2 {
            let mut acc = Complex64::new(params[8 + o], params[10 + o]);
            for i in 0..2 {
                let w = Complex64::new(params[o * 2 + i], params[4 + o * 2 + i]);
                acc += w * x.get(i, 0);
            }
            assert!((acc.re - y.re[o]).abs() < 1e-14);
            assert!((acc.im - y.im[o]).abs() < 1e-14);
        }
    }

    #[test]
    fn conv_delta_kernel_is_identity() {
        let dims = ConvDims {
            kernel_len: 3,
            in_channels: 1,
            out_channels: 1,
            stride: 1,
        };
        let x = ComplexTensor::new(4, 1, vec![1.0, -2.0, 3.0, 0.5], vec![0.1, 0.2, -0.3, 0.4]).unwrap();
        let params = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(complex_conv1d_forward(&x, dims, &params).unwrap(), x);
    }

    #[test]
    fn conv_ones_kernel() {
        let dims = ConvDims {
            kernel_len: 3,
            in_channels: 1,
            out_channels: 1,
            stride: 1,
        };
        let params = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let y = complex_conv1d_forward(&real_input(&[1.0, 2.0, 3.0]), dims, &params).unwrap();
        assert_eq!(y.re, vec![3.0, 6.0, 5.0]);
        assert_eq!(y.im, vec![0.0; 3]);

        // jK on real input
        let params = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0];
        let y = complex_conv1d_forward(&real_input(&[1.0, 2.0, 3.0]), dims, &params).unwrap();
        assert_eq!(y.re, vec![0.0; 3]);
        assert_eq!(y.im, vec![3.0, 6.0, 5.0]);
    }

    #[test]
    fn conv_strided_length() {
        let dims = ConvDims {
            kernel_len: 3,
            in_channels: 2,
            out_channels: 4,
            stride: 2,
        };
        let params = vec![0.1; 2 * dims.weights() + 8];
        let y = complex_conv1d_forward(&ComplexTensor::zeros(9, 2), dims, &params).unwrap();
        assert_eq!((y.len, y.channels), (5, 4));
        assert!(complex_conv1d_forward(&ComplexTensor::zeros(9, 3), dims, &params).is_err());
    }

    #[test]
    fn pool_examples() {
        let (y, _) = split_maxpool_forward(&real_input(&[1.0, 3.0, 2.0, 0.0]), 2, 2);
        assert_eq!(y.re, vec![3.0, 2.0]);
        let x = ComplexTensor::new(2, 1, vec![1.0, 3.0], vec![4.0, 1.0]).unwrap();
        let (y, _) = split_maxpool_forward(&x, 2, 2);
        assert_eq!(y.get(0, 0), Complex64::new(3.0, 4.0));
        let (y, _) = split_maxpool_forward(&real_input(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2, 2);
        assert_eq!(y.len, 3);
        assert_eq!(y.re, vec![2.0, 4.0, 5.0]);
    }

    #[test]
    fn activation_values() {
        let zero = ComplexTensor::zeros(1, 1);
        assert_eq!(ctanh(&zero), zero);
        let s = csigmoid(&zero);
        assert_eq!(s.get(0, 0), Complex64::new(0.5, 0.5));
        let one = ComplexTensor::new(1, 1, vec![1.0], vec![1.0]).unwrap();
        assert!((phase_map(&one).unwrap().data[0] - FRAC_PI_4).abs() < 1e-15);
        assert!((phase_map(&s).unwrap().data[0] - FRAC_PI_4).abs() < 1e-15);
        let bad = ComplexTensor::new(1, 1, vec![0.0], vec![1.0]).unwrap();
        assert!(phase_map(&bad).is_err());
    }
}
