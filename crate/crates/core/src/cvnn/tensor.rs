use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Result};

/// `len x channels` complex activations stored as split real/imaginary planes,
/// index `l * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    pub len: usize,
    pub channels: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexTensor {
    pub fn zeros(len: usize, channels: usize) -> Self {
        Self {
            len,
            channels,
            re: vec![0.0; len * channels],
            im: vec![0.0; len * channels],
        }
    }

    pub fn new(len: usize, channels: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != len * channels || im.len() != len * channels {
            return shape(format!(
                "planes of {} and {} values for a {len}x{channels} tensor",
                re.len(),
                im.len()
            ));
        }
        Ok(Self { len, channels, re, im })
    }

    /// Single-channel tensor from a complex vector.
    pub fn from_complex(v: &[Complex64]) -> Self {
        Self {
            len: v.len(),
            channels: 1,
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.re.len()
    }

    pub fn get(&self, l: usize, c: usize) -> Complex64 {
        let i = l * self.channels + c;
        Complex64::new(self.re[i], self.im[i])
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| Complex64::new(r, i)).collect()
    }
}

/// `len x channels` real activations, index `l * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTensor {
    pub len: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl RealTensor {
    pub fn zeros(len: usize, channels: usize) -> Self {
        Self {
            len,
            channels,
            data: vec![0.0; len * channels],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Self {
            len: data.len(),
            channels: 1,
            data,
        }
    }
}

/// Activations flowing between layers.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Complex(ComplexTensor),
    Real(RealTensor),
}

impl Signal {
    pub fn shape(&self) -> Shape {
        match self {
            Signal::Complex(t) => Shape::complex(t.len, t.channels),
            Signal::Real(t) => Shape::real(t.len, t.channels),
        }
    }

    pub fn as_complex(&self) -> Result<&ComplexTensor> {
        match self {
            Signal::Complex(t) => Ok(t),
            Signal::Real(_) => shape("expected complex activations, got real"),
        }
    }

    pub fn as_real(&self) -> Result<&RealTensor> {
        match self {
            Signal::Real(t) => Ok(t),
            Signal::Complex(_) => shape("expected real activations, got complex"),
        }
    }

    pub(crate) fn zeros_like(&self) -> Signal {
        match self {
            Signal::Complex(t) => Signal::Complex(ComplexTensor::zeros(t.len, t.channels)),
            Signal::Real(t) => Signal::Real(RealTensor::zeros(t.len, t.channels)),
        }
    }
}

/// Shape of a [`Signal`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub len: usize,
    pub channels: usize,
    pub complex: bool,
}

impl Shape {
    pub fn complex(len: usize, channels: usize) -> Self {
        Self {
            len,
            channels,
            complex: true,
        }
    }

    pub fn real(len: usize, channels: usize) -> Self {
        Self {
            len,
            channels,
            complex: false,
        }
    }

    pub fn size(&self) -> usize {
        self.len * self.channels
    }
}
