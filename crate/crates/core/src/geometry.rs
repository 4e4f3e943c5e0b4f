//! Uniform linear array geometry and steering vectors.
//!
//! Lengths are expressed in wavelengths throughout; the physical wavelength
//! in meters is only carried along for reporting. Element indices are
//! 1-based in the public API, matching the usual array-processing notation,
//! and the reference element `n_c` sits at the array center.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Geometry of an `N`-element uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    n_elements: usize,
    spacing: f64,
    wavelength: f64,
}

impl ArrayConfig {
    /// `spacing` is in wavelengths, `wavelength` in meters.
    pub fn new(n_elements: usize, spacing: f64, wavelength: f64) -> Result<Self> {
        if n_elements < 2 {
            return domain(format!("array needs at least 2 elements, got {n_elements}"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return domain(format!("element spacing must be positive, got {spacing}"));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return domain(format!("wavelength must be positive, got {wavelength}"));
        }
        Ok(Self {
            n_elements,
            spacing,
            wavelength,
        })
    }

    /// Half-wavelength array at 28 GHz.
    pub fn half_wavelength(n_elements: usize) -> Result<Self> {
        Self::new(n_elements, 0.5, 0.0107)
    }

    pub fn n_elements(&self) -> usize {
        self.n_elements
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// 1-based reference element: `(N + 1) / 2` for odd `N`, `N / 2` for even `N`.
    pub fn ref_index(&self) -> usize {
        if self.n_elements % 2 == 1 {
            self.n_elements.div_ceil(2)
        } else {
            self.n_elements / 2
        }
    }

    /// Offset `n - n_c` of the 1-based element `n` from the reference.
    pub fn offset(&self, n: usize) -> f64 {
        n as f64 - self.ref_index() as f64
    }

    /// Aperture `(N - 1) d` in wavelengths.
    pub fn aperture(&self) -> f64 {
        (self.n_elements - 1) as f64 * self.spacing
    }

    fn offsets(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.n_elements).map(move |n| self.offset(n))
    }
}

/// Angle (radians) and range (wavelengths) of one source, measured from the
/// reference element.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourcePlacement {
    pub theta: f64,
    pub range: f64,
}

impl SourcePlacement {
    pub fn new(theta: f64, range: f64) -> Result<Self> {
        if !(theta.abs() < FRAC_PI_2) {
            return domain(format!("source angle {theta} rad outside (-pi/2, pi/2)"));
        }
        if !(range > 0.0 && range.is_finite()) {
            return domain(format!("source range must be positive, got {range}"));
        }
        Ok(Self { theta, range })
    }

    pub fn from_degrees(theta_deg: f64, range: f64) -> Result<Self> {
        Self::new(theta_deg.to_radians(), range)
    }

    /// Checks the range against the Fresnel zone of `config`.
    ///
    /// Outside the zone this is an error when `strict`, otherwise a logged
    /// warning.
    pub fn check_fresnel(&self, config: &ArrayConfig, strict: bool) -> Result<()> {
        let (lo, hi) = fresnel_bounds(config);
        if self.range > lo && self.range < hi {
            return Ok(());
        }
        let msg = format!(
            "source range {}λ outside Fresnel zone ({lo:.3}λ, {hi:.3}λ)",
            self.range
        );
        if strict {
            domain(msg)
        } else {
            log::warn!("{msg}");
            Ok(())
        }
    }
}

/// Linear (`alpha`) and quadratic (`beta`) phase coefficients of the Fresnel
/// approximation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelParams {
    pub alpha: f64,
    pub beta: f64,
}

/// Rayleigh distance `2 D^2 / λ`. Both arguments share one length unit.
pub fn rayleigh_distance(aperture: f64, wavelength: f64) -> Result<f64> {
    if !(aperture > 0.0) || !(wavelength > 0.0) {
        return domain(format!(
            "aperture ({aperture}) and wavelength ({wavelength}) must be positive"
        ));
    }
    Ok(2.0 * aperture * aperture / wavelength)
}

/// Fresnel zone `(0.62 sqrt(D^3/λ), 2 D^2/λ)` in wavelengths.
pub fn fresnel_bounds(config: &ArrayConfig) -> (f64, f64) {
    let d = config.aperture();
    (0.62 * (d * d * d).sqrt(), 2.0 * d * d)
}

/// Distance in wavelengths from the 1-based element `n` to the source.
pub fn exact_range(source: &SourcePlacement, config: &ArrayConfig, n: usize) -> f64 {
    let x = config.offset(n) * config.spacing;
    let r = source.range;
    (r * r + x * x - 2.0 * r * x * source.theta.sin()).sqrt()
}

// r_n - r without the cancellation of the direct difference at large r.
fn range_excess(r: f64, x: f64, sin_theta: f64) -> f64 {
    let rn = (r * r + x * x - 2.0 * r * x * sin_theta).sqrt();
    (x * x - 2.0 * r * x * sin_theta) / (rn + r)
}

/// Exact spherical-wavefront steering vector, referenced to element `n_c`.
///
/// Entry `n` is `(r / r_n) exp(-j 2π (r_n - r))`.
pub fn near_field_steering(source: &SourcePlacement, config: &ArrayConfig) -> Vec<Complex64> {
    let r = source.range;
    let s = source.theta.sin();
    config
        .offsets()
        .map(|delta| {
            if delta == 0.0 {
                return Complex64::new(1.0, 0.0);
            }
            let x = delta * config.spacing;
            let excess = range_excess(r, x, s);
            let kappa = r / (r + excess);
            Complex64::from_polar(kappa, -2.0 * PI * excess)
        })
        .collect()
}

/// Fresnel-approximated steering vector `κ_n exp(j(δ_n α - δ_n² β))`.
pub fn fresnel_steering(source: &SourcePlacement, config: &ArrayConfig) -> Vec<Complex64> {
    let FresnelParams { alpha, beta } = fresnel_params(source, config);
    config
        .offsets()
        .enumerate()
        .map(|(i, delta)| {
            let kappa = source.range / exact_range(source, config, i + 1);
            Complex64::from_polar(kappa, delta * alpha - delta * delta * beta)
        })
        .collect()
}

/// Far-field steering vector referenced to the first element:
/// entry `n` is `exp(j 2π (n-1) d sinθ)`.
pub fn far_field_steering(theta: f64, config: &ArrayConfig) -> Vec<Complex64> {
    far_field_steering_len(theta, config.spacing, config.n_elements)
}

pub(crate) fn far_field_steering_len(theta: f64, spacing: f64, len: usize) -> Vec<Complex64> {
    let step = 2.0 * PI * spacing * theta.sin();
    (0..len)
        .map(|i| Complex64::from_polar(1.0, step * i as f64))
        .collect()
}

pub fn fresnel_params(source: &SourcePlacement, config: &ArrayConfig) -> FresnelParams {
    let d = config.spacing;
    let c = source.theta.cos();
    FresnelParams {
        alpha: 2.0 * PI * d * source.theta.sin(),
        beta: PI * d * d / source.range * c * c,
    }
}
