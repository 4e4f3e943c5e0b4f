use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covariance::{crop_vcm, reconstruct_vcm, sample_covariance, CovMatrix};
use crate::error::{domain, Result};
use crate::geometry::{ArrayConfig, SourcePlacement};
use crate::sim::{derive_seed, received_snapshots, NoiseSpec, SnapshotSet};
use crate::subspace::signal_subspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Train,
    Test,
}

impl Role {
    fn salt(self) -> u64 {
        match self {
            Role::Train => 0x0074_7261_696e,
            Role::Test => 0x7465_7374,
        }
    }
}

/// Grid of single-source conditions turned into `(feature, angle)` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    /// `(lo, hi, step)` in wavelengths, both ends included.
    pub distance_range: (f64, f64, f64),
    /// `(lo, hi, step)` in degrees; points with `|θ| >= 90°` are skipped.
    pub theta_range: (f64, f64, f64),
    pub snapshots: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub n_in: usize,
    pub array: ArrayConfig,
    pub role: Role,
    #[serde(default)]
    pub strict_fresnel: bool,
}

/// Inclusive arithmetic progression, tolerant to rounding at the upper end.
pub fn progression(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return domain(format!("invalid range ({lo}, {hi}, {step})"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

impl DatasetSpec {
    /// Four training distances {400, 800, 1200, 1600}λ, 0.5° angle step,
    /// K = 100, 10 dB, 65 elements cropped to 33.
    pub fn desk_train(seed: u64) -> Self {
        Self {
            distance_range: (400.0, 1600.0, 400.0),
            theta_range: (-90.0, 90.0, 0.5),
            snapshots: 100,
            snr_db: 10.0,
            seed,
            n_in: 33,
            array: ArrayConfig::half_wavelength(65).expect("valid array"),
            role: Role::Train,
            strict_fresnel: false,
        }
    }

    /// Unseen distance 1000λ, 0.7° angle step symmetric about broadside
    /// (±89.6°), otherwise as [`Self::desk_train`].
    pub fn desk_test(seed: u64) -> Self {
        Self {
            distance_range: (1000.0, 1000.0, 25.0),
            theta_range: (-89.6, 89.6, 0.7),
            role: Role::Test,
            ..Self::desk_train(seed)
        }
    }

    pub fn distances(&self) -> Result<Vec<f64>> {
        let (lo, hi, step) = self.distance_range;
        progression(lo, hi, step)
    }

    /// Angles in radians.
    pub fn thetas(&self) -> Result<Vec<f64>> {
        let (lo, hi, step) = self.theta_range;
        Ok(progression(lo, hi, step)?
            .into_iter()
            .filter(|t| t.abs() < 90.0 - 1e-9)
            .map(f64::to_radians)
            .collect())
    }

    pub fn len(&self) -> Result<usize> {
        Ok(self.distances()?.len() * self.thetas()?.len())
    }

    pub fn is_empty(&self) -> Result<bool> {
        Ok(self.len()? == 0)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.array.n_elements();
        if self.n_in == 0 || self.n_in > n || !(n - self.n_in).is_multiple_of(2) {
            return domain(format!("n_in = {} incompatible with a {n}-element array", self.n_in));
        }
        if self.snapshots == 0 {
            return domain("snapshot count must be positive");
        }
        if self.snr_db.is_nan() {
            return domain("SNR is NaN");
        }
        if self.distances()?.iter().any(|r| !(*r > 0.0)) {
            return domain("distances must be positive");
        }
        if self.thetas()?.is_empty() {
            return domain("angle grid is empty");
        }
        Ok(())
    }

    /// Noise/symbol seed of sample `index`.
    pub fn sample_seed(&self, index: usize) -> u64 {
        derive_seed(derive_seed(self.seed, self.role.salt()), index as u64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub feature: Vec<Complex64>,
    /// Radians.
    pub theta: f64,
    /// Wavelengths; kept for stratification and reporting, never a network input.
    pub range: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<Sample>,
    pub n_in: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.theta).collect()
    }
}

/// Canonicalized principal eigenvector of the cropped VCM of a raw covariance.
pub fn feature_from_covariance(raw: &CovMatrix, n_in: usize) -> Result<Vec<Complex64>> {
    let vcm = reconstruct_vcm(raw)?;
    let cov = if n_in == vcm.dim() { vcm } else { crop_vcm(&vcm, n_in)? };
    Ok(signal_subspace(&cov, 1)?.vector(0))
}

pub fn feature_from_snapshots(set: &SnapshotSet, n_in: usize) -> Result<Vec<Complex64>> {
    feature_from_covariance(&sample_covariance(set)?, n_in)
}

/// Simulates one condition and returns the snapshots with the extracted feature.
pub fn simulate_sample(
    source: SourcePlacement,
    array: &ArrayConfig,
    snapshots: usize,
    noise: NoiseSpec,
    n_in: usize,
) -> Result<(SnapshotSet, Sample)> {
    let set = received_snapshots(&[source], array, snapshots, noise)?;
    let feature = feature_from_snapshots(&set, n_in)?;
    Ok((
        set,
        Sample {
            feature,
            theta: source.theta,
            range: source.range,
        },
    ))
}

/// One sample per `(distance, angle)` grid point, distance-major.
pub fn build_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let distances = spec.distances()?;
    let thetas = spec.thetas()?;
    let mut samples = Vec::with_capacity(distances.len() * thetas.len());
    for &range in &distances {
        for &theta in &thetas {
            let source = SourcePlacement::new(theta, range)?;
            source.check_fresnel(&spec.array, spec.strict_fresnel)?;
            let noise = NoiseSpec::new(spec.snr_db, spec.sample_seed(samples.len()));
            let (_, sample) = simulate_sample(source, &spec.array, spec.snapshots, noise, spec.n_in)?;
            samples.push(sample);
        }
    }
    Ok(Dataset {
        samples,
        n_in: spec.n_in,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_cardinality() {
        assert_eq!(DatasetSpec::desk_train(0).distances().unwrap(), vec![400.0, 800.0, 1200.0, 1600.0]);
        assert_eq!(DatasetSpec::desk_train(0).thetas().unwrap().len(), 359);
        assert_eq!(DatasetSpec::desk_train(0).len().unwrap(), 1436);
        assert_eq!(DatasetSpec::desk_test(0).thetas().unwrap().len(), 257);
        assert_eq!(progression(200.0, 1800.0, 25.0).unwrap().len(), 65);
        assert_eq!(progression(-90.0, 90.0, 0.01).unwrap().len(), 18001);
    }

    #[test]
    fn deterministic_features() {
        let spec = DatasetSpec {
            distance_range: (500.0, 500.0, 1.0),
            theta_range: (-10.0, 10.0, 10.0),
            ..DatasetSpec::desk_train(42)
        };
        let a = build_dataset(&spec).unwrap();
        let b = build_dataset(&spec).unwrap();
        assert_eq!(a.len(), 3);
        for (x, y) in a.samples[0].feature.iter().zip(&b.samples[0].feature) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
        assert_eq!(a.samples[0].feature.len(), 33);
        let test = DatasetSpec {
            role: Role::Test,
            ..spec
        };
        assert_ne!(spec_seed(&test), spec_seed(&DatasetSpec { role: Role::Train, ..test.clone() }));
    }

    fn spec_seed(s: &DatasetSpec) -> u64 {
        s.sample_seed(0)
    }

    #[test]
    fn invalid_specs() {
        let bad = DatasetSpec {
            n_in: 32,
            ..DatasetSpec::desk_train(0)
        };
        assert!(bad.validate().is_err());
        let bad = DatasetSpec {
            theta_range: (10.0, 0.0, 1.0),
            ..DatasetSpec::desk_train(0)
        };
        assert!(bad.validate().is_err());
        let strict = DatasetSpec {
            distance_range: (50.0, 50.0, 1.0),
            theta_range: (0.0, 0.0, 1.0),
            strict_fresnel: true,
            ..DatasetSpec::desk_train(0)
        };
        assert!(build_dataset(&strict).is_err());
    }
}
