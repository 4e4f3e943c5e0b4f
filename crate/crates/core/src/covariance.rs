//! Covariance estimation and the virtual covariance matrix (VCM).
//!
//! The VCM keeps, for each lag `t`, only the entries of the sample covariance
//! whose near-field phase error is smallest (the pair of elements placed
//! symmetrically about the reference), averages them and broadcasts the value
//! along the whole diagonal. The result is Hermitian Toeplitz like a
//! far-field covariance, with the range dependence largely removed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmat::CMatrix;
use crate::error::{domain, shape, Result};
use crate::geometry::{far_field_steering, near_field_steering, ArrayConfig, SourcePlacement};
use crate::sim::SnapshotSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovKind {
    Raw,
    Vcm,
    Cropped,
}

/// Hermitian covariance matrix tagged with its processing stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovMatrix {
    pub data: CMatrix,
    pub kind: CovKind,
}

impl CovMatrix {
    /// Wraps `data`, enforcing exact Hermitian symmetry.
    pub fn new(mut data: CMatrix, kind: CovKind) -> Result<Self> {
        if !data.is_square() {
            return shape(format!("covariance must be square, got {}x{}", data.rows(), data.cols()));
        }
        data.symmetrize();
        Ok(Self { data, kind })
    }

    pub fn dim(&self) -> usize {
        self.data.rows()
    }

    /// Largest deviation of any entry from its diagonal's first entry.
    pub fn toeplitz_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 1..n {
            for j in 1..n {
                worst = worst.max((self.data[(i, j)] - self.data[(i - 1, j - 1)]).norm());
            }
        }
        worst
    }
}

/// `(1/K) sum_k y(k) y(k)^H`.
pub fn sample_covariance(snapshots: &SnapshotSet) -> Result<CovMatrix> {
    sample_covariance_of(&snapshots.data)
}

/// Sample covariance of an `N x K` data matrix.
pub fn sample_covariance_of(data: &CMatrix) -> Result<CovMatrix> {
    let (n, k) = (data.rows(), data.cols());
    if k == 0 {
        return domain("covariance of zero snapshots");
    }
    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        let yi = data.row(i);
        for j in i..n {
            let yj = data.row(j);
            let acc: Complex64 = yi.iter().zip(yj).map(|(a, b)| a * b.conj()).sum();
            r[(i, j)] = acc / k as f64;
            r[(j, i)] = r[(i, j)].conj();
        }
    }
    CovMatrix::new(r, CovKind::Raw)
}

/// Expected covariance `A A^H + σ² I` for unit-power uncorrelated sources
/// and exact near-field steering.
pub fn analytic_covariance(
    sources: &[SourcePlacement],
    config: &ArrayConfig,
    noise_variance: f64,
) -> Result<CovMatrix> {
    let n = config.n_elements();
    let steering: Vec<_> = sources.iter().map(|s| near_field_steering(s, config)).collect();
    let r = CMatrix::from_fn(n, n, |p, q| {
        let mut acc: Complex64 = steering.iter().map(|a| a[p] * a[q].conj()).sum();
        if p == q {
            acc += noise_variance;
        }
        acc
    });
    CovMatrix::new(r, CovKind::Raw)
}

/// Covariance of far-field sources at the same angles:
/// `[R̄]_{p,q} = sum_m exp(j(p-q)α_m) + σ² δ(p-q)`.
pub fn far_field_ideal_covariance(
    sources: &[SourcePlacement],
    config: &ArrayConfig,
    noise_variance: f64,
) -> Result<CovMatrix> {
    let n = config.n_elements();
    let steering: Vec<_> = sources
        .iter()
        .map(|s| far_field_steering(s.theta, config))
        .collect();
    let r = CMatrix::from_fn(n, n, |p, q| {
        let mut acc: Complex64 = steering.iter().map(|a| a[p] * a[q].conj()).sum();
        if p == q {
            acc += noise_variance;
        }
        acc
    });
    CovMatrix::new(r, CovKind::Raw)
}

/// `|[R]_{p,p+t} - [R̄]_{p,p+t}|²` with 1-based `p`.
pub fn approximation_error(raw: &CovMatrix, ideal: &CovMatrix, p: usize, t: i64) -> Result<f64> {
    let n = raw.dim();
    if ideal.dim() != n {
        return shape("covariances of different sizes");
    }
    let q = p as i64 + t;
    if p == 0 || p > n || q < 1 || q > n as i64 {
        return domain(format!("entry ({p}, {q}) outside a {n}x{n} matrix"));
    }
    let (i, j) = (p - 1, q as usize - 1);
    Ok((raw.data[(i, j)] - ideal.data[(i, j)]).norm_sqr())
}

/// Reference element (1-based) used by the VCM index rules for size `n`.
pub fn reference_index(n: usize) -> usize {
    if n % 2 == 1 {
        n.div_ceil(2)
    } else {
        n / 2
    }
}

/// `⌊n_c - t/2⌋`
pub fn chi_l(n_c: usize, t: i64) -> i64 {
    (2 * n_c as i64 - t).div_euclid(2)
}

/// `⌊n_c - (t-1)/2⌋`
pub fn chi_r(n_c: usize, t: i64) -> i64 {
    (2 * n_c as i64 - t + 1).div_euclid(2)
}

/// The 1-based `(row, col)` pairs averaged for lag `t`, skipping any that
/// fall outside the array (only possible at the largest lag for even `N`).
pub fn vcm_sources(n: usize, t: i64) -> Vec<(usize, usize)> {
    let n_c = reference_index(n);
    let valid = |i: i64| i >= 1 && i <= n as i64;
    [
        (chi_l(n_c, t), chi_l(n_c, -t)),
        (chi_r(n_c, t), chi_r(n_c, -t)),
    ]
    .into_iter()
    .filter(|&(a, b)| valid(a) && valid(b))
    .map(|(a, b)| (a as usize, b as usize))
    .collect()
}

/// Builds the Hermitian Toeplitz virtual covariance matrix from a raw covariance.
pub fn reconstruct_vcm(raw: &CovMatrix) -> Result<CovMatrix> {
    if raw.kind != CovKind::Raw {
        return domain(format!("VCM reconstruction expects a raw covariance, got {:?}", raw.kind));
    }
    let n = raw.dim();
    let mut lags = Vec::with_capacity(n);
    for t in 0..n as i64 {
        let picks = vcm_sources(n, t);
        debug_assert!(!picks.is_empty());
        let sum: Complex64 = picks.iter().map(|&(a, b)| raw.data[(a - 1, b - 1)]).sum();
        lags.push(sum / picks.len() as f64);
    }
    lags[0].im = 0.0;
    let m = CMatrix::from_fn(n, n, |p, q| {
        if q >= p {
            lags[q - p]
        } else {
            lags[p - q].conj()
        }
    });
    CovMatrix::new(m, CovKind::Vcm)
}

/// 0-based index of the first kept row when cropping `n` down to `n_in`.
pub fn crop_start(n: usize, n_in: usize) -> usize {
    (n - n_in) / 2
}

/// Central `n_in x n_in` block of a VCM.
pub fn crop_vcm(vcm: &CovMatrix, n_in: usize) -> Result<CovMatrix> {
    if vcm.kind != CovKind::Vcm {
        return domain(format!("cropping expects a VCM, got {:?}", vcm.kind));
    }
    let n = vcm.dim();
    if n_in == 0 || n_in >= n {
        return domain(format!("crop size {n_in} must lie in 1..{n}"));
    }
    if !(n - n_in).is_multiple_of(2) {
        return domain(format!("N - n_in must be even for a centered crop (N={n}, n_in={n_in})"));
    }
    CovMatrix::new(vcm.data.block(crop_start(n, n_in), n_in), CovKind::Cropped)
}
