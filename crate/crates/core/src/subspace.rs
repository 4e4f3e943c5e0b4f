//! Signal/noise subspace extraction and far-field MUSIC on (virtual) covariances.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmat::CMatrix;
use crate::covariance::{CovKind, CovMatrix};
use crate::eigen::{hermitian_eig, HermitianEigen};
use crate::error::{domain, Result};
use crate::geometry::far_field_steering_len;

/// Top-`M` eigenvectors of a covariance with their eigenvalues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subspace {
    /// `dim x M`, one canonicalized eigenvector per column.
    pub vectors: CMatrix,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Mean of the discarded eigenvalues.
    pub noise_floor: f64,
}

impl Subspace {
    pub fn vector(&self, m: usize) -> Vec<Complex64> {
        self.vectors.column(m)
    }
}

/// Position whose entry is made real and non-negative: the center row.
pub fn reference_position(dim: usize) -> usize {
    dim / 2
}

/// Removes the arbitrary unit-modulus factor of an eigenvector by making the
/// entry at [`reference_position`] real and non-negative. Falls back to the
/// largest-magnitude entry when the center entry vanishes.
pub fn canonicalize(v: &mut [Complex64]) {
    if v.is_empty() {
        return;
    }
    let peak = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return;
    }
    let mut anchor = v[reference_position(v.len())];
    if anchor.norm() <= 1e-9 * peak {
        anchor = *v
            .iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("non-empty");
    }
    let gauge = anchor.conj() / anchor.norm();
    for z in v.iter_mut() {
        *z *= gauge;
    }
    let r = reference_position(v.len());
    if v[r].norm() > 1e-9 * peak {
        v[r].im = 0.0;
    }
}

/// Signal subspace of dimension `n_sources`.
pub fn signal_subspace(m: &CovMatrix, n_sources: usize) -> Result<Subspace> {
    let dim = m.dim();
    if n_sources == 0 || n_sources >= dim {
        return domain(format!("source count {n_sources} must lie in 1..{dim}"));
    }
    let eig = hermitian_eig(&m.data)?;
    Ok(subspace_from_eig(&eig, n_sources))
}

pub(crate) fn subspace_from_eig(eig: &HermitianEigen, n_sources: usize) -> Subspace {
    let dim = eig.values.len();
    let mut vectors = CMatrix::zeros(dim, n_sources);
    for k in 0..n_sources {
        let mut col = eig.vectors.column(k);
        canonicalize(&mut col);
        for (i, z) in col.into_iter().enumerate() {
            vectors[(i, k)] = z;
        }
    }
    let rest = &eig.values[n_sources..];
    Subspace {
        vectors,
        eigenvalues: eig.values[..n_sources].to_vec(),
        noise_floor: rest.iter().sum::<f64>() / rest.len() as f64,
    }
}

/// Far-field MUSIC pseudo-spectrum `1 / (a^H Ξ_z Ξ_z^H a)` of any covariance.
///
/// Used for beam-pattern comparisons between raw and reconstructed matrices.
pub fn beam_pattern(cov: &CovMatrix, n_sources: usize, theta_grid: &[f64], spacing: f64) -> Result<Vec<f64>> {
    let dim = cov.dim();
    if n_sources >= dim {
        return domain(format!("{n_sources} sources leave no noise subspace in dimension {dim}"));
    }
    let eig = hermitian_eig(&cov.data)?;
    let noise: Vec<Vec<Complex64>> = (n_sources..dim).map(|k| eig.vectors.column(k)).collect();
    Ok(theta_grid
        .iter()
        .map(|&theta| {
            let a = far_field_steering_len(theta, spacing, dim);
            let denom: f64 = noise
                .iter()
                .map(|xi| crate::cmat::inner(xi, &a).norm_sqr())
                .sum();
            1.0 / denom.max(f64::MIN_POSITIVE)
        })
        .collect())
}

/// Far-field MUSIC on a reconstructed (optionally cropped) VCM.
pub fn music_spectrum_far(vcm: &CovMatrix, n_sources: usize, theta_grid: &[f64], spacing: f64) -> Result<Vec<f64>> {
    if vcm.kind == CovKind::Raw {
        return domain("far-field MUSIC expects a VCM or cropped VCM");
    }
    beam_pattern(vcm, n_sources, theta_grid, spacing)
}

/// Indices of local maxima (plateaus count once), strongest first.
pub fn find_peaks(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] > values[i - 1];
            let right = i + 1 == n || values[i] >= values[i + 1];
            left && right
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks
}

/// Vertex offset in `(-0.5, 0.5)` grid steps of the parabola through three samples.
pub fn parabolic_offset(left: f64, center: f64, right: f64) -> f64 {
    let denom = left - 2.0 * center + right;
    if denom >= 0.0 || !denom.is_finite() {
        return 0.0;
    }
    (0.5 * (left - right) / denom).clamp(-0.5, 0.5)
}

/// Mean level in dB (relative to the spectrum maximum) over grid points more
/// than `exclusion` away from every angle in `truths`.
pub fn mean_sidelobe_db(spectrum: &[f64], grid: &[f64], truths: &[f64], exclusion: f64) -> f64 {
    let peak = spectrum.iter().cloned().fold(f64::MIN, f64::max);
    let (sum, count) = spectrum
        .iter()
        .zip(grid)
        .filter(|(_, &g)| truths.iter().all(|t| (g - t).abs() > exclusion))
        .fold((0.0, 0usize), |(s, c), (p, _)| (s + 10.0 * (p / peak).log10(), c + 1));
    sum / count.max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{analytic_covariance, far_field_ideal_covariance, reconstruct_vcm, sample_covariance};
    use crate::geometry::{far_field_steering, ArrayConfig, SourcePlacement};
    use crate::sim::{received_snapshots, NoiseSpec};

    fn cfg() -> ArrayConfig {
        ArrayConfig::half_wavelength(65).unwrap()
    }

    fn grid(step_deg: f64) -> Vec<f64> {
        let n = (180.0 / step_deg).round() as usize;
        (1..n).map(|i| (-90.0 + i as f64 * step_deg).to_radians()).collect()
    }

    #[test]
    fn canonical_reference_entry_is_real_non_negative() {
        let mut v = vec![Complex64::new(0.0, 1.0), Complex64::new(-2.0, 0.0), Complex64::new(1.0, 1.0)];
        canonicalize(&mut v);
        assert_eq!(v[1], Complex64::new(2.0, 0.0));
        assert!((v[0] - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn far_field_rank_one_eigenvector() {
        let cfg = cfg();
        let s = SourcePlacement::from_degrees(23.0, 1e12).unwrap();
        let r = far_field_ideal_covariance(&[s], &cfg, 0.0).unwrap();
        let sub = signal_subspace(&r, 1).unwrap();
        let xi = sub.vector(0);
        let a = far_field_steering(s.theta, &cfg);
        let c = reference_position(65);
        assert_eq!(xi[c].im, 0.0);
        assert!(xi[c].re > 0.0);
        for i in 0..65 {
            let d_xi = (xi[i] * xi[c].conj()).arg();
            let d_a = (a[i] * a[c].conj()).arg();
            assert!((Complex64::from_polar(1.0, d_xi - d_a) - 1.0).norm() < 1e-8);
        }
        assert!((sub.eigenvalues[0] - 65.0).abs() < 1e-9);
        assert!(sub.noise_floor.abs() < 1e-9);
    }

    #[test]
    fn span_property_two_sources() {
        let cfg = cfg();
        let srcs = [
            SourcePlacement::from_degrees(-30.0, 1e12).unwrap(),
            SourcePlacement::from_degrees(45.0, 1e12).unwrap(),
        ];
        let r = far_field_ideal_covariance(&srcs, &cfg, 0.0).unwrap();
        let sub = signal_subspace(&r, 2).unwrap();
        for s in &srcs {
            let a = far_field_steering(s.theta, &cfg);
            let coeffs: Vec<Complex64> = (0..2).map(|k| crate::cmat::inner(&sub.vector(k), &a)).collect();
            let resid: f64 = (0..65)
                .map(|i| (a[i] - coeffs[0] * sub.vectors[(i, 0)] - coeffs[1] * sub.vectors[(i, 1)]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(resid < 1e-6, "{resid}");
        }
    }

    #[test]
    fn eigen_gap_at_operating_point() {
        let s = SourcePlacement::from_degrees(-12.0, 700.0).unwrap();
        let set = received_snapshots(&[s], &cfg(), 100, NoiseSpec::new(10.0, 21)).unwrap();
        let vcm = reconstruct_vcm(&sample_covariance(&set).unwrap()).unwrap();
        let e = hermitian_eig(&vcm.data).unwrap();
        assert!(e.values[0] / e.values[1] > 10.0);
    }

    #[test]
    fn rank_one_trace_concentration() {
        let s = SourcePlacement::from_degrees(40.0, 300.0).unwrap();
        let set = received_snapshots(&[s], &cfg(), 1000, NoiseSpec::noiseless(4)).unwrap();
        let r = sample_covariance(&set).unwrap();
        let e = hermitian_eig(&r.data).unwrap();
        assert!(e.values[0] / r.data.trace().re > 0.999);
    }

    #[test]
    fn gauge_invariance() {
        let s = SourcePlacement::from_degrees(8.0, 500.0).unwrap();
        let set = received_snapshots(&[s], &cfg(), 50, NoiseSpec::new(5.0, 8)).unwrap();
        let a = signal_subspace(&reconstruct_vcm(&sample_covariance(&set).unwrap()).unwrap(), 1).unwrap();
        let rot = set.rotated(Complex64::from_polar(1.0, 2.1));
        let b = signal_subspace(&reconstruct_vcm(&sample_covariance(&rot).unwrap()).unwrap(), 1).unwrap();
        assert!(a.vectors.sub(&b.vectors).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn music_single_source_peak() {
        let cfg = cfg();
        let g = grid(0.1);
        let truth = 17.3f64.to_radians();
        let s = SourcePlacement::new(truth, 600.0).unwrap();
        let vcm = reconstruct_vcm(&analytic_covariance(&[s], &cfg, 0.0).unwrap()).unwrap();
        let p = music_spectrum_far(&vcm, 1, &g, 0.5).unwrap();
        let best = find_peaks(&p)[0];
        assert!((g[best] - truth).abs() <= 0.1f64.to_radians() + 1e-12);
        assert!(music_spectrum_far(&vcm, 65, &g, 0.5).is_err());
        let raw = analytic_covariance(&[s], &cfg, 0.0).unwrap();
        assert!(music_spectrum_far(&raw, 1, &g, 0.5).is_err());
    }

    #[test]
    fn peaks_and_parabola() {
        let v = [0.0, 1.0, 3.0, 2.0, 2.0, 5.0, 1.0];
        assert_eq!(find_peaks(&v), vec![5, 2]);
        let f = |x: f64| -(x - 0.3).powi(2);
        assert!((parabolic_offset(f(-1.0), f(0.0), f(1.0)) - 0.3).abs() < 1e-12);
        assert_eq!(parabolic_offset(1.0, 1.0, 1.0), 0.0);
    }
}
