use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cmat::inner;
use crate::covariance::CovMatrix;
use crate::eigen::hermitian_eig;
use crate::error::{domain, Result};
use crate::geometry::{fresnel_bounds, near_field_steering, ArrayConfig, SourcePlacement};
use crate::subspace::parabolic_offset;

/// Uniform `(theta, range)` search grid; angles in radians, ranges in wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MusicGrid {
    pub theta_axis: Vec<f64>,
    pub range_axis: Vec<f64>,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

impl MusicGrid {
    pub fn new(theta_axis: Vec<f64>, range_axis: Vec<f64>) -> Result<Self> {
        if theta_axis.is_empty() || range_axis.is_empty() {
            return domain("MUSIC grid has an empty axis");
        }
        if !strictly_increasing(&theta_axis) || !strictly_increasing(&range_axis) {
            return domain("MUSIC grid axes must be strictly increasing");
        }
        if theta_axis.iter().any(|t| t.abs() >= std::f64::consts::FRAC_PI_2) {
            return domain("MUSIC grid angles must lie in (-pi/2, pi/2)");
        }
        if range_axis.iter().any(|r| !(*r > 0.0)) {
            return domain("MUSIC grid ranges must be positive");
        }
        Ok(Self { theta_axis, range_axis })
    }

    /// Angles `lo + i step` (degrees) strictly inside `(-90, 90)` and inside
    /// `[lo, hi]`; ranges `r_lo + j r_step` in `[r_lo, r_hi]`.
    pub fn uniform(
        theta_deg: (f64, f64, f64),
        range: (f64, f64, f64),
    ) -> Result<Self> {
        let (lo, hi, step) = theta_deg;
        let (r_lo, r_hi, r_step) = range;
        if !(step > 0.0 && r_step > 0.0) {
            return domain("grid steps must be positive");
        }
        let thetas = (0..)
            .map(|i| lo + i as f64 * step)
            .take_while(|t| *t <= hi + 1e-9 * step)
            .filter(|t| t.abs() < 90.0 - 1e-9)
            .map(f64::to_radians)
            .collect();
        let ranges = (0..)
            .map(|j| r_lo + j as f64 * r_step)
            .take_while(|r| *r <= r_hi + 1e-9 * r_step)
            .collect();
        Self::new(thetas, ranges)
    }

    /// 0.1° over `(-90°, 90°)` and 25λ steps over `[200, 1800]λ`, clipped to
    /// the Fresnel zone of `config`.
    pub fn default_for(config: &ArrayConfig) -> Result<Self> {
        Self::fresnel_clipped(config, 0.1, (200.0, 1800.0, 25.0))
    }

    /// Angles over `(-90°, 90°)` with `theta_step_deg`; ranges on the
    /// `(lo, hi, step)` progression restricted to the open Fresnel zone.
    pub fn fresnel_clipped(config: &ArrayConfig, theta_step_deg: f64, range: (f64, f64, f64)) -> Result<Self> {
        let (zone_lo, zone_hi) = fresnel_bounds(config);
        let (lo, hi, step) = range;
        if !(step > 0.0) {
            return domain("range step must be positive");
        }
        let mut r_lo = lo;
        while r_lo <= zone_lo {
            r_lo += step;
        }
        let mut r_hi = hi;
        while r_hi >= zone_hi {
            r_hi -= step;
        }
        Self::uniform((-90.0, 90.0, theta_step_deg), (r_lo, r_hi, step))
    }

    pub fn len(&self) -> usize {
        self.theta_axis.len() * self.range_axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusicEstimate {
    pub theta: f64,
    pub range: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MusicResult {
    /// Row-major `theta x range`.
    pub spectrum: Vec<f64>,
    pub n_theta: usize,
    pub n_range: usize,
    pub estimates: Vec<MusicEstimate>,
}

impl MusicResult {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.spectrum[i * self.n_range + j]
    }

    /// Grid cell `(theta index, range index)` of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let k = (0..self.spectrum.len())
            .max_by(|&a, &b| self.spectrum[a].total_cmp(&self.spectrum[b]))
            .expect("non-empty spectrum");
        (k / self.n_range, k % self.n_range)
    }

    /// CSV with header `theta_deg,range_lambda,power`.
    pub fn write_csv<W: Write>(&self, grid: &MusicGrid, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["theta_deg", "range_lambda", "power"])?;
        for (i, t) in grid.theta_axis.iter().enumerate() {
            for (j, r) in grid.range_axis.iter().enumerate() {
                out.write_record([
                    format!("{}", t.to_degrees()),
                    format!("{r}"),
                    format!("{:e}", self.at(i, j)),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// 2-D MUSIC with exact spherical steering vectors on a raw covariance.
///
/// The pseudo-spectrum `1 / (a^H Ξ_z Ξ_z^H a)` is evaluated through the
/// signal subspace as `1 / (|a|^2 - Σ |ξ_s^H a|^2)`.
pub fn near_field_music(raw: &CovMatrix, config: &ArrayConfig, n_sources: usize, grid: &MusicGrid) -> Result<MusicResult> {
    let n = raw.dim();
    if n != config.n_elements() {
        return domain(format!("covariance of dimension {n} for a {}-element array", config.n_elements()));
    }
    if n_sources == 0 || n_sources >= n {
        return domain(format!("source count {n_sources} must lie in 1..{n}"));
    }
    if grid.is_empty() {
        return domain("MUSIC grid is empty");
    }
    let eig = hermitian_eig(&raw.data)?;
    let signal: Vec<Vec<Complex64>> = (0..n_sources).map(|k| eig.vectors.column(k)).collect();
    let (n_theta, n_range) = (grid.theta_axis.len(), grid.range_axis.len());
    let mut spectrum = Vec::with_capacity(grid.len());
    for &theta in &grid.theta_axis {
        for &range in &grid.range_axis {
            let a = near_field_steering(&SourcePlacement { theta, range }, config);
            let total: f64 = a.iter().map(|z| z.norm_sqr()).sum();
            let captured: f64 = signal.iter().map(|xi| inner(xi, &a).norm_sqr()).sum();
            let floor = total * 1e-15;
            spectrum.push(1.0 / (total - captured).max(floor));
        }
    }
    let mut result = MusicResult {
        spectrum,
        n_theta,
        n_range,
        estimates: Vec::new(),
    };
    result.estimates = peaks_2d(&result, grid, n_sources);
    Ok(result)
}

/// Top-`count` local maxima over the 8-neighbourhood, refined per axis by
/// three-point parabolic interpolation.
fn peaks_2d(res: &MusicResult, grid: &MusicGrid, count: usize) -> Vec<MusicEstimate> {
    let (nt, nr) = (res.n_theta, res.n_range);
    let mut cells = Vec::new();
    for i in 0..nt {
        for j in 0..nr {
            let v = res.at(i, j);
            let mut is_peak = true;
            'nb: for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if ii < 0 || jj < 0 || ii >= nt as i64 || jj >= nr as i64 {
                        continue;
                    }
                    let w = res.at(ii as usize, jj as usize);
                    // strict on one side so plateaus yield one cell
                    let earlier = di < 0 || (di == 0 && dj < 0);
                    if w > v || (earlier && w == v) {
                        is_peak = false;
                        break 'nb;
                    }
                }
            }
            if is_peak {
                cells.push((i, j));
            }
        }
    }
    cells.sort_by(|&(a, b), &(c, d)| res.at(c, d).total_cmp(&res.at(a, b)));
    cells
        .into_iter()
        .take(count)
        .map(|(i, j)| {
            let refine = |axis: &[f64], k: usize, f: &dyn Fn(usize) -> f64| {
                if k == 0 || k + 1 == axis.len() {
                    return axis[k];
                }
                let off = parabolic_offset(f(k - 1).log10(), f(k).log10(), f(k + 1).log10());
                axis[k] + off * (axis[k + 1] - axis[k])
            };
            MusicEstimate {
                theta: refine(&grid.theta_axis, i, &|k| res.at(k, j)),
                range: refine(&grid.range_axis, j, &|k| res.at(i, k)),
                power: res.at(i, j),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::{analytic_covariance, sample_covariance};
    use crate::sim::{received_snapshots, NoiseSpec};

    fn small_grid() -> MusicGrid {
        MusicGrid::uniform((10.0, 30.0, 0.5), (300.0, 700.0, 25.0)).unwrap()
    }

    #[test]
    fn noiseless_source_on_node_is_argmax() {
        let cfg = ArrayConfig::half_wavelength(33).unwrap();
        let grid = small_grid();
        let s = SourcePlacement::new(grid.theta_axis[17], 500.0).unwrap();
        let r = analytic_covariance(&[s], &cfg, 0.01).unwrap();
        let res = near_field_music(&r, &cfg, 1, &grid).unwrap();
        let (i, j) = res.argmax();
        assert_eq!((i, grid.range_axis[j]), (17, 500.0));
        assert!(res.spectrum.iter().all(|p| p.is_finite() && *p > 0.0));
        assert!((res.estimates[0].theta - s.theta).abs() < 0.25f64.to_radians());
    }

    #[test]
    fn scale_invariant() {
        let cfg = ArrayConfig::half_wavelength(17).unwrap();
        let grid = MusicGrid::uniform((-20.0, 20.0, 1.0), (100.0, 400.0, 25.0)).unwrap();
        let s = SourcePlacement::from_degrees(4.0, 250.0).unwrap();
        let set = received_snapshots(&[s], &cfg, 50, NoiseSpec::new(5.0, 3)).unwrap();
        let r = sample_covariance(&set).unwrap();
        let scaled = CovMatrix::new(r.data.scale(7.5), r.kind).unwrap();
        let a = near_field_music(&r, &cfg, 1, &grid).unwrap();
        let b = near_field_music(&scaled, &cfg, 1, &grid).unwrap();
        assert_eq!(a.argmax(), b.argmax());
    }

    #[test]
    fn invalid_inputs() {
        let cfg = ArrayConfig::half_wavelength(9).unwrap();
        let s = SourcePlacement::from_degrees(0.0, 100.0).unwrap();
        let r = analytic_covariance(&[s], &cfg, 0.1).unwrap();
        let grid = MusicGrid::uniform((-5.0, 5.0, 1.0), (50.0, 100.0, 25.0)).unwrap();
        assert!(near_field_music(&r, &cfg, 9, &grid).is_err());
        assert!(near_field_music(&r, &ArrayConfig::half_wavelength(8).unwrap(), 1, &grid).is_err());
        assert!(MusicGrid::new(vec![], vec![1.0]).is_err());
        assert!(MusicGrid::new(vec![0.2, 0.1], vec![1.0]).is_err());
    }

    #[test]
    fn default_grid_inside_fresnel_zone() {
        for n in [65, 129] {
            let cfg = ArrayConfig::half_wavelength(n).unwrap();
            let (lo, hi) = fresnel_bounds(&cfg);
            let g = MusicGrid::default_for(&cfg).unwrap();
            assert!(g.range_axis.iter().all(|r| *r > lo && *r < hi));
            assert_eq!(g.theta_axis.len(), 1799);
        }
        let g = MusicGrid::default_for(&ArrayConfig::half_wavelength(65).unwrap()).unwrap();
        assert_eq!((g.range_axis[0], *g.range_axis.last().unwrap()), (200.0, 1800.0));
    }

    #[test]
    fn csv_header() {
        let cfg = ArrayConfig::half_wavelength(9).unwrap();
        let s = SourcePlacement::from_degrees(0.0, 60.0).unwrap();
        let r = analytic_covariance(&[s], &cfg, 0.1).unwrap();
        let grid = MusicGrid::uniform((-2.0, 2.0, 1.0), (50.0, 75.0, 25.0)).unwrap();
        let res = near_field_music(&r, &cfg, 1, &grid).unwrap();
        let mut buf = Vec::new();
        res.write_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("theta_deg,range_lambda,power\n"));
        assert_eq!(text.lines().count(), 1 + 10);
    }
}
