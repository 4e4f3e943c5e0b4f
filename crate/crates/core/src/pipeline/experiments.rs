use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dataset::simulate_sample;
use super::eval::{Condition, EvalReport};
use crate::baselines::music::{near_field_music, MusicGrid};
use crate::covariance::{analytic_covariance, reconstruct_vcm, sample_covariance};
use crate::cvnn::network::Network;
use crate::error::{domain, Result};
use crate::geometry::{ArrayConfig, SourcePlacement};
use crate::sim::{derive_seed, stream_rng, NoiseSpec};
use crate::subspace::{beam_pattern, find_peaks};

const ANGLE_STREAM: u64 = 4;

/// Monte-Carlo settings shared by every experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub trials: usize,
    pub seed: u64,
    /// Random angles are uniform in `(-theta_max_deg, theta_max_deg)`.
    pub theta_max_deg: f64,
}

impl Default for MonteCarlo {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            theta_max_deg: 60.0,
        }
    }
}

/// 2-D MUSIC search resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MusicSettings {
    pub theta_step_deg: f64,
    /// `(lo, hi, step)` in wavelengths, clipped to the Fresnel zone.
    pub range: (f64, f64, f64),
}

impl Default for MusicSettings {
    fn default() -> Self {
        Self {
            theta_step_deg: 0.1,
            range: (200.0, 1800.0, 25.0),
        }
    }
}

impl MusicSettings {
    pub fn grid(&self, array: &ArrayConfig) -> Result<MusicGrid> {
        MusicGrid::fresnel_clipped(array, self.theta_step_deg, self.range)
    }
}

/// Estimators compared by an experiment. Networks must accept the
/// condition's `n_in`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Methods<'a> {
    pub cvnn: Option<&'a Network>,
    pub tdnn: Option<&'a Network>,
    pub music: Option<MusicSettings>,
}

impl Methods<'_> {
    fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.cvnn.is_some() {
            v.push("cvnn");
        }
        if self.tdnn.is_some() {
            v.push("tdnn");
        }
        if self.music.is_some() {
            v.push("music");
        }
        v
    }
}

/// Single-source operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialCondition {
    pub array: ArrayConfig,
    pub n_in: usize,
    pub snr_db: f64,
    pub snapshots: usize,
    pub distance: f64,
}

impl TrialCondition {
    pub fn desk(snr_db: f64) -> Self {
        Self {
            array: ArrayConfig::half_wavelength(65).expect("valid array"),
            n_in: 33,
            snr_db,
            snapshots: 100,
            distance: 1000.0,
        }
    }

    fn condition(&self) -> Condition {
        Condition {
            snr_db: self.snr_db,
            snapshots: self.snapshots,
            distance: Some(self.distance),
            n_antennas: self.array.n_elements(),
        }
    }
}

/// Angle of trial `t`: fixed when `theta` is given, otherwise uniform.
fn trial_theta(mc: &MonteCarlo, t: usize, theta: Option<f64>) -> f64 {
    theta.unwrap_or_else(|| {
        let mut rng = stream_rng(derive_seed(mc.seed, t as u64), ANGLE_STREAM);
        let m = mc.theta_max_deg.to_radians();
        rng.gen_range(-m..m)
    })
}

/// Runs `mc.trials` independent trials and returns one report per method
/// (in the order cvnn, tdnn, music). All methods see the same snapshots.
pub fn run_trials(
    methods: &Methods,
    cond: &TrialCondition,
    mc: &MonteCarlo,
    theta: Option<f64>,
) -> Result<Vec<(&'static str, EvalReport)>> {
    if mc.trials == 0 {
        return domain("Monte-Carlo trial count must be positive");
    }
    let names = methods.names();
    if names.is_empty() {
        return domain("no method selected");
    }
    let grid = match methods.music {
        Some(m) => Some(m.grid(&cond.array)?),
        None => None,
    };
    let mut errors = vec![Vec::with_capacity(mc.trials); names.len()];
    for t in 0..mc.trials {
        let th = trial_theta(mc, t, theta);
        let source = SourcePlacement::new(th, cond.distance)?;
        let noise = NoiseSpec::new(cond.snr_db, derive_seed(mc.seed, t as u64));
        let (set, sample) = simulate_sample(source, &cond.array, cond.snapshots, noise, cond.n_in)?;
        let mut k = 0;
        for net in [methods.cvnn, methods.tdnn].into_iter().flatten() {
            errors[k].push((net.forward(&sample.feature)? - th).to_degrees());
            k += 1;
        }
        if let Some(grid) = &grid {
            let res = near_field_music(&sample_covariance(&set)?, &cond.array, 1, grid)?;
            errors[k].push((res.estimates[0].theta - th).to_degrees());
        }
    }
    Ok(names
        .into_iter()
        .zip(errors)
        .map(|(n, e)| (n, EvalReport::from_errors(e, cond.condition())))
        .collect())
}

/// One line of an RMSE table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub experiment: String,
    pub parameter: String,
    pub value: f64,
    pub method: String,
    pub trials: usize,
    pub seed: u64,
    pub rmse_deg: f64,
    pub mae_deg: f64,
}

/// CSV with header `experiment,parameter,value,method,trials,seed,rmse_deg,mae_deg`.
pub fn write_rows_csv<W: Write>(rows: &[ExperimentRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    if rows.is_empty() {
        out.write_record(["experiment", "parameter", "value", "method", "trials", "seed", "rmse_deg", "mae_deg"])?;
    }
    out.flush()?;
    Ok(())
}

fn sweep(
    experiment: &str,
    parameter: &str,
    values: &[f64],
    methods: &Methods,
    mc: &MonteCarlo,
    mut condition_for: impl FnMut(f64) -> Result<TrialCondition>,
) -> Result<Vec<ExperimentRow>> {
    let mut rows = Vec::new();
    for &v in values {
        let cond = condition_for(v)?;
        for (method, report) in run_trials(methods, &cond, mc, None)? {
            rows.push(ExperimentRow {
                experiment: experiment.into(),
                parameter: parameter.into(),
                value: v,
                method: method.into(),
                trials: mc.trials,
                seed: mc.seed,
                rmse_deg: report.rmse_deg,
                mae_deg: report.mae_deg,
            });
        }
    }
    Ok(rows)
}

pub fn rmse_vs_snr(methods: &Methods, base: &TrialCondition, snrs: &[f64], mc: &MonteCarlo) -> Result<Vec<ExperimentRow>> {
    sweep("rmse_vs_snr", "snr_db", snrs, methods, mc, |v| Ok(TrialCondition { snr_db: v, ..*base }))
}

pub fn rmse_vs_snapshots(
    methods: &Methods,
    base: &TrialCondition,
    snapshots: &[usize],
    mc: &MonteCarlo,
) -> Result<Vec<ExperimentRow>> {
    let values: Vec<f64> = snapshots.iter().map(|&k| k as f64).collect();
    sweep("rmse_vs_snapshots", "snapshots", &values, methods, mc, |v| {
        Ok(TrialCondition {
            snapshots: v as usize,
            ..*base
        })
    })
}

pub fn rmse_vs_distance(
    methods: &Methods,
    base: &TrialCondition,
    distances: &[f64],
    mc: &MonteCarlo,
) -> Result<Vec<ExperimentRow>> {
    sweep("rmse_vs_distance", "distance_lambda", distances, methods, mc, |v| {
        Ok(TrialCondition { distance: v, ..*base })
    })
}

/// Same network (fixed `n_in`) evaluated on arrays of different sizes.
pub fn crop_invariance(
    methods: &Methods,
    base: &TrialCondition,
    n_antennas: &[usize],
    mc: &MonteCarlo,
) -> Result<Vec<ExperimentRow>> {
    let values: Vec<f64> = n_antennas.iter().map(|&n| n as f64).collect();
    sweep("crop_invariance", "n_antennas", &values, methods, mc, |v| {
        Ok(TrialCondition {
            array: ArrayConfig::new(v as usize, base.array.spacing(), base.array.wavelength())?,
            ..*base
        })
    })
}

/// Per-trial signed errors at fixed directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRow {
    pub direction_deg: f64,
    pub method: String,
    pub trial: usize,
    pub error_deg: f64,
}

pub fn boxplot(methods: &Methods, base: &TrialCondition, directions_deg: &[f64], mc: &MonteCarlo) -> Result<Vec<BoxRow>> {
    let mut rows = Vec::new();
    for &d in directions_deg {
        for (method, report) in run_trials(methods, base, mc, Some(d.to_radians()))? {
            rows.extend(report.errors.iter().enumerate().map(|(trial, &e)| BoxRow {
                direction_deg: d,
                method: method.into(),
                trial,
                error_deg: e,
            }));
        }
    }
    Ok(rows)
}

/// CSV with header `direction_deg,method,trial,error_deg`.
pub fn write_box_csv<W: Write>(rows: &[BoxRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["direction_deg", "method", "trial", "error_deg"])?;
    for r in rows {
        out.write_record([
            format!("{}", r.direction_deg),
            r.method.clone(),
            r.trial.to_string(),
            format!("{}", r.error_deg),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Far-field MUSIC pseudo-spectra of a raw covariance and of its VCM.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    pub theta: Vec<f64>,
    pub raw: Vec<f64>,
    pub vcm: Vec<f64>,
}

impl BeamPattern {
    /// Angles (radians) of the `count` strongest VCM peaks.
    pub fn vcm_peaks(&self, count: usize) -> Vec<f64> {
        find_peaks(&self.vcm).into_iter().take(count).map(|i| self.theta[i]).collect()
    }

    /// CSV with header `theta_deg,power_raw,power_vcm`; powers in dB relative
    /// to each spectrum's maximum.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let db = |v: &[f64]| {
            let peak = v.iter().cloned().fold(f64::MIN, f64::max);
            v.iter().map(|p| 10.0 * (p / peak).log10()).collect::<Vec<_>>()
        };
        let (raw, vcm) = (db(&self.raw), db(&self.vcm));
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["theta_deg", "power_raw", "power_vcm"])?;
        for i in 0..self.theta.len() {
            out.write_record([
                format!("{}", self.theta[i].to_degrees()),
                format!("{}", raw[i]),
                format!("{}", vcm[i]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Beam patterns of the analytic covariance for `sources` with noise power
/// `noise_var`, on angles `-90 + i step` strictly inside `(-90°, 90°)`.
pub fn beampattern(array: &ArrayConfig, sources: &[SourcePlacement], noise_var: f64, step_deg: f64) -> Result<BeamPattern> {
    if !(step_deg > 0.0) {
        return domain("beam-pattern step must be positive");
    }
    let theta: Vec<f64> = (1..)
        .map(|i| -90.0 + i as f64 * step_deg)
        .take_while(|t| *t < 90.0 - 1e-9)
        .map(f64::to_radians)
        .collect();
    let raw = analytic_covariance(sources, array, noise_var)?;
    let vcm = reconstruct_vcm(&raw)?;
    let m = sources.len();
    Ok(BeamPattern {
        raw: beam_pattern(&raw, m, &theta, array.spacing())?,
        vcm: beam_pattern(&vcm, m, &theta, array.spacing())?,
        theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvnn::network::cvnn;

    fn small() -> TrialCondition {
        TrialCondition {
            array: ArrayConfig::half_wavelength(17).unwrap(),
            n_in: 9,
            snr_db: 10.0,
            snapshots: 20,
            distance: 300.0,
        }
    }

    #[test]
    fn zero_network_error_is_minus_truth() {
        let net = cvnn(9).unwrap();
        let methods = Methods {
            cvnn: Some(&net),
            ..Methods::default()
        };
        let mc = MonteCarlo {
            trials: 5,
            seed: 3,
            theta_max_deg: 60.0,
        };
        let r = run_trials(&methods, &small(), &mc, None).unwrap();
        for (t, e) in r[0].1.errors.iter().enumerate() {
            assert!((e + trial_theta(&mc, t, None).to_degrees()).abs() < 1e-12);
            assert!(e.abs() < 60.0);
        }
    }

    #[test]
    fn sweep_rows_and_csv() {
        let net = cvnn(9).unwrap();
        let methods = Methods {
            cvnn: Some(&net),
            tdnn: None,
            music: Some(MusicSettings {
                theta_step_deg: 1.0,
                range: (100.0, 500.0, 50.0),
            }),
        };
        let mc = MonteCarlo {
            trials: 2,
            ..MonteCarlo::default()
        };
        let rows = rmse_vs_snr(&methods, &small(), &[0.0, 10.0], &mc).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[1].method, "music");
        let mut buf = Vec::new();
        write_rows_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("experiment,parameter,value,method,trials,seed,rmse_deg,mae_deg\n"));
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn beampattern_peaks_at_sources() {
        let array = ArrayConfig::half_wavelength(65).unwrap();
        let srcs = [
            SourcePlacement::from_degrees(-30.0, 300.0).unwrap(),
            SourcePlacement::from_degrees(45.0, 600.0).unwrap(),
        ];
        let bp = beampattern(&array, &srcs, 0.1, 0.1).unwrap();
        assert_eq!(bp.theta.len(), 1799);
        let mut peaks: Vec<f64> = bp.vcm_peaks(2).iter().map(|t| t.to_degrees()).collect();
        peaks.sort_by(f64::total_cmp);
        assert!((peaks[0] + 30.0).abs() <= 0.5 && (peaks[1] - 45.0).abs() <= 0.5, "{peaks:?}");
    }
}
