use std::io::Write;

use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::cvnn::network::Network;
use crate::error::Result;

/// Conditions an evaluation was run under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub snr_db: f64,
    pub snapshots: usize,
    /// `None` when the test set mixes distances.
    pub distance: Option<f64>,
    pub n_antennas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse_deg: f64,
    pub mae_deg: f64,
    /// Signed `predicted - true`, degrees, in dataset order.
    pub errors: Vec<f64>,
    pub condition: Condition,
}

impl EvalReport {
    pub fn from_errors(errors: Vec<f64>, condition: Condition) -> Self {
        let n = errors.len().max(1) as f64;
        Self {
            rmse_deg: (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
            mae_deg: errors.iter().map(|e| e.abs()).sum::<f64>() / n,
            errors,
            condition,
        }
    }
}

/// Predicted angles (radians) for every sample.
pub fn predict(net: &Network, data: &Dataset) -> Result<Vec<f64>> {
    data.samples.iter().map(|s| net.forward(&s.feature)).collect()
}

pub fn evaluate(net: &Network, data: &Dataset, condition: Condition) -> Result<EvalReport> {
    let preds = predict(net, data)?;
    let errors = preds
        .iter()
        .zip(&data.samples)
        .map(|(p, s)| (p - s.theta).to_degrees())
        .collect();
    Ok(EvalReport::from_errors(errors, condition))
}

/// CSV with header `theta_deg,range_lambda,predicted_deg,error_deg`.
pub fn write_predictions_csv<W: Write>(data: &Dataset, report: &EvalReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["theta_deg", "range_lambda", "predicted_deg", "error_deg"])?;
    for (s, e) in data.samples.iter().zip(&report.errors) {
        let t = s.theta.to_degrees();
        out.write_record([format!("{t}"), format!("{}", s.range), format!("{}", t + e), format!("{e}")])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::dataset::Sample;
    use num_complex::Complex64;

    fn cond() -> Condition {
        Condition {
            snr_db: 10.0,
            snapshots: 100,
            distance: Some(1000.0),
            n_antennas: 65,
        }
    }

    #[test]
    fn zero_predictor_rmse_is_label_rms() {
        let net = crate::cvnn::network::cvnn(9).unwrap();
        let thetas: Vec<f64> = (-4..=4).map(|i| (i as f64 * 10.0).to_radians()).collect();
        let data = Dataset {
            samples: thetas
                .iter()
                .map(|&theta| Sample {
                    feature: vec![Complex64::new(0.3, 0.0); 9],
                    theta,
                    range: 500.0,
                })
                .collect(),
            n_in: 9,
        };
        let r = evaluate(&net, &data, cond()).unwrap();
        let rms = (thetas.iter().map(|t| t.to_degrees().powi(2)).sum::<f64>() / 9.0).sqrt();
        assert!((r.rmse_deg - rms).abs() < 1e-12);
        assert!((r.mae_deg - 200.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn perfect_predictor() {
        let r = EvalReport::from_errors(vec![0.0; 5], cond());
        assert_eq!((r.rmse_deg, r.mae_deg), (0.0, 0.0));
    }
}
