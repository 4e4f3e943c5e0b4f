use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Mae,
    Mse,
}

impl Loss {
    /// Loss of a single prediction and its derivative with respect to `pred`.
    ///
    /// The MAE subgradient at `pred == target` is 0.
    pub fn point(self, pred: f64, target: f64) -> (f64, f64) {
        let e = pred - target;
        match self {
            Loss::Mae => {
                let g = if e > 0.0 {
                    1.0
                } else if e < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                (e.abs(), g)
            }
            Loss::Mse => (e * e, 2.0 * e),
        }
    }

    /// Mean loss over a batch.
    pub fn mean(self, pred: &[f64], target: &[f64]) -> Result<f64> {
        if pred.len() != target.len() {
            return shape(format!("{} predictions for {} targets", pred.len(), target.len()));
        }
        if pred.is_empty() {
            return domain("loss of an empty batch");
        }
        let sum: f64 = pred.iter().zip(target).map(|(&p, &t)| self.point(p, t).0).sum();
        Ok(sum / pred.len() as f64)
    }
}

impl std::str::FromStr for Loss {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mae" => Ok(Loss::Mae),
            "mse" => Ok(Loss::Mse),
            _ => Err(crate::Error::Parse(format!("unknown loss `{s}` (expected mae or mse)"))),
        }
    }
}

pub fn mae_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    Loss::Mae.mean(pred, target)
}

pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    Loss::Mse.mean(pred, target)
}
