use serde::{Deserialize, Serialize};

use super::loss::Loss;
use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::str::FromStr for OptimizerKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            _ => Err(crate::Error::Parse(format!("unknown optimizer `{s}` (expected sgd or adam)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub loss: Loss,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 64,
            epochs: 200,
            loss: Loss::Mae,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return domain(format!("learning rate {} must be positive", self.learning_rate));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return domain(format!("{name} = {b} must lie in [0, 1)"));
            }
        }
        if !(self.adam_eps > 0.0) {
            return domain("adam_eps must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return domain("batch_size and epochs must be positive");
        }
        Ok(())
    }
}

/// Optimizer state for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    config: TrainConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl Optimizer {
    pub fn new(config: &TrainConfig, n_params: usize) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: config.clone(),
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        })
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), grads.len());
        assert_eq!(params.len(), self.m.len());
        self.step += 1;
        let c = &self.config;
        match c.optimizer {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= c.learning_rate * g;
                }
            }
            OptimizerKind::Adam => {
                let t = self.step as i32;
                let bc1 = 1.0 - c.adam_beta1.powi(t);
                let bc2 = 1.0 - c.adam_beta2.powi(t);
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = c.adam_beta1 * self.m[i] + (1.0 - c.adam_beta1) * g;
                    self.v[i] = c.adam_beta2 * self.v[i] + (1.0 - c.adam_beta2) * g * g;
                    let m_hat = self.m[i] / bc1;
                    let v_hat = self.v[i] / bc2;
                    params[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.adam_eps);
                }
            }
        }
    }
}
