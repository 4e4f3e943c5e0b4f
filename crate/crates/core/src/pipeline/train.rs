use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::baselines::tdnn::tdnn;
use crate::cvnn::network::{cvnn, Network};
use crate::cvnn::optim::{Optimizer, TrainConfig};
use crate::error::{domain, Error, Result};
use crate::sim::stream_rng;

const SPLIT_STREAM: u64 = 2;
const SHUFFLE_STREAM: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Cvnn,
    Tdnn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Cvnn => "cvnn",
            ModelKind::Tdnn => "tdnn",
        }
    }

    /// Glorot-initialized network for `n_in`-length features.
    pub fn build(self, n_in: usize, seed: u64) -> Result<Network> {
        let mut net = match self {
            ModelKind::Cvnn => cvnn(n_in)?,
            ModelKind::Tdnn => tdnn(n_in)?,
        };
        net.init_glorot(seed);
        Ok(net)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cvnn" => Ok(ModelKind::Cvnn),
            "tdnn" => Ok(ModelKind::Tdnn),
            _ => Err(Error::Parse(format!("unknown model `{s}` (expected cvnn or tdnn)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Epoch mean of the optimized loss, from predictions made before each update.
    pub train_loss: f64,
    pub train_mae: f64,
    pub val_loss: Option<f64>,
    pub val_mae: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    pub history: Vec<EpochRecord>,
    pub n_train: usize,
    pub n_val: usize,
}

/// Splits sample indices into `(train, validation)`, taking `fraction` of
/// every distance group at random (seeded).
pub fn split_validation(data: &Dataset, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return domain(format!("validation fraction {fraction} must lie in [0, 1)"));
    }
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, s) in data.samples.iter().enumerate() {
        groups.entry(s.range.to_bits()).or_default().push(i);
    }
    let mut rng = stream_rng(seed, SPLIT_STREAM);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (_, mut idx) in groups {
        idx.shuffle(&mut rng);
        let n_val = (fraction * idx.len() as f64).round() as usize;
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Mean loss and mean absolute error over `indices`.
fn score(net: &Network, data: &Dataset, indices: &[usize], cfg: &TrainConfig) -> Result<(f64, f64)> {
    let (mut loss, mut mae) = (0.0, 0.0);
    for &i in indices {
        let s = &data.samples[i];
        let pred = net.forward(&s.feature)?;
        loss += cfg.loss.point(pred, s.theta).0;
        mae += (pred - s.theta).abs();
    }
    let n = indices.len() as f64;
    Ok((loss / n, mae / n))
}

/// Mini-batch training with a seeded per-epoch shuffle.
///
/// Aborts with [`Error::Numeric`] as soon as a batch loss or gradient is not finite.
pub fn train_model(mut net: Network, data: &Dataset, cfg: &TrainConfig, val_fraction: f64) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return domain("cannot train on an empty dataset");
    }
    let (mut train_idx, val_idx) = split_validation(data, val_fraction, cfg.seed)?;
    if train_idx.is_empty() {
        return domain("validation split leaves no training samples");
    }
    let mut opt = Optimizer::new(cfg, net.param_count())?;
    let mut grads = vec![0.0; net.param_count()];
    let mut rng = stream_rng(cfg.seed, SHUFFLE_STREAM);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        train_idx.shuffle(&mut rng);
        let (mut epoch_loss, mut epoch_mae) = (0.0, 0.0);
        for (b, batch) in train_idx.chunks(cfg.batch_size).enumerate() {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                let s = &data.samples[i];
                let trace = net.forward_trace(net.encode(&s.feature)?)?;
                let pred = trace.prediction();
                let (l, g) = cfg.loss.point(pred, s.theta);
                batch_loss += l;
                epoch_mae += (pred - s.theta).abs();
                net.backward(&trace, g * scale, &mut grads);
            }
            if !batch_loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::Numeric(format!(
                    "training diverged at epoch {epoch}, batch {b}: batch loss {batch_loss}, \
                     last finite epoch loss {:?}",
                    history.last().map(|h: &EpochRecord| h.train_loss)
                )));
            }
            epoch_loss += batch_loss;
            opt.step(net.params_mut(), &grads);
        }
        let n = train_idx.len() as f64;
        let (val_loss, val_mae) = if val_idx.is_empty() {
            (None, None)
        } else {
            let (l, m) = score(&net, data, &val_idx, cfg)?;
            (Some(l), Some(m))
        };
        log::debug!("epoch {epoch}: train loss {:.6}", epoch_loss / n);
        history.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / n,
            train_mae: epoch_mae / n,
            val_loss,
            val_mae,
        });
    }
    Ok(TrainOutcome {
        network: net,
        history,
        n_train: train_idx.len(),
        n_val: val_idx.len(),
    })
}

/// CSV with header `epoch,train_loss,train_mae,val_loss,val_mae`; missing
/// validation values are left empty.
pub fn write_history_csv<W: Write>(history: &[EpochRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epoch", "train_loss", "train_mae", "val_loss", "val_mae"])?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    for h in history {
        out.write_record([
            h.epoch.to_string(),
            format!("{}", h.train_loss),
            format!("{}", h.train_mae),
            opt(h.val_loss),
            opt(h.val_mae),
        ])?;
    }
    out.flush()?;
    Ok(())
}
