use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{LayerSpec, Network};
use super::ops::ConvDims;
use super::optim::TrainConfig;
use super::tensor::Shape;
use crate::error::{shape, Result};

/// On-disk model: architecture, parameters as `[re, im]` pairs per layer
/// (real layers store `[w, 0]`), training configuration, seed and metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub input: Shape,
    pub architecture: Vec<LayerSpec>,
    pub params: Vec<Vec<[f64; 2]>>,
    pub train_config: Option<TrainConfig>,
    pub seed: u64,
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
}

/// `(weights, biases)` counts of each complex parameter block of a layer.
fn complex_blocks(layer: &LayerSpec) -> Vec<(usize, usize)> {
    match *layer {
        LayerSpec::ComplexConv1d {
            kernel_len,
            in_channels,
            out_channels,
            stride,
        } => {
            let d = ConvDims {
                kernel_len,
                in_channels,
                out_channels,
                stride,
            };
            vec![(d.weights(), out_channels)]
        }
        LayerSpec::ResidualBlock { .. } => layer
            .block_parts()
            .into_iter()
            .map(|d| (d.weights(), d.out_channels))
            .collect(),
        LayerSpec::ComplexAffine { inputs, outputs } => vec![(inputs * outputs, outputs)],
        _ => Vec::new(),
    }
}

fn to_pairs(layer: &LayerSpec, flat: &[f64]) -> Vec<[f64; 2]> {
    if !layer.is_complex() {
        return flat.iter().map(|&w| [w, 0.0]).collect();
    }
    let mut out = Vec::with_capacity(flat.len() / 2);
    let mut off = 0;
    for (nw, nb) in complex_blocks(layer) {
        for (n, start) in [(nw, off), (nb, off + 2 * nw)] {
            let (re, im) = (&flat[start..start + n], &flat[start + n..start + 2 * n]);
            out.extend(re.iter().zip(im).map(|(&r, &i)| [r, i]));
        }
        off += 2 * (nw + nb);
    }
    out
}

fn from_pairs(layer: &LayerSpec, pairs: &[[f64; 2]], out: &mut Vec<f64>) -> Result<()> {
    let expected = if layer.is_complex() {
        layer.param_count() / 2
    } else {
        layer.param_count()
    };
    if pairs.len() != expected {
        return shape(format!(
            "{} layer needs {expected} parameter pairs, found {}",
            layer.kind_name(),
            pairs.len()
        ));
    }
    if !layer.is_complex() {
        out.extend(pairs.iter().map(|p| p[0]));
        return Ok(());
    }
    let mut off = 0;
    for (nw, nb) in complex_blocks(layer) {
        for n in [nw, nb] {
            let chunk = &pairs[off..off + n];
            out.extend(chunk.iter().map(|p| p[0]));
            out.extend(chunk.iter().map(|p| p[1]));
            off += n;
        }
    }
    Ok(())
}

impl Checkpoint {
    pub fn from_network(net: &Network, train_config: Option<TrainConfig>, seed: u64) -> Self {
        let params = (0..net.layers().len())
            .map(|i| to_pairs(&net.layers()[i], net.layer_params(i)))
            .collect();
        Self {
            input: net.input_shape(),
            architecture: net.layers().to_vec(),
            params,
            train_config,
            seed,
            metrics: BTreeMap::new(),
        }
    }

    pub fn to_network(&self) -> Result<Network> {
        if self.params.len() != self.architecture.len() {
            return shape(format!(
                "{} parameter lists for {} layers",
                self.params.len(),
                self.architecture.len()
            ));
        }
        let mut flat = Vec::new();
        for (layer, pairs) in self.architecture.iter().zip(&self.params) {
            from_pairs(layer, pairs, &mut flat)?;
        }
        Network::with_params(self.input, self.architecture.clone(), flat)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvnn::network::cvnn;

    #[test]
    fn bit_exact_round_trip() {
        let mut net = cvnn(33).unwrap();
        net.init_glorot(9);
        for (i, p) in net.params_mut().iter_mut().enumerate() {
            *p += (i as f64).sqrt() * 1e-17 + 1.0 / 3.0;
        }
        let mut ck = Checkpoint::from_network(&net, Some(TrainConfig::default()), 9);
        ck.metrics.insert("rmse_deg".into(), 0.1 + 0.2);
        let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
        assert_eq!(back, ck);
        let restored = back.to_network().unwrap();
        assert!(restored.params().iter().zip(net.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn pairs_follow_complex_layout() {
        let layer = LayerSpec::ComplexAffine { inputs: 2, outputs: 1 };
        // [W_R | W_I | b_R | b_I]
        let flat = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(to_pairs(&layer, &flat), vec![[1.0, 3.0], [2.0, 4.0], [5.0, 6.0]]);
        let mut out = Vec::new();
        from_pairs(&layer, &to_pairs(&layer, &flat), &mut out).unwrap();
        assert_eq!(out, flat);
    }

    #[test]
    fn wrong_pair_count_rejected() {
        let net = cvnn(9).unwrap();
        let mut ck = Checkpoint::from_network(&net, None, 0);
        ck.params[0].pop();
        assert!(ck.to_network().is_err());
    }
}
