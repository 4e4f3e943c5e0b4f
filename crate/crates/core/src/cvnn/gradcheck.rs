use num_complex::Complex64;
use serde::Serialize;

use super::loss::Loss;
use super::network::Network;
use crate::error::Result;

/// Loss of one sample and its gradient with respect to every parameter.
pub fn loss_gradient(net: &Network, feature: &[Complex64], target: f64, loss: Loss) -> Result<(f64, Vec<f64>)> {
    let trace = net.forward_trace(net.encode(feature)?)?;
    let (value, g_out) = loss.point(trace.prediction(), target);
    let mut grads = vec![0.0; net.param_count()];
    net.backward(&trace, g_out, &mut grads);
    Ok((value, grads))
}

#[derive(Debug, Clone, Serialize)]
pub struct LayerCheck {
    pub layer: usize,
    pub kind: &'static str,
    pub params: usize,
    /// `||analytic - numeric|| / max(||analytic||, ||numeric||)`, 0 when both vanish.
    pub rel_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub layers: Vec<LayerCheck>,
    pub max_rel_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares backpropagated gradients with central differences of step `h`,
/// one normwise relative error per parameterized layer.
pub fn gradient_check(
    net: &Network,
    feature: &[Complex64],
    target: f64,
    loss: Loss,
    h: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let (_, analytic) = loss_gradient(net, feature, target, loss)?;
    let mut probe = net.clone();
    let eval = |probe: &Network| -> Result<f64> { Ok(loss.point(probe.forward(feature)?, target).0) };
    let mut layers = Vec::new();
    for (i, spec) in net.layers().iter().enumerate() {
        let range = net.layer_range(i);
        if range.is_empty() {
            continue;
        }
        let (mut diff, mut na, mut nn) = (0.0, 0.0, 0.0);
        for p in range.clone() {
            let orig = probe.params()[p];
            probe.params_mut()[p] = orig + h;
            let plus = eval(&probe)?;
            probe.params_mut()[p] = orig - h;
            let minus = eval(&probe)?;
            probe.params_mut()[p] = orig;
            let numeric = (plus - minus) / (2.0 * h);
            diff += (analytic[p] - numeric).powi(2);
            na += analytic[p].powi(2);
            nn += numeric.powi(2);
        }
        let scale = na.sqrt().max(nn.sqrt());
        let rel_error = if scale == 0.0 { 0.0 } else { diff.sqrt() / scale };
        layers.push(LayerCheck {
            layer: i,
            kind: spec.kind_name(),
            params: range.len(),
            rel_error,
        });
    }
    let max_rel_error = layers.iter().map(|l| l.rel_error).fold(0.0, f64::max);
    Ok(GradCheckReport {
        layers,
        max_rel_error,
        tolerance,
        passed: max_rel_error < tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cvnn::network::cvnn;

    #[test]
    fn zero_input_conv_weight_grads_vanish() {
        let mut net = cvnn(9).unwrap();
        net.init_glorot(1);
        let (_, g) = loss_gradient(&net, &[Complex64::new(0.0, 0.0); 9], 0.7, Loss::Mae).unwrap();
        let first = net.layers()[0].block_parts()[0];
        let w = 2 * first.weights();
        let r = net.layer_range(0);
        assert!(g[r.start..r.start + w].iter().all(|&x| x == 0.0));
        assert!(g[r.start + w..r.start + w + 2 * first.out_channels].iter().any(|&x| x != 0.0));
    }

    #[test]
    fn tiny_net_matches_finite_differences() {
        let mut net = cvnn(9).unwrap();
        net.init_glorot(11);
        let feature: Vec<Complex64> = (0..9).map(|i| Complex64::from_polar(0.33, 0.4 * i as f64)).collect();
        let report = gradient_check(&net, &feature, 1.2, Loss::Mae, 1e-6, 1e-6).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.layers.len(), 6);
    }
}
