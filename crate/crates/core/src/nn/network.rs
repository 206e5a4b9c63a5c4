use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-7;

/// Affine map `y = W x + b`, weights row-major with one row per output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` for weights and biases.
    pub fn init<R: Rng>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let mut draw =
            |n: usize| -> Vec<f64> { (0..n).map(|_| rng.random_range(-bound..=bound)).collect() };
        let weights = draw(inputs * outputs);
        let bias = draw(outputs);
        Self {
            inputs,
            outputs,
            weights,
            bias,
        }
    }

    pub fn from_parts(
        inputs: usize,
        outputs: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        let layer = Self {
            inputs,
            outputs,
            weights,
            bias,
        };
        layer.validate()?;
        Ok(layer)
    }

    fn validate(&self) -> Result<()> {
        if self.inputs == 0 || self.outputs == 0 {
            return Err(Error::Shape("layer with zero width".into()));
        }
        if self.weights.len() != self.inputs * self.outputs {
            return Err(Error::Dimension {
                expected: self.inputs * self.outputs,
                got: self.weights.len(),
            });
        }
        if self.bias.len() != self.outputs {
            return Err(Error::Dimension {
                expected: self.outputs,
                got: self.bias.len(),
            });
        }
        if self
            .weights
            .iter()
            .chain(&self.bias)
            .any(|v| !v.is_finite())
        {
            return Err(Error::Shape("non-finite parameter".into()));
        }
        Ok(())
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        (0..self.outputs)
            .map(|o| {
                let dot: f64 = self.row(o).iter().zip(x).map(|(w, v)| w * v).sum();
                dot + self.bias[o]
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// The auxiliary loss-prediction head: `fc2(relu(fc1(h)))` producing a
/// scalar predicted loss rank from the penultimate features `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossHeadParams {
    pub fc1: Dense,
    pub fc2: Dense,
}

impl LossHeadParams {
    pub fn zeros(input: usize, width: usize) -> Self {
        Self {
            fc1: Dense::zeros(input, width),
            fc2: Dense::zeros(width, 1),
        }
    }

    fn validate(&self, input: usize) -> Result<()> {
        self.fc1.validate()?;
        self.fc2.validate()?;
        if self.fc1.inputs != input {
            return Err(Error::Dimension {
                expected: input,
                got: self.fc1.inputs,
            });
        }
        if self.fc2.inputs != self.fc1.outputs || self.fc2.outputs != 1 {
            return Err(Error::Shape(
                "loss head layers do not chain to a scalar".into(),
            ));
        }
        Ok(())
    }
}

/// Architecture of the classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    /// Hidden widths between input and output; may be empty (logistic model).
    pub hidden_layers: Vec<usize>,
    /// Width of the loss head's hidden layer.
    pub loss_head_width: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_layers: vec![32],
            loss_head_width: 16,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        if self.loss_head_width == 0 {
            return Err(Error::Config("loss_head_width must be positive".into()));
        }
        Ok(())
    }
}

/// Classifier `F` (ReLU hidden layers, sigmoid outputs) plus the optional
/// loss head `F_L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layers: Vec<Dense>,
    pub head: Option<LossHeadParams>,
}

impl NetworkParams {
    /// Seeded random initialization. The head draws from its own stream, so
    /// adding or removing it leaves the classifier weights unchanged.
    pub fn init(
        feature_dim: usize,
        num_classes: usize,
        model: &ModelConfig,
        with_head: bool,
        seed: u64,
    ) -> Result<Self> {
        model.validate()?;
        if feature_dim == 0 || num_classes == 0 {
            return Err(Error::Config(
                "feature_dim and num_classes must be positive".into(),
            ));
        }
        let mut widths = vec![feature_dim];
        widths.extend(&model.hidden_layers);
        widths.push(num_classes);
        let mut rng = rng::stream(seed, Stream::ModelInit, 0);
        let layers = widths
            .windows(2)
            .map(|w| Dense::init(w[0], w[1], &mut rng))
            .collect::<Vec<_>>();
        let head = with_head.then(|| {
            let mut rng = rng::stream(seed, Stream::HeadInit, 0);
            let h = widths[widths.len() - 2];
            let fc1 = Dense::init(h, model.loss_head_width, &mut rng);
            let fc2 = Dense::init(model.loss_head_width, 1, &mut rng);
            LossHeadParams { fc1, fc2 }
        });
        Ok(Self { layers, head })
    }

    pub fn from_layers(layers: Vec<Dense>, head: Option<LossHeadParams>) -> Result<Self> {
        let params = Self { layers, head };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        for layer in &self.layers {
            layer.validate()?;
        }
        for pair in self.layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::Dimension {
                    expected: pair[0].outputs,
                    got: pair[1].inputs,
                });
            }
        }
        if let Some(head) = &self.head {
            head.validate(self.penultimate_dim())?;
        }
        Ok(())
    }

    /// Same shapes, all entries zero. Used as a gradient accumulator.
    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
            head: self
                .head
                .as_ref()
                .map(|h| LossHeadParams::zeros(h.fc1.inputs, h.fc1.outputs)),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn num_classes(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    /// Dimension of the features entering the last layer.
    pub fn penultimate_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].inputs
    }

    pub fn last_layer(&self) -> &Dense {
        &self.layers[self.layers.len() - 1]
    }

    pub fn has_head(&self) -> bool {
        self.head.is_some()
    }

    /// Parameter blocks in a fixed order: each layer's weights then bias,
    /// then the head's fc1 and fc2.
    pub fn blocks(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            out.push(&l.weights);
            out.push(&l.bias);
        }
        if let Some(h) = &self.head {
            for l in [&h.fc1, &h.fc2] {
                out.push(&l.weights);
                out.push(&l.bias);
            }
        }
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weights);
            out.push(&mut l.bias);
        }
        if let Some(h) = &mut self.head {
            for l in [&mut h.fc1, &mut h.fc2] {
                out.push(&mut l.weights);
                out.push(&mut l.bias);
            }
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.blocks().iter().map(|b| b.len()).sum()
    }

    /// Number of parameters belonging to the classifier `F` (excludes the head).
    pub fn num_classifier_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.blocks().concat()
    }

    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_params() {
            return Err(Error::Dimension {
                expected: self.num_params(),
                got: values.len(),
            });
        }
        let mut offset = 0;
        for block in self.blocks_mut() {
            let n = block.len();
            block.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// `self -= step * grad`, blockwise.
    pub fn sgd_step(&mut self, grad: &NetworkParams, step: f64) {
        for (p, g) in self.blocks_mut().into_iter().zip(grad.blocks()) {
            for (a, b) in p.iter_mut().zip(g) {
                *a -= step * b;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeadTrace {
    /// fc1 output before ReLU.
    pub pre: Vec<f64>,
    pub value: f64,
}

/// Everything a backward pass or a query scorer needs from one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    /// `inputs[i]` is the vector entering layer `i`; `inputs[0]` is `x`.
    pub inputs: Vec<Vec<f64>>,
    /// `pre[i]` is layer `i`'s affine output; the last entry holds the logits.
    pub pre: Vec<Vec<f64>>,
    /// Sigmoid outputs clamped to `[PROB_EPS, 1 - PROB_EPS]`.
    pub probs: Vec<f64>,
    pub head: Option<HeadTrace>,
}

impl ForwardTrace {
    /// Activation vector entering the last layer.
    pub fn penultimate(&self) -> &[f64] {
        &self.inputs[self.inputs.len() - 1]
    }

    pub fn logits(&self) -> &[f64] {
        &self.pre[self.pre.len() - 1]
    }

    /// Predicted loss rank, when the head was evaluated.
    pub fn head_value(&self) -> Option<f64> {
        self.head.as_ref().map(|h| h.value)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn relu(v: &[f64]) -> Vec<f64> {
    v.iter().map(|&z| z.max(0.0)).collect()
}

/// Runs `x` through the classifier and, when `with_head`, through the loss
/// head.
pub fn forward(params: &NetworkParams, x: &[f64], with_head: bool) -> Result<ForwardTrace> {
    if x.len() != params.feature_dim() {
        return Err(Error::Dimension {
            expected: params.feature_dim(),
            got: x.len(),
        });
    }
    let last = params.layers.len() - 1;
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut current = x.to_vec();
    for (i, layer) in params.layers.iter().enumerate() {
        let z = layer.apply(&current);
        let next = if i < last { relu(&z) } else { Vec::new() };
        inputs.push(std::mem::replace(&mut current, next));
        pre.push(z);
    }
    let probs = pre[last]
        .iter()
        .map(|&z| sigmoid(z).clamp(PROB_EPS, 1.0 - PROB_EPS))
        .collect();
    let head = if with_head {
        let head = params.head.as_ref().ok_or(Error::MissingHead)?;
        let h = &inputs[last];
        let z1 = head.fc1.apply(h);
        let value = head.fc2.apply(&relu(&z1))[0];
        Some(HeadTrace { pre: z1, value })
    } else {
        None
    };
    Ok(ForwardTrace {
        inputs,
        pre,
        probs,
        head,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_gives_half() {
        let params = NetworkParams::from_layers(
            vec![Dense::zeros(3, 4), Dense::zeros(4, 2)],
            Some(LossHeadParams::zeros(4, 3)),
        )
        .unwrap();
        let t = forward(&params, &[1.0, -2.0, 3.0], true).unwrap();
        assert_eq!(t.probs, vec![0.5, 0.5]);
        assert_eq!(t.head_value(), Some(0.0));
        assert_eq!(t.penultimate().len(), 4);
    }

    #[test]
    fn single_layer_sigmoid() {
        let params = NetworkParams::from_layers(
            vec![Dense::from_parts(1, 1, vec![2.0], vec![0.0]).unwrap()],
            None,
        )
        .unwrap();
        let t = forward(&params, &[1.0], false).unwrap();
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((t.probs[0] - expected).abs() < 1e-15);
        assert!((t.probs[0] - 0.880797).abs() < 1e-6);
        // single layer: penultimate is the input itself
        assert_eq!(t.penultimate(), &[1.0]);
    }

    #[test]
    fn dimension_and_head_errors() {
        let params = NetworkParams::init(3, 2, &ModelConfig::default(), false, 1).unwrap();
        assert!(matches!(
            forward(&params, &[1.0], false),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            forward(&params, &[1.0, 2.0, 3.0], true),
            Err(Error::MissingHead)
        ));
    }

    #[test]
    fn init_is_seeded_and_head_independent() {
        let m = ModelConfig::default();
        let a = NetworkParams::init(5, 3, &m, true, 9).unwrap();
        let b = NetworkParams::init(5, 3, &m, false, 9).unwrap();
        assert_eq!(a.layers, b.layers);
        assert_eq!(a, NetworkParams::init(5, 3, &m, true, 9).unwrap());
        assert_ne!(
            a.layers,
            NetworkParams::init(5, 3, &m, true, 10).unwrap().layers
        );
        let bound = 1.0 / 5f64.sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn flat_roundtrip() {
        let mut p = NetworkParams::init(4, 2, &ModelConfig::default(), true, 3).unwrap();
        let flat = p.to_flat();
        assert_eq!(flat.len(), p.num_params());
        let doubled: Vec<f64> = flat.iter().map(|v| v * 2.0).collect();
        p.set_flat(&doubled).unwrap();
        assert_eq!(p.to_flat(), doubled);
    }

    #[test]
    fn extreme_logits_are_clamped() {
        let params = NetworkParams::from_layers(
            vec![Dense::from_parts(1, 2, vec![1e3, -1e3], vec![0.0, 0.0]).unwrap()],
            None,
        )
        .unwrap();
        let t = forward(&params, &[1.0], false).unwrap();
        assert_eq!(t.probs, vec![1.0 - PROB_EPS, PROB_EPS]);
    }
}
