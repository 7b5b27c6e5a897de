//! Small fully connected networks: Tanh hidden layers, Softplus or identity
//! output, hand-written reverse mode and plain SGD.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    Softplus,
    Identity,
}

/// The three network shapes used by the training strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    /// `4 -> 32 -> 64 -> 3`, Softplus output: PID gain generator.
    Npid,
    /// `4 -> 32 -> 64 -> n_params`, identity output.
    NeqpS,
    /// `32 -> 256 -> 256 -> n_params`, identity output.
    NeqpL,
}

impl Architecture {
    pub fn layer_dims(self, circuit_n_params: usize) -> Vec<usize> {
        match self {
            Architecture::Npid => vec![4, 32, 64, 3],
            Architecture::NeqpS => vec![4, 32, 64, circuit_n_params],
            Architecture::NeqpL => vec![32, 256, 256, circuit_n_params],
        }
    }

    pub fn output_activation(self) -> OutputActivation {
        match self {
            Architecture::Npid => OutputActivation::Softplus,
            Architecture::NeqpS | Architecture::NeqpL => OutputActivation::Identity,
        }
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Derivative of [`softplus`], the logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Affine layer, weights stored row-major as `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.biases)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Gradients with the same shapes as the owning [`Mlp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub layers: Vec<DenseGrad>,
}

impl MlpGradient {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Self {
            layers: mlp
                .layers
                .iter()
                .map(|l| DenseGrad { weights: vec![0.0; l.weights.len()], biases: vec![0.0; l.biases.len()] })
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.biases.iter_mut()).for_each(|g| *g *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &MlpGradient) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weights.iter_mut().zip(&b.weights).for_each(|(x, y)| *x += y);
            a.biases.iter_mut().zip(&b.biases).for_each(|(x, y)| *x += y);
        }
    }
}

#[derive(Debug, Clone)]
struct ForwardCache {
    /// Input to each layer; entry 0 is the network input.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of the output layer.
    output_pre: Vec<f64>,
}

#[derive(Deserialize)]
struct MlpRepr {
    output_activation: OutputActivation,
    layers: Vec<Dense>,
}

/// Multilayer perceptron. `forward` caches activations for one `backward`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "MlpRepr")]
pub struct Mlp {
    output_activation: OutputActivation,
    layers: Vec<Dense>,
    #[serde(skip)]
    cache: Option<ForwardCache>,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.output_activation == other.output_activation && self.layers == other.layers
    }
}

impl TryFrom<MlpRepr> for Mlp {
    type Error = Error;

    fn try_from(repr: MlpRepr) -> Result<Self> {
        if repr.layers.is_empty() {
            return Err(Error::InvalidArgument("network needs at least one layer".into()));
        }
        for (i, l) in repr.layers.iter().enumerate() {
            if l.in_dim == 0 || l.out_dim == 0 || l.weights.len() != l.in_dim * l.out_dim || l.biases.len() != l.out_dim
            {
                return Err(Error::InvalidArgument(format!("layer {i} has inconsistent shapes")));
            }
            if i > 0 && repr.layers[i - 1].out_dim != l.in_dim {
                return Err(Error::InvalidArgument(format!("layer {i} input does not match previous output")));
            }
            if l.weights.iter().chain(&l.biases).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("layer {i} parameters")));
            }
        }
        Ok(Mlp { output_activation: repr.output_activation, layers: repr.layers, cache: None })
    }
}

impl Mlp {
    /// Fan-balanced uniform weights on `±sqrt(6 / (fan_in + fan_out))`, zero
    /// biases.
    pub fn new<R: Rng + ?Sized>(
        layer_dims: &[usize],
        output_activation: OutputActivation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut mlp = Self::zeros(layer_dims, output_activation)?;
        for layer in &mut mlp.layers {
            let limit = (6.0 / (layer.in_dim + layer.out_dim) as f64).sqrt();
            layer.weights.iter_mut().for_each(|w| *w = rng.random_range(-limit..=limit));
        }
        Ok(mlp)
    }

    /// All weights and biases zero.
    pub fn zeros(layer_dims: &[usize], output_activation: OutputActivation) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::InvalidArgument(format!("invalid layer dims {layer_dims:?}")));
        }
        let layers = layer_dims
            .windows(2)
            .map(|w| Dense { in_dim: w[0], out_dim: w[1], weights: vec![0.0; w[0] * w[1]], biases: vec![0.0; w[1]] })
            .collect();
        Ok(Self { output_activation, layers, cache: None })
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].in_dim).chain(self.layers.iter().map(|l| l.out_dim)).collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output_activation
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        self.cache = None;
        &mut self.layers
    }

    fn run(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), actual: input.len() });
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut x = input.to_vec();
        let last = self.layers.len() - 1;
        for layer in &self.layers[..last] {
            let mut h = layer.affine(&x);
            h.iter_mut().for_each(|v| *v = v.tanh());
            inputs.push(std::mem::replace(&mut x, h));
        }
        let output_pre = self.layers[last].affine(&x);
        inputs.push(x);
        let out = match self.output_activation {
            OutputActivation::Softplus => output_pre.iter().map(|&v| softplus(v)).collect(),
            OutputActivation::Identity => output_pre.clone(),
        };
        Ok((out, ForwardCache { inputs, output_pre }))
    }

    /// Forward pass that caches activations for [`Mlp::backward`].
    pub fn forward(&mut self, input: &[f64]) -> Result<Vec<f64>> {
        let (out, cache) = self.run(input)?;
        self.cache = Some(cache);
        Ok(out)
    }

    /// Forward pass without touching the cache.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.run(input).map(|(out, _)| out)
    }

    /// Gradient of `output · output_grad` with respect to every weight and
    /// bias, at the most recent cached forward pass.
    pub fn backward(&self, output_grad: &[f64]) -> Result<MlpGradient> {
        let cache = self.cache.as_ref().ok_or(Error::NoForwardCache)?;
        if output_grad.len() != self.output_dim() {
            return Err(Error::DimensionMismatch { expected: self.output_dim(), actual: output_grad.len() });
        }
        let mut delta: Vec<f64> = match self.output_activation {
            OutputActivation::Softplus => {
                output_grad.iter().zip(&cache.output_pre).map(|(g, &z)| g * sigmoid(z)).collect()
            }
            OutputActivation::Identity => output_grad.to_vec(),
        };
        let mut grads = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.inputs[l];
            let mut gw = Vec::with_capacity(layer.weights.len());
            for d in &delta {
                gw.extend(x.iter().map(|v| d * v));
            }
            let next_delta = if l > 0 {
                // inputs[l] = tanh(pre), so tanh' = 1 - inputs[l]^2.
                let mut back = vec![0.0; layer.in_dim];
                for (row, d) in layer.weights.chunks_exact(layer.in_dim).zip(&delta) {
                    back.iter_mut().zip(row).for_each(|(b, w)| *b += w * d);
                }
                back.iter_mut().zip(x).for_each(|(b, h)| *b *= 1.0 - h * h);
                Some(back)
            } else {
                None
            };
            grads.push(DenseGrad { weights: gw, biases: std::mem::take(&mut delta) });
            if let Some(d) = next_delta {
                delta = d;
            }
        }
        grads.reverse();
        Ok(MlpGradient { layers: grads })
    }

    /// `w -= lr * dw`, `b -= lr * db`.
    pub fn sgd_step(&mut self, grads: &MlpGradient, lr: f64) -> Result<()> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be > 0, got {lr}")));
        }
        if grads.layers.len() != self.layers.len()
            || grads
                .layers
                .iter()
                .zip(&self.layers)
                .any(|(g, l)| g.weights.len() != l.weights.len() || g.biases.len() != l.biases.len())
        {
            return Err(Error::InvalidArgument("gradient shapes do not match network".into()));
        }
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            layer.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= lr * d);
            layer.biases.iter_mut().zip(&g.biases).for_each(|(b, d)| *b -= lr * d);
        }
        if self.layers.iter().any(|l| l.weights.iter().chain(&l.biases).any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("network parameters after SGD step".into()));
        }
        self.cache = None;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Builds one of the three standard networks with seeded initialization.
pub fn mlp_new(architecture: Architecture, circuit_n_params: usize, seed: u64) -> Result<Mlp> {
    if architecture != Architecture::Npid && circuit_n_params == 0 {
        return Err(Error::InvalidArgument("NEQP networks need circuit_n_params > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Mlp::new(&architecture.layer_dims(circuit_n_params), architecture.output_activation(), &mut rng)
}
