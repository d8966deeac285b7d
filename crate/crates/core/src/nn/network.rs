use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{self, Domain};

use super::adam::Adam;
use super::layers::{Activation, ConvLayer, DenseLayer, LayerGrad};
use super::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv(ConvLayer),
    Dense(DenseLayer),
}

impl Layer {
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv(l) => l.forward(input),
            Layer::Dense(l) => l.forward(input),
        }
    }

    fn backward(&self, input: &Tensor, output: &Tensor, grad: &Tensor) -> Result<(LayerGrad, Tensor)> {
        match self {
            Layer::Conv(l) => l.backward(input, output, grad),
            Layer::Dense(l) => l.backward(input, output, grad),
        }
    }

    pub fn param_count(&self) -> usize {
        match self {
            Layer::Conv(l) => l.param_count(),
            Layer::Dense(l) => l.param_count(),
        }
    }

    fn params(&self) -> [&Tensor; 2] {
        match self {
            Layer::Conv(l) => [&l.weight, &l.bias],
            Layer::Dense(l) => [&l.weight, &l.bias],
        }
    }

    fn params_mut(&mut self) -> [&mut Tensor; 2] {
        match self {
            Layer::Conv(l) => [&mut l.weight, &mut l.bias],
            Layer::Dense(l) => [&mut l.weight, &mut l.bias],
        }
    }

    fn fan_in(&self) -> usize {
        match self {
            Layer::Conv(l) => l.in_channels() * l.kernel(),
            Layer::Dense(l) => l.in_width(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    Cnn,
    Dnn,
}

impl NetworkKind {
    pub fn name(self) -> &'static str {
        match self {
            NetworkKind::Cnn => "cnn",
            NetworkKind::Dnn => "dnn",
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Weight initialization scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Weights and biases i.i.d. N(0, 1).
    #[default]
    StandardNormal,
    /// Weights N(0, 2 / fan_in), biases zero.
    He,
}

impl Init {
    pub fn name(self) -> &'static str {
        match self {
            Init::StandardNormal => "standard_normal",
            Init::He => "he",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "standard_normal" | "normal" => Ok(Init::StandardNormal),
            "he" => Ok(Init::He),
            other => Err(Error::Parse(format!("unknown init scheme `{other}`"))),
        }
    }
}

/// Gradients of a loss with respect to every parameter and to the network input.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrad>,
    pub input: Tensor,
}

impl Gradients {
    /// Flattened in the same order as [`Network::params`].
    pub fn tensors(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|g| [&g.weight, &g.bias]).collect()
    }
}

/// Feed-forward stack of conv or dense layers.
///
/// `forward` is pure and can be shared across threads. Training goes
/// through `forward_train`, which caches activations for one `backward`.
#[derive(Debug, Clone)]
pub struct Network {
    layers: Vec<Layer>,
    cache: Option<Vec<Tensor>>,
}

impl PartialEq for Network {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidSpec("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            let ok = match (&pair[0], &pair[1]) {
                (Layer::Conv(a), Layer::Conv(b)) => a.out_channels() == b.in_channels(),
                (Layer::Dense(a), Layer::Dense(b)) => a.out_width() == b.in_width(),
                _ => false,
            };
            if !ok {
                return Err(Error::InvalidSpec("adjacent layers do not chain".into()));
            }
        }
        Ok(Network { layers, cache: None })
    }

    /// Conv stack over a single input channel, ReLU on all but the last layer.
    pub fn conv_stack(filters: &[usize], kernel: usize) -> Result<Self> {
        if filters.is_empty() || filters.contains(&0) {
            return Err(Error::InvalidSpec(format!("bad conv structure {filters:?}")));
        }
        let mut layers = Vec::with_capacity(filters.len());
        let mut channels = 1;
        for (i, &m) in filters.iter().enumerate() {
            let relu = i + 1 < filters.len();
            layers.push(Layer::Conv(
                ConvLayer::new(channels, m, kernel, relu).map_err(|e| Error::InvalidSpec(e.to_string()))?,
            ));
            channels = m;
        }
        Network::new(layers)
    }

    /// Dense stack `widths[0] → … → widths[D-1]`, ReLU hidden, sigmoid output.
    pub fn dense_stack(widths: &[usize]) -> Result<Self> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(Error::InvalidSpec(format!("bad dense structure {widths:?}")));
        }
        let last = widths.len() - 2;
        let layers = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i == last {
                    Activation::Sigmoid
                } else {
                    Activation::Relu
                };
                DenseLayer::new(w[0], w[1], act).map(Layer::Dense)
            })
            .collect::<Result<Vec<_>>>()?;
        Network::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn kind(&self) -> NetworkKind {
        match self.layers[0] {
            Layer::Conv(_) => NetworkKind::Cnn,
            Layer::Dense(_) => NetworkKind::Dnn,
        }
    }

    /// Filter counts for a CNN, or all widths (input first) for a DNN.
    pub fn structure(&self) -> Vec<usize> {
        match self.kind() {
            NetworkKind::Cnn => self
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Conv(c) => c.out_channels(),
                    Layer::Dense(d) => d.out_width(),
                })
                .collect(),
            NetworkKind::Dnn => {
                let mut widths = Vec::with_capacity(self.layers.len() + 1);
                for l in &self.layers {
                    if let Layer::Dense(d) = l {
                        if widths.is_empty() {
                            widths.push(d.in_width());
                        }
                        widths.push(d.out_width());
                    }
                }
                widths
            }
        }
    }

    /// Conv kernel size; 0 for dense networks.
    pub fn kernel(&self) -> usize {
        match &self.layers[0] {
            Layer::Conv(c) => c.kernel(),
            Layer::Dense(_) => 0,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn params(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    /// All parameters flattened into one vector.
    pub fn flat_params(&self) -> Vec<f64> {
        self.params().iter().flat_map(|t| t.data().iter().copied()).collect()
    }

    /// Draws every parameter from the seeded stream in layer order.
    pub fn init(&mut self, seed: u64, scheme: Init) {
        let mut rng = rng::stream(seed, Domain::Init, 0, 0);
        for layer in &mut self.layers {
            let std = match scheme {
                Init::StandardNormal => 1.0,
                Init::He => (2.0 / layer.fan_in() as f64).sqrt(),
            };
            let [w, b] = layer.params_mut();
            for v in w.data_mut() {
                *v = std * rng.sample::<f64, _>(StandardNormal);
            }
            for v in b.data_mut() {
                *v = match scheme {
                    Init::StandardNormal => rng.sample(StandardNormal),
                    Init::He => 0.0,
                };
            }
        }
        self.cache = None;
    }

    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let mut x = self.layers[0].forward(input)?;
        for layer in &self.layers[1..] {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    /// Forward pass that keeps every intermediate activation for `backward`.
    pub fn forward_train(&mut self, input: &Tensor) -> Result<Tensor> {
        self.cache = None;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.clone());
        for layer in &self.layers {
            let y = layer.forward(acts.last().expect("non-empty"))?;
            acts.push(y);
        }
        let out = acts.last().expect("non-empty").clone();
        self.cache = Some(acts);
        Ok(out)
    }

    /// Reverse-mode pass for the most recent `forward_train`. Consumes the cache.
    pub fn backward(&mut self, grad_output: &Tensor) -> Result<Gradients> {
        let acts = self
            .cache
            .take()
            .ok_or(Error::State("backward called without a preceding forward_train"))?;
        let out = acts.last().expect("non-empty");
        if !out.same_shape(grad_output) {
            return Err(Error::contract(format!(
                "loss gradient shape {:?} does not match output {:?}",
                grad_output.shape(),
                out.shape()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = grad_output.clone();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let (lg, gx) = layer.backward(&acts[i], &acts[i + 1], &g)?;
            grads.push(lg);
            g = gx;
        }
        grads.reverse();
        g.ensure_finite("backward")?;
        Ok(Gradients {
            layers: grads,
            input: g,
        })
    }

    pub fn optimizer(&self, learning_rate: f64) -> Adam {
        Adam::new(self.params().into_iter().map(Tensor::shape), learning_rate)
    }

    pub fn apply(&mut self, adam: &mut Adam, grads: &Gradients) -> Result<()> {
        let g = grads.tensors();
        adam.step(&mut self.params_mut(), &g)
    }
}
