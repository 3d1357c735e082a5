//! Fully-connected Q-network with hand-written backpropagation, smooth L1
//! loss and Adam.
//!
//! Hidden layers use ReLU, the output layer is linear. Weights are stored
//! input-major (`inputs × outputs`) so a batch forward pass is `X·W + b`.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("a network needs at least an input and an output layer, got sizes {0:?}")]
    TooFewLayers(Vec<usize>),
    #[error("layer sizes must be positive, got {0:?}")]
    ZeroSize(Vec<usize>),
    #[error("expected input of length {expected}, got {got}")]
    InputShape { expected: usize, got: usize },
    #[error("normalizer entries must be strictly positive")]
    Normalizer,
    #[error("action index {index} out of range for {outputs} outputs")]
    ActionIndex { index: usize, outputs: usize },
    #[error("empty training batch")]
    EmptyBatch,
    #[error("expected {expected} parameters, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("gradient shapes do not match the network")]
    GradientShape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `inputs × outputs`.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weights: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weights.ncols()
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weights.iter().chain(self.bias.iter())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.bias.iter_mut())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

/// One regression target: only output `action` is compared with `target`.
#[derive(Debug, Clone, Copy)]
pub struct TrainSample<'a> {
    pub input: &'a [f64],
    pub action: usize,
    pub target: f64,
}

/// Parameter gradients, shaped like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        self.layers.iter().flat_map(Layer::params).copied().collect()
    }
}

fn check_sizes(sizes: &[usize]) -> Result<(), NeuralError> {
    if sizes.len() < 2 {
        return Err(NeuralError::TooFewLayers(sizes.to_vec()));
    }
    if sizes.contains(&0) {
        return Err(NeuralError::ZeroSize(sizes.to_vec()));
    }
    Ok(())
}

/// Smooth L1 (Huber) loss of `predicted - target` and its derivative with
/// respect to `predicted`.
pub fn smooth_l1(predicted: f64, target: f64, beta: f64) -> (f64, f64) {
    let d = predicted - target;
    if d.abs() < beta {
        (d * d / (2.0 * beta), d / beta)
    } else {
        (d.abs() - beta / 2.0, d.signum())
    }
}

/// Huber threshold used for training.
pub const SMOOTH_L1_BETA: f64 = 1.0;

impl Mlp {
    /// Fan-in uniform weights in `±1/sqrt(fan_in)`, zero biases.
    pub fn init<R: Rng + ?Sized>(rng: &mut R, sizes: &[usize]) -> Result<Self, NeuralError> {
        check_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                let mut layer = Layer::zeros(w[0], w[1]);
                layer.weights.iter_mut().for_each(|v| *v = dist.sample(rng));
                layer
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self, NeuralError> {
        check_sizes(sizes)?;
        Ok(Self {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    /// Rebuilds a network from [`Mlp::params`] output.
    pub fn from_params(sizes: &[usize], params: &[f64]) -> Result<Self, NeuralError> {
        let mut net = Self::zeros(sizes)?;
        net.set_params(params)?;
        Ok(net)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs()];
        s.extend(self.layers.iter().map(Layer::outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(Layer::outputs).unwrap_or(0)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters, layer by layer: weights row-major, then biases.
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(Layer::params).copied().collect()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NeuralError> {
        let expected = self.param_count();
        if params.len() != expected {
            return Err(NeuralError::ParamCount {
                expected,
                got: params.len(),
            });
        }
        for (dst, src) in self.layers.iter_mut().flat_map(Layer::params_mut).zip(params) {
            *dst = *src;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().flat_map(Layer::params).all(|v| v.is_finite())
    }

    /// Single-input forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NeuralError> {
        if input.len() != self.input_dim() {
            return Err(NeuralError::InputShape {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut act = input.to_vec();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = layer.bias.to_vec();
            for (i, &a) in act.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, w) in out.iter_mut().zip(layer.weights.row(i)) {
                    *o += a * w;
                }
            }
            if l < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            act = out;
        }
        Ok(act)
    }

    /// Forward pass on `state` divided elementwise by `normalizers`.
    pub fn forward_normalized(&self, state: &[f64], normalizers: &[f64]) -> Result<Vec<f64>, NeuralError> {
        if normalizers.len() != state.len() {
            return Err(NeuralError::InputShape {
                expected: state.len(),
                got: normalizers.len(),
            });
        }
        if normalizers.iter().any(|n| !(*n > 0.0)) {
            return Err(NeuralError::Normalizer);
        }
        let scaled: Vec<f64> = state.iter().zip(normalizers).map(|(s, n)| s / n).collect();
        self.forward(&scaled)
    }

    /// Mean smooth-L1 loss over a batch, from single-sample forward passes.
    pub fn loss(&self, batch: &[TrainSample<'_>]) -> Result<f64, NeuralError> {
        if batch.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        let mut total = 0.0;
        for s in batch {
            let out = self.forward(s.input)?;
            let pred = *out.get(s.action).ok_or(NeuralError::ActionIndex {
                index: s.action,
                outputs: out.len(),
            })?;
            total += smooth_l1(pred, s.target, SMOOTH_L1_BETA).0;
        }
        Ok(total / batch.len() as f64)
    }

    /// Mean batch loss and its exact gradient. Only the output node of each
    /// sample's action receives error signal.
    pub fn backward(&self, batch: &[TrainSample<'_>]) -> Result<(f64, Gradients), NeuralError> {
        if batch.is_empty() {
            return Err(NeuralError::EmptyBatch);
        }
        let n_in = self.input_dim();
        let n_out = self.output_dim();
        let mut x = Array2::zeros((batch.len(), n_in));
        for (b, s) in batch.iter().enumerate() {
            if s.input.len() != n_in {
                return Err(NeuralError::InputShape {
                    expected: n_in,
                    got: s.input.len(),
                });
            }
            if s.action >= n_out {
                return Err(NeuralError::ActionIndex {
                    index: s.action,
                    outputs: n_out,
                });
            }
            x.row_mut(b).iter_mut().zip(s.input).for_each(|(d, v)| *d = *v);
        }

        // activations[l] is the input of layer l; hidden activations are post-ReLU
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x);
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = activations[l].dot(&layer.weights);
            z += &layer.bias;
            if l < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            activations.push(z);
        }

        let scale = 1.0 / batch.len() as f64;
        let output = &activations[last + 1];
        let mut delta = Array2::zeros((batch.len(), n_out));
        let mut loss = 0.0;
        for (b, s) in batch.iter().enumerate() {
            let (l, g) = smooth_l1(output[[b, s.action]], s.target, SMOOTH_L1_BETA);
            loss += l;
            delta[[b, s.action]] = g * scale;
        }
        loss *= scale;

        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = &activations[l];
            let weights = input.t().dot(&delta);
            let bias = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut upstream = delta.dot(&self.layers[l].weights.t());
                ndarray::Zip::from(&mut upstream)
                    .and(input)
                    .for_each(|u, &a| {
                        if a <= 0.0 {
                            *u = 0.0
                        }
                    });
                delta = upstream;
            }
            grads.push(Layer { weights, bias });
        }
        grads.reverse();
        Ok((loss, Gradients { layers: grads }))
    }
}

/// Adam optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(net: &Mlp, learning_rate: f64) -> Self {
        Self::with_hyperparameters(net, learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyperparameters(net: &Mlp, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let n = net.param_count();
        Self {
            learning_rate,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
        }
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// One bias-corrected Adam update of `net`.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<(), NeuralError> {
        let shapes_match = grads.layers.len() == net.layers.len()
            && grads
                .layers
                .iter()
                .zip(&net.layers)
                .all(|(g, l)| g.weights.dim() == l.weights.dim() && g.bias.len() == l.bias.len());
        if !shapes_match || self.first_moment.len() != net.param_count() {
            return Err(NeuralError::GradientShape);
        }
        self.step += 1;
        let t = self.step as i32;
        let correction1 = 1.0 - self.beta1.powi(t);
        let correction2 = 1.0 - self.beta2.powi(t);
        let grad_iter = grads.layers.iter().flat_map(Layer::params);
        let param_iter = net.layers.iter_mut().flat_map(Layer::params_mut);
        for (((p, g), m), v) in param_iter
            .zip(grad_iter)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}
