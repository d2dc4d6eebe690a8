//! Small fully connected networks with hand-written backpropagation and Adam.
//!
//! Hidden layers use ReLU; the output layer applies one of
//! [`OutputActivation`]. No dropout or normalization layers.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputActivation {
    #[default]
    Identity,
    Tanh,
    Sigmoid,
}

impl OutputActivation {
    fn apply(self, x: &mut Array2<f64>) {
        match self {
            OutputActivation::Identity => {}
            OutputActivation::Tanh => x.mapv_inplace(f64::tanh),
            OutputActivation::Sigmoid => x.mapv_inplace(sigmoid),
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    fn grad_from_output(self, y: f64) -> f64 {
        match self {
            OutputActivation::Identity => 1.0,
            OutputActivation::Tanh => 1.0 - y * y,
            OutputActivation::Sigmoid => y * (1.0 - y),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `fan_in × fan_out`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

/// Multi-layer perceptron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MlpRecord", try_from = "MlpRecord")]
pub struct Mlp {
    dims: Vec<usize>,
    layers: Vec<Layer>,
    output: OutputActivation,
}

/// Activations saved by [`Mlp::forward_cached`]; `acts[0]` is the input and
/// `acts[l + 1]` the output of layer `l`.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    acts: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("cache holds the input")
    }
}

/// Parameter-shaped gradient buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w: Vec<Array2<f64>>,
    pub b: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            w: net.layers.iter().map(|l| Array2::zeros(l.w.raw_dim())).collect(),
            b: net.layers.iter().map(|l| Array1::zeros(l.b.raw_dim())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().all(|a| a.iter().all(|v| v.is_finite()))
            && self.b.iter().all(|a| a.iter().all(|v| v.is_finite()))
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.w.iter_mut().zip(&other.w) {
            *a += b;
        }
        for (a, b) in self.b.iter_mut().zip(&other.b) {
            *a += b;
        }
    }

    /// Same order as [`Mlp::params_flat`].
    pub fn flat(&self) -> Vec<f64> {
        self.w
            .iter()
            .zip(&self.b)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new(dims: &[usize], output: OutputActivation, seed: u64) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer dims {dims:?}")));
        }
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut rng = rng::stream(seed, domain::INIT, l as u64);
                Layer {
                    w: Array2::from_shape_simple_fn((fan_in, fan_out), || {
                        rng.random_range(-limit..=limit)
                    }),
                    b: Array1::zeros(fan_out),
                }
            })
            .collect();
        Ok(Self {
            dims: dims.to_vec(),
            layers,
            output,
        })
    }

    /// Builds a network from explicit layers.
    pub fn from_layers(layers: Vec<Layer>, output: OutputActivation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("network needs at least one layer".into()));
        }
        let mut dims = vec![layers[0].w.nrows()];
        for l in &layers {
            if l.w.nrows() != *dims.last().unwrap() || l.b.len() != l.w.ncols() {
                return Err(Error::ShapeMismatch("inconsistent layer shapes".into()));
            }
            dims.push(l.w.ncols());
        }
        if dims.contains(&0) {
            return Err(Error::ShapeMismatch("zero-width layer".into()));
        }
        Ok(Self {
            dims,
            layers,
            output,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Weights then bias of each layer, row-major.
    pub fn params_flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.w.iter().chain(l.b.iter()).copied())
            .collect()
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} parameters for a network with {}",
                params.len(),
                self.param_count()
            )));
        }
        let mut it = params.iter();
        for l in &mut self.layers {
            l.w.iter_mut().chain(l.b.iter_mut()).for_each(|p| *p = *it.next().unwrap());
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.params_flat().iter().all(|v| v.is_finite())
    }

    fn check_input(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "batch width {} but network input is {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn layer_forward(&self, l: usize, x: &ArrayView2<'_, f64>) -> Array2<f64> {
        let layer = &self.layers[l];
        let mut z = x.dot(&layer.w);
        z += &layer.b;
        if l + 1 < self.layers.len() {
            z.mapv_inplace(|v| v.max(0.0));
        } else {
            self.output.apply(&mut z);
        }
        z
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut h = self.layer_forward(0, &x);
        for l in 1..self.layers.len() {
            h = self.layer_forward(l, &h.view());
        }
        Ok(h)
    }

    pub fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        self.check_input(&x)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_owned());
        for l in 0..self.layers.len() {
            let next = self.layer_forward(l, &acts[l].view());
            acts.push(next);
        }
        Ok(ForwardCache { acts })
    }

    fn check_upstream(&self, cache: &ForwardCache, upstream: &ArrayView2<'_, f64>) -> Result<()> {
        if upstream.dim() != cache.output().dim() {
            return Err(Error::ShapeMismatch(format!(
                "upstream gradient {:?} vs output {:?}",
                upstream.dim(),
                cache.output().dim()
            )));
        }
        Ok(())
    }

    fn output_delta(&self, cache: &ForwardCache, upstream: &ArrayView2<'_, f64>) -> Array2<f64> {
        let mut delta = upstream.to_owned();
        if self.output != OutputActivation::Identity {
            let act = self.output;
            Zip::from(&mut delta)
                .and(cache.output())
                .for_each(|d, &y| *d *= act.grad_from_output(y));
        }
        delta
    }

    /// Parameter gradients and the gradient with respect to the input batch,
    /// given `upstream = dL/d(output)`.
    pub fn backward_cached(
        &self,
        cache: &ForwardCache,
        upstream: ArrayView2<'_, f64>,
    ) -> Result<(Gradients, Array2<f64>)> {
        self.check_upstream(cache, &upstream)?;
        let mut grads = Gradients::zeros_like(self);
        let mut delta = self.output_delta(cache, &upstream);
        for l in (0..self.layers.len()).rev() {
            grads.w[l] = cache.acts[l].t().dot(&delta);
            grads.b[l] = delta.sum_axis(Axis(0));
            let mut dx = delta.dot(&self.layers[l].w.t());
            if l > 0 {
                Zip::from(&mut dx)
                    .and(&cache.acts[l])
                    .for_each(|g, &a| if a <= 0.0 { *g = 0.0 });
            }
            delta = dx;
        }
        Ok((grads, delta))
    }

    /// Gradient with respect to the input only; skips parameter gradients.
    pub fn input_gradient(&self, cache: &ForwardCache, upstream: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_upstream(cache, &upstream)?;
        let mut delta = self.output_delta(cache, &upstream);
        for l in (0..self.layers.len()).rev() {
            let mut dx = delta.dot(&self.layers[l].w.t());
            if l > 0 {
                Zip::from(&mut dx)
                    .and(&cache.acts[l])
                    .for_each(|g, &a| if a <= 0.0 { *g = 0.0 });
            }
            delta = dx;
        }
        Ok(delta)
    }

    pub fn backward(&self, x: ArrayView2<'_, f64>, upstream: ArrayView2<'_, f64>) -> Result<(Gradients, Array2<f64>)> {
        let cache = self.forward_cached(x)?;
        self.backward_cached(&cache, upstream)
    }
}

#[derive(Serialize, Deserialize)]
struct MlpRecord {
    dims: Vec<usize>,
    output: OutputActivation,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl From<Mlp> for MlpRecord {
    fn from(net: Mlp) -> Self {
        Self {
            dims: net.dims,
            output: net.output,
            weights: net.layers.iter().map(|l| l.w.iter().copied().collect()).collect(),
            biases: net.layers.iter().map(|l| l.b.to_vec()).collect(),
        }
    }
}

impl TryFrom<MlpRecord> for Mlp {
    type Error = Error;

    fn try_from(rec: MlpRecord) -> Result<Self> {
        if rec.dims.len() < 2 || rec.weights.len() + 1 != rec.dims.len() || rec.biases.len() != rec.weights.len() {
            return Err(Error::ShapeMismatch("checkpoint layer count mismatch".into()));
        }
        let layers = rec
            .dims
            .windows(2)
            .zip(rec.weights.into_iter().zip(rec.biases))
            .map(|(d, (w, b))| {
                let w = Array2::from_shape_vec((d[0], d[1]), w).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
                Ok(Layer { w, b: Array1::from(b) })
            })
            .collect::<Result<Vec<_>>>()?;
        let net = Mlp::from_layers(layers, rec.output)?;
        if !net.is_finite() {
            return Err(Error::NonFinite("checkpoint parameters"));
        }
        Ok(net)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.5,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moments for one network.
#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    m: Gradients,
    v: Gradients,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: Gradients::zeros_like(net),
            v: Gradients::zeros_like(net),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> AdamConfig {
        self.config
    }

    /// One bias-corrected Adam update of `net` in place.
    pub fn step(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        if grads.w.len() != net.layers.len()
            || grads.w.iter().zip(&net.layers).any(|(g, l)| g.dim() != l.w.dim())
            || grads.b.iter().zip(&net.layers).any(|(g, l)| g.dim() != l.b.dim())
        {
            return Err(Error::ShapeMismatch("gradients do not match network".into()));
        }
        if !grads.is_finite() {
            return Err(Error::Diverged("gradient"));
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let update = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
        };
        for (l, layer) in net.layers.iter_mut().enumerate() {
            Zip::from(&mut layer.w)
                .and(&mut self.m.w[l])
                .and(&mut self.v.w[l])
                .and(&grads.w[l])
                .for_each(|p, m, v, &g| update(p, m, v, g));
            Zip::from(&mut layer.b)
                .and(&mut self.m.b[l])
                .and(&mut self.v.b[l])
                .and(&grads.b[l])
                .for_each(|p, m, v, &g| update(p, m, v, g));
        }
        if !net.is_finite() {
            return Err(Error::Diverged("parameters"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn net_2_2_1() -> Mlp {
        Mlp::from_layers(
            vec![
                Layer {
                    w: array![[1.0, -1.0], [2.0, 0.5]],
                    b: array![0.0, 0.25],
                },
                Layer {
                    w: array![[1.5], [-2.0]],
                    b: array![0.1],
                },
            ],
            OutputActivation::Identity,
        )
        .unwrap()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let mut net = Mlp::new(&[3, 4, 2], OutputActivation::Identity, 0).unwrap();
        net.set_params_flat(&vec![0.0; net.param_count()]).unwrap();
        let y = net.forward(array![[1.0, 2.0, 3.0], [-1.0, 0.0, 4.0]].view()).unwrap();
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let net = Mlp::from_layers(
            vec![Layer { w: Array2::eye(3), b: Array1::zeros(3) }],
            OutputActivation::Identity,
        )
        .unwrap();
        let x = array![[1.0, -2.0, 3.5]];
        assert_eq!(net.forward(x.view()).unwrap(), x);
    }

    #[test]
    fn hand_computed_forward() {
        // x = (1, 2): hidden = relu(1 + 4, -1 + 1 + 0.25) = (5, 0.25)
        // out = 7.5 - 0.5 + 0.1 = 7.1
        // x = (-1, 0): hidden = relu(-1, 1.25) = (0, 1.25); out = -2.5 + 0.1 = -2.4
        let y = net_2_2_1().forward(array![[1.0, 2.0], [-1.0, 0.0]].view()).unwrap();
        assert!((y[[0, 0]] - 7.1).abs() < 1e-12);
        assert!((y[[1, 0]] + 2.4).abs() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let net = net_2_2_1();
        assert!(net.forward(array![[1.0, 2.0, 3.0]].view()).is_err());
        assert!(net.backward(array![[1.0, 2.0]].view(), array![[1.0, 1.0]].view()).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = Mlp::new(&[3, 5, 2], OutputActivation::Tanh, 4).unwrap();
        let x = array![[0.3, -0.1, 2.0], [1.0, 1.0, 1.0]];
        let (g, dx) = net.backward(x.view(), Array2::zeros((2, 2)).view()).unwrap();
        assert!(g.flat().iter().all(|&v| v == 0.0));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_scalar_chain_rule() {
        let net = Mlp::from_layers(vec![Layer { w: array![[3.0]], b: array![0.0] }], OutputActivation::Identity).unwrap();
        let (g, dx) = net.backward(array![[2.0]].view(), array![[0.5]].view()).unwrap();
        assert_eq!(g.w[0][[0, 0]], 0.5 * 2.0);
        assert_eq!(g.b[0][0], 0.5);
        assert_eq!(dx[[0, 0]], 0.5 * 3.0);
    }

    #[test]
    fn input_gradient_matches_full_backward() {
        let net = Mlp::new(&[4, 8, 8, 1], OutputActivation::Sigmoid, 2).unwrap();
        let x = Array2::from_shape_fn((5, 4), |(i, j)| ((i * 4 + j) as f64).sin());
        let up = Array2::from_shape_fn((5, 1), |(i, _)| i as f64 - 2.0);
        let cache = net.forward_cached(x.view()).unwrap();
        let (_, dx) = net.backward_cached(&cache, up.view()).unwrap();
        assert_eq!(net.input_gradient(&cache, up.view()).unwrap(), dx);
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut net = Mlp::new(&[2, 3, 1], OutputActivation::Identity, 1).unwrap();
        let before = net.clone();
        let mut adam = AdamState::new(&net, AdamConfig::default());
        adam.step(&mut net, &Gradients::zeros_like(&before)).unwrap();
        assert_eq!(net, before);
    }

    fn scalar_net(p: f64) -> Mlp {
        Mlp::from_layers(vec![Layer { w: array![[p]], b: array![0.0] }], OutputActivation::Identity).unwrap()
    }

    fn scalar_grad(g: f64) -> Gradients {
        Gradients { w: vec![array![[g]]], b: vec![array![0.0]] }
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut net = scalar_net(1.0);
        let cfg = AdamConfig::default();
        let mut adam = AdamState::new(&net, cfg);
        adam.step(&mut net, &scalar_grad(0.37)).unwrap();
        let p = net.layers()[0].w[[0, 0]];
        assert!((p - (1.0 - cfg.lr)).abs() < 1e-10);
    }

    #[test]
    fn adam_two_steps_match_recurrence() {
        let cfg = AdamConfig { lr: 0.01, beta1: 0.5, beta2: 0.999, epsilon: 1e-8 };
        let mut net = scalar_net(2.0);
        let mut adam = AdamState::new(&net, cfg);
        adam.step(&mut net, &scalar_grad(0.5)).unwrap();
        adam.step(&mut net, &scalar_grad(-0.25)).unwrap();

        // Hand recurrence.
        let (mut p, mut m, mut v) = (2.0f64, 0.0f64, 0.0f64);
        for (t, g) in [(1, 0.5f64), (2, -0.25)] {
            m = 0.5 * m + 0.5 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.5f64.powi(t));
            let vh = v / (1.0 - 0.999f64.powi(t));
            p -= 0.01 * mh / (vh.sqrt() + 1e-8);
        }
        assert!((net.layers()[0].w[[0, 0]] - p).abs() < 1e-15);
        assert_eq!(adam.step_count(), 2);
    }

    #[test]
    fn adam_rejects_non_finite_gradients() {
        let mut net = scalar_net(1.0);
        let mut adam = AdamState::new(&net, AdamConfig::default());
        assert!(matches!(adam.step(&mut net, &scalar_grad(f64::NAN)), Err(Error::Diverged(_))));
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = Mlp::new(&[3, 7, 2], OutputActivation::Sigmoid, 5).unwrap();
        let json = serde_json::to_string(&net).unwrap();
        let back: Mlp = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
        assert!(serde_json::from_str::<Mlp>(r#"{"dims":[2,1],"output":"identity","weights":[[1.0]],"biases":[[0.0]]}"#).is_err());
    }

    #[test]
    fn training_is_bit_reproducible() {
        let run = || {
            let mut net = Mlp::new(&[2, 6, 1], OutputActivation::Identity, 9).unwrap();
            let mut adam = AdamState::new(&net, AdamConfig::default());
            let x = Array2::from_shape_fn((8, 2), |(i, j)| (i as f64 * 0.3 - j as f64).cos());
            for _ in 0..20 {
                let cache = net.forward_cached(x.view()).unwrap();
                let up = cache.output() - 1.0;
                let (g, _) = net.backward_cached(&cache, up.view()).unwrap();
                adam.step(&mut net, &g).unwrap();
            }
            net.params_flat()
        };
        assert_eq!(run(), run());
    }
}
