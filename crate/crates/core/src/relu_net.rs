//! Dense feedforward ReLU networks.
//!
//! A network with affine layers `(A_1, b_1), ..., (A_L, b_L)` computes
//!
//! ```text
//! x -> A_L σ(A_{L-1} ··· σ(A_1 x + b_1) ··· + b_{L-1}) + b_L
//! ```
//!
//! with `σ(t) = max(t, 0)` applied after every layer except the last.
//! Width is the largest row count over the layers and depth counts every
//! affine layer, output layer included.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[inline]
fn relu(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

/// One affine map `x -> W x + b`, weights stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    pub fn new(rows: usize, cols: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(
                "layer must have at least one row and column".into(),
            ));
        }
        check_dim(rows * cols, weights.len())?;
        check_dim(rows, bias.len())?;
        Ok(Self { weights, bias })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            weights: vec![0.0; rows * cols],
            bias: vec![0.0; rows],
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.bias.len()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.weights.len() / self.bias.len()
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.cols() + col]
    }

    #[inline]
    pub fn weight_mut(&mut self, row: usize, col: usize) -> &mut f64 {
        let cols = self.cols();
        &mut self.weights[row * cols + col]
    }

    fn apply_into(&self, x: &[f64], out: &mut Vec<f64>) {
        let cols = self.cols();
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(cols)
                .zip(&self.bias)
                .map(|(row, b)| {
                    let mut acc = 0.0;
                    for (w, xi) in row.iter().zip(x) {
                        acc += w * xi;
                    }
                    acc + b
                }),
        );
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkRepr {
    input_dim: usize,
    output_dim: usize,
    layers: Vec<Layer>,
}

/// Feedforward ReLU network with explicit weights.
///
/// Networks are immutable values once built; training code mutates a copy
/// through [`ReluNetwork::layers_mut`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkRepr", into = "NetworkRepr")]
pub struct ReluNetwork {
    input_dim: usize,
    output_dim: usize,
    layers: Vec<Layer>,
}

impl TryFrom<NetworkRepr> for ReluNetwork {
    type Error = Error;

    fn try_from(repr: NetworkRepr) -> Result<Self> {
        for layer in &repr.layers {
            if layer.bias.is_empty() || layer.weights.len() % layer.bias.len() != 0 {
                return Err(Error::InvalidInput(format!(
                    "layer has {} weights for {} rows",
                    layer.weights.len(),
                    layer.bias.len()
                )));
            }
        }
        let net = ReluNetwork::from_layers(repr.layers)?;
        check_dim(repr.input_dim, net.input_dim)?;
        check_dim(repr.output_dim, net.output_dim)?;
        Ok(net)
    }
}

impl From<ReluNetwork> for NetworkRepr {
    fn from(net: ReluNetwork) -> Self {
        NetworkRepr {
            input_dim: net.input_dim,
            output_dim: net.output_dim,
            layers: net.layers,
        }
    }
}

/// Width, depth and parameter count of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub width: usize,
    pub depth: usize,
    pub params: usize,
}

/// Parameter and input gradients returned by [`ReluNetwork::backward`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    /// Same shapes as the network layers.
    pub layers: Vec<Layer>,
    pub input: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &ReluNetwork) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer::zeros(l.rows(), l.cols()))
                .collect(),
            input: vec![0.0; net.input_dim],
        }
    }

    /// `self += scale * other`.
    pub fn accumulate(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += scale * y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += scale * y;
            }
        }
        for (x, y) in self.input.iter_mut().zip(&other.input) {
            *x += scale * y;
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .map(|g| g * g)
            .sum()
    }
}

impl ReluNetwork {
    /// Builds a network from its affine layers, checking that dimensions chain
    /// and every entry is finite.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::InvalidInput("network needs at least one layer".into()))?;
        let input_dim = first.cols();
        for pair in layers.windows(2) {
            check_dim(pair[0].rows(), pair[1].cols())?;
        }
        if layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput("network entries must be finite".into()));
        }
        let output_dim = layers.last().map(Layer::rows).unwrap_or(0);
        Ok(Self {
            input_dim,
            output_dim,
            layers,
        })
    }

    /// Single affine layer `x -> x` on `ℝ^dim`.
    pub fn identity(dim: usize) -> Result<Self> {
        let mut layer = Layer::zeros(dim, dim);
        for i in 0..dim {
            *layer.weight_mut(i, i) = 1.0;
        }
        Self::from_layers(vec![layer])
    }

    /// Coordinatewise clipping `ℓ(a) = σ(a + c) - σ(a - c) - c`, which equals
    /// `a` on `[-c, c]` and saturates at `±c` outside.
    pub fn clipping(c: f64, dim: usize) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "clipping constant must be positive, got {c}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidInput(
                "clipping dimension must be positive".into(),
            ));
        }
        let mut hidden = Layer::zeros(2 * dim, dim);
        let mut out = Layer::zeros(dim, 2 * dim);
        for i in 0..dim {
            *hidden.weight_mut(2 * i, i) = 1.0;
            hidden.bias[2 * i] = c;
            *hidden.weight_mut(2 * i + 1, i) = 1.0;
            hidden.bias[2 * i + 1] = -c;
            *out.weight_mut(i, 2 * i) = 1.0;
            *out.weight_mut(i, 2 * i + 1) = -1.0;
            out.bias[i] = -c;
        }
        Self::from_layers(vec![hidden, out])
    }

    /// Randomly initialized network with the given layer sizes
    /// (`sizes[0]` is the input dimension, the last entry the output dimension).
    ///
    /// Weights are drawn uniformly from `±sqrt(6 / (fan_in + fan_out))`, biases start at zero.
    pub fn glorot_uniform<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::InvalidInput(
                "need at least input and output sizes".into(),
            ));
        }
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let weights = (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect();
                Layer::new(fan_out, fan_in, weights, vec![0.0; fan_out])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_layers(layers)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access for optimizers. Shapes must not be changed.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn dims(&self) -> Dims {
        Dims {
            width: self.layers.iter().map(Layer::rows).max().unwrap_or(0),
            depth: self.layers.len(),
            params: self
                .layers
                .iter()
                .map(|l| l.weights.len() + l.bias.len())
                .sum(),
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim, x.len())?;
        Ok(self.eval(x))
    }

    /// Forward pass without the dimension check; callers guarantee `x.len() == input_dim`.
    pub(crate) fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply_into(&cur, &mut next);
            if i < last {
                next.iter_mut().for_each(|v| *v = relu(*v));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Output of a scalar network. Panics if `output_dim != 1` or on a
    /// dimension mismatch; intended for discriminators.
    pub fn scalar(&self, x: &[f64]) -> f64 {
        assert_eq!(
            self.output_dim, 1,
            "scalar() needs a one-dimensional output"
        );
        assert_eq!(self.input_dim, x.len(), "input dimension mismatch");
        self.eval(x)[0]
    }

    /// Reverse-mode gradient of `upstream · forward(x)` with respect to every
    /// weight, bias and input coordinate. The ReLU derivative at 0 is taken as 0.
    pub fn backward(&self, x: &[f64], upstream: &[f64]) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        grads.input = self.backward_accumulate(x, upstream, &mut grads)?;
        Ok(grads)
    }

    /// Adds the parameter gradients of `upstream · net(x)` into `acc` and
    /// returns the input gradient; `acc.input` is left untouched.
    pub fn backward_accumulate(
        &self,
        x: &[f64],
        upstream: &[f64],
        acc: &mut Gradients,
    ) -> Result<Vec<f64>> {
        check_dim(self.input_dim, x.len())?;
        check_dim(self.output_dim, upstream.len())?;

        // Inputs to each layer (post-activation of the previous one).
        let last = self.layers.len() - 1;
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply_into(&cur, &mut z);
            inputs.push(cur);
            cur = if i < last {
                z.iter().map(|&v| relu(v)).collect()
            } else {
                Vec::new()
            };
            pre.push(z);
        }

        let mut delta = upstream.to_vec();
        for i in (0..self.layers.len()).rev() {
            if i < last {
                for (d, z) in delta.iter_mut().zip(&pre[i]) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let layer = &self.layers[i];
            let cols = layer.cols();
            let g = &mut acc.layers[i];
            let mut back = vec![0.0; cols];
            for (r, &dr) in delta.iter().enumerate() {
                if dr == 0.0 {
                    continue;
                }
                g.bias[r] += dr;
                let row = &layer.weights[r * cols..(r + 1) * cols];
                let grow = &mut g.weights[r * cols..(r + 1) * cols];
                for c in 0..cols {
                    grow[c] += dr * inputs[i][c];
                    back[c] += dr * row[c];
                }
            }
            delta = back;
        }
        Ok(delta)
    }

    /// Multiplies the output layer by `s`.
    pub fn scale_output(&mut self, s: f64) {
        let last = self.layers.last_mut().expect("at least one layer");
        last.weights.iter_mut().for_each(|w| *w *= s);
        last.bias.iter_mut().for_each(|b| *b *= s);
    }

    /// `self -= step * grads` on every parameter.
    pub fn apply_update(&mut self, grads: &Gradients, step: f64) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in l.weights.iter_mut().zip(&g.weights) {
                *w -= step * gw;
            }
            for (b, gb) in l.bias.iter_mut().zip(&g.bias) {
                *b -= step * gb;
            }
        }
    }

    /// Network computing `outer(inner(x))`.
    ///
    /// The junction is routed through `y = σ(y) - σ(-y)` so that depth adds
    /// exactly; width becomes `max(width(outer), width(inner), 2 * inner.output_dim)`.
    pub fn compose(outer: &ReluNetwork, inner: &ReluNetwork) -> Result<ReluNetwork> {
        check_dim(outer.input_dim, inner.output_dim)?;
        let m = inner.output_dim;
        let mut layers: Vec<Layer> = inner.layers[..inner.layers.len() - 1].to_vec();

        let tail = inner.layers.last().expect("non-empty");
        let cols = tail.cols();
        let mut split = Layer::zeros(2 * m, cols);
        for r in 0..m {
            for c in 0..cols {
                let w = tail.weight(r, c);
                *split.weight_mut(r, c) = w;
                *split.weight_mut(m + r, c) = -w;
            }
            split.bias[r] = tail.bias[r];
            split.bias[m + r] = -tail.bias[r];
        }
        layers.push(split);

        let head = &outer.layers[0];
        let rows = head.rows();
        let mut merged = Layer::zeros(rows, 2 * m);
        for r in 0..rows {
            for c in 0..m {
                let w = head.weight(r, c);
                *merged.weight_mut(r, c) = w;
                *merged.weight_mut(r, m + c) = -w;
            }
        }
        merged.bias.copy_from_slice(&head.bias);
        layers.push(merged);
        layers.extend(outer.layers[1..].iter().cloned());
        ReluNetwork::from_layers(layers)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Scalar test functions evaluated on points of a common ambient space.
pub trait ScalarFunction {
    fn value(&self, x: &[f64]) -> f64;
}

impl ScalarFunction for ReluNetwork {
    fn value(&self, x: &[f64]) -> f64 {
        self.scalar(x)
    }
}

impl<F: Fn(&[f64]) -> f64> ScalarFunction for F {
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(w: f64, b: f64) -> ReluNetwork {
        ReluNetwork::from_layers(vec![Layer::new(1, 1, vec![w], vec![b]).unwrap()]).unwrap()
    }

    fn relu_unit() -> ReluNetwork {
        ReluNetwork::from_layers(vec![
            Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap(),
            Layer::new(1, 1, vec![1.0], vec![0.0]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn identity_forward() {
        let net = ReluNetwork::identity(2).unwrap();
        assert_eq!(net.forward(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
    }

    #[test]
    fn single_hidden_unit_is_relu() {
        let net = relu_unit();
        assert_eq!(net.forward(&[-2.0]).unwrap(), vec![0.0]);
        assert_eq!(net.forward(&[2.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn clipping_values() {
        let clip2 = ReluNetwork::clipping(2.0, 1).unwrap();
        assert_eq!(clip2.forward(&[5.0]).unwrap(), vec![2.0]);
        assert_eq!(clip2.forward(&[0.0]).unwrap(), vec![0.0]);
        assert_eq!(clip2.forward(&[-7.0]).unwrap(), vec![-2.0]);
        let clip1 = ReluNetwork::clipping(1.0, 1).unwrap();
        assert_eq!(clip1.forward(&[0.5]).unwrap(), vec![0.5]);
    }

    #[test]
    fn clipping_rejects_nonpositive_constant() {
        assert!(ReluNetwork::clipping(0.0, 1).is_err());
        assert!(ReluNetwork::clipping(-1.0, 2).is_err());
    }

    #[test]
    fn clipping_on_dyadic_grid_is_exact() {
        let c = 2.0;
        let clip = ReluNetwork::clipping(c, 1).unwrap();
        for i in -64..=64 {
            let a = i as f64 / 8.0;
            let out = clip.forward(&[a]).unwrap()[0];
            assert_eq!(out, a.clamp(-c, c), "a = {a}");
        }
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let net = ReluNetwork::identity(2).unwrap();
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(net.backward(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn from_layers_rejects_broken_chain_and_nan() {
        let a = Layer::zeros(3, 2);
        let b = Layer::zeros(1, 2);
        assert!(ReluNetwork::from_layers(vec![a, b]).is_err());
        let bad = Layer::new(1, 1, vec![f64::NAN], vec![0.0]).unwrap();
        assert!(ReluNetwork::from_layers(vec![bad]).is_err());
    }

    #[test]
    fn linear_backward() {
        let net = single(2.0, 0.0);
        let g = net.backward(&[3.0], &[1.0]).unwrap();
        assert_eq!(g.layers[0].weights, vec![3.0]);
        assert_eq!(g.layers[0].bias, vec![1.0]);
        assert_eq!(g.input, vec![2.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = ReluNetwork::glorot_uniform(&[3, 5, 4, 2], &mut rng).unwrap();
        let g = net.backward(&[0.3, -1.0, 2.0], &[0.0, 0.0]).unwrap();
        assert_eq!(g.squared_norm(), 0.0);
        assert!(g.input.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn relu_derivative_at_kink_is_zero() {
        let net = relu_unit();
        let g = net.backward(&[0.0], &[1.0]).unwrap();
        assert_eq!(g.input, vec![0.0]);
    }

    #[test]
    fn dims_counts() {
        let id = ReluNetwork::identity(2).unwrap();
        assert_eq!(
            id.dims(),
            Dims {
                width: 2,
                depth: 1,
                params: 6
            }
        );
        let clip = ReluNetwork::clipping(1.0, 1).unwrap();
        assert_eq!(
            clip.dims(),
            Dims {
                width: 2,
                depth: 2,
                params: 7
            }
        );
    }

    #[test]
    fn compose_depth_and_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = ReluNetwork::glorot_uniform(&[2, 4, 2], &mut rng).unwrap();
        let b = ReluNetwork::glorot_uniform(&[1, 3, 3, 2], &mut rng).unwrap();
        assert_eq!((a.dims().width, a.dims().depth), (4, 2));
        assert_eq!((b.dims().width, b.dims().depth), (3, 3));
        let ab = ReluNetwork::compose(&a, &b).unwrap();
        assert_eq!((ab.dims().width, ab.dims().depth), (4, 5));
    }

    #[test]
    fn compose_identity_matches_inner() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = ReluNetwork::glorot_uniform(&[3, 6, 2], &mut rng).unwrap();
        let id = ReluNetwork::identity(2).unwrap();
        let c = ReluNetwork::compose(&id, &net).unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (y, z) = (net.forward(&x).unwrap(), c.forward(&x).unwrap());
            for (a, b) in y.iter().zip(&z) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
            }
        }
    }

    #[test]
    fn clipping_is_idempotent_under_composition() {
        let clip = ReluNetwork::clipping(1.5, 1).unwrap();
        let twice = ReluNetwork::compose(&clip, &clip).unwrap();
        for i in -40..=40 {
            let a = i as f64 / 8.0;
            assert_eq!(twice.forward(&[a]).unwrap(), clip.forward(&[a]).unwrap());
        }
    }

    #[test]
    fn clip_after_scale() {
        let scale = single(3.0, 0.0);
        let clip = ReluNetwork::clipping(1.0, 1).unwrap();
        let c = ReluNetwork::compose(&clip, &scale).unwrap();
        assert_eq!(c.forward(&[1.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = ReluNetwork::glorot_uniform(&[4, 7, 3], &mut rng).unwrap();
        let back = ReluNetwork::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(net, back);
        let v: serde_json::Value = serde_json::from_str(&net.to_json().unwrap()).unwrap();
        assert_eq!(v["input_dim"], 4);
        assert_eq!(v["output_dim"], 3);
        assert_eq!(v["layers"][0]["weights"].as_array().unwrap().len(), 28);
    }

    #[test]
    fn json_rejects_inconsistent_dims() {
        let s =
            r#"{"input_dim":2,"output_dim":1,"layers":[{"weights":[1.0,2.0,3.0],"bias":[0.0]}]}"#;
        assert!(ReluNetwork::from_json(s).is_err());
    }

    proptest! {
        #[test]
        fn clipping_bounds_and_identity_band(a in -100.0f64..100.0, c in 0.01f64..50.0) {
            let clip = ReluNetwork::clipping(c, 1).unwrap();
            let out = clip.forward(&[a]).unwrap()[0];
            prop_assert!(out.abs() <= c + 4.0 * f64::EPSILON * (a.abs() + c));
            if a.abs() <= c {
                prop_assert!((out - a).abs() <= 8.0 * f64::EPSILON * c);
            }
        }

        #[test]
        fn bias_free_networks_are_positively_homogeneous(seed in 0u64..1000, lambda in 0.01f64..20.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let net = ReluNetwork::glorot_uniform(&[3, 8, 5, 2], &mut rng).unwrap();
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let scaled: Vec<f64> = x.iter().map(|v| v * lambda).collect();
            let (a, b) = (net.forward(&x).unwrap(), net.forward(&scaled).unwrap());
            for (u, v) in a.iter().zip(&b) {
                prop_assert!((lambda * u - v).abs() <= 1e-12 * (1.0 + v.abs()));
            }
        }

        #[test]
        fn compose_depth_adds(seed in 0u64..500) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let depth_a = rng.random_range(1..4usize);
            let depth_b = rng.random_range(1..4usize);
            let mut sizes_a = vec![2];
            sizes_a.extend((0..depth_a).map(|_| rng.random_range(1..6usize)));
            let mut sizes_b = vec![3];
            sizes_b.extend((0..depth_b - 1).map(|_| rng.random_range(1..6usize)));
            sizes_b.push(2);
            let a = ReluNetwork::glorot_uniform(&sizes_a, &mut rng).unwrap();
            let b = ReluNetwork::glorot_uniform(&sizes_b, &mut rng).unwrap();
            let ab = ReluNetwork::compose(&a, &b).unwrap();
            prop_assert_eq!(ab.dims().depth, a.dims().depth + b.dims().depth);
        }
    }
}
