//! Continuous piecewise-linear (CPwL) transport between two samples.
//!
//! Given latent samples `z_1, ..., z_n` and data samples `x_1, ..., x_n ∈ ℝ^d`,
//! the latent keys are sorted, `z_(1) < ... < z_(n)`, and a point
//! `z_(i+½) = z_(i) + λ (z_(i+1) - z_(i))` is inserted between neighbours. The
//! generator path
//!
//! * equals `x_1` on `(-∞, z_(1)]`,
//! * moves linearly from `x_i` to `x_{i+1}` on `[z_(i), z_(i+½)]`,
//! * stays at `x_{i+1}` on `[z_(i+½), z_(i+1)]`,
//! * equals `x_n` on `[z_(n-½), ∞)`,
//!
//! so `g(z_(i)) = x_i` exactly. The encoder is built the same way on the first
//! coordinate of the data, so the two maps are inverse bijections between the
//! two samples. Higher-dimensional latent inputs are keyed on their first
//! coordinate only.
//!
//! Two network realizations are provided. [`realize_as_network`] builds a
//! depth-3 network whose ramps `c·clamp(t - z_i, 0, w_i)` saturate exactly in
//! floating point, so the sample points are reproduced to rounding of the
//! output sum. [`realize_as_shallow_network`] is the classical one-hidden-layer
//! hinge expansion `x_1 + Σ c_i (σ(t - z_i) - σ(t - z_(i+½)))`, whose rounding
//! error grows like `ε·|t| / min gap`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::relu_net::{Layer, ReluNetwork};

/// Default placement of the inserted point between neighbouring keys.
pub const DEFAULT_LAMBDA: f64 = 0.5;

fn default_input_dim() -> usize {
    1
}

/// Breakpoints and targets of a CPwL path `ℝ^input_dim → ℝ^d` keyed on the
/// first input coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpwlPath {
    /// `2n - 1` nondecreasing values `z_1, z_{1½}, z_2, ..., z_{n-½}, z_n`.
    pub breakpoints: Vec<f64>,
    /// `n` points, `targets[i]` is the value at `breakpoints[2 i]`.
    pub targets: Vec<Vec<f64>>,
    pub lambda: f64,
    #[serde(default = "default_input_dim")]
    pub input_dim: usize,
}

/// Which samples were matched to which.
///
/// `order[i]` is the index (into the keyed sample) of the `i`-th smallest key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplePairing {
    pub order: Vec<usize>,
    pub sort_key: String,
}

impl CpwlPath {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn output_dim(&self) -> usize {
        self.targets[0].len()
    }

    /// Sorted sample keys `z_(1) < ... < z_(n)`.
    pub fn knots(&self) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints.iter().step_by(2).copied()
    }

    fn knot(&self, i: usize) -> f64 {
        self.breakpoints[2 * i]
    }

    fn midpoint(&self, i: usize) -> f64 {
        self.breakpoints[2 * i + 1]
    }

    /// Value of the path at scalar key `t`.
    pub fn eval_key(&self, t: f64) -> Vec<f64> {
        let n = self.len();
        if n == 1 || t <= self.knot(0) {
            return self.targets[0].clone();
        }
        if t >= self.midpoint(n - 2) {
            return self.targets[n - 1].clone();
        }
        // Largest i with knot(i) <= t; knot(0) < t < midpoint(n - 2) so 0 <= i <= n - 2.
        let (mut lo, mut hi) = (0, n - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if self.knot(mid) <= t {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        let i = lo.min(n - 2);
        let (lo, mid) = (self.knot(i), self.midpoint(i));
        if t >= mid {
            return self.targets[i + 1].clone();
        }
        let s = (t - lo) / (mid - lo);
        self.targets[i]
            .iter()
            .zip(&self.targets[i + 1])
            .map(|(a, b)| (1.0 - s) * a + s * b)
            .collect()
    }

    /// Value at an input point; only the first coordinate is read.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim, x.len())?;
        Ok(self.eval_key(x[0]))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let path: CpwlPath = serde_json::from_str(s)?;
        path.validate()?;
        Ok(path)
    }

    fn validate(&self) -> Result<()> {
        let n = self.targets.len();
        if n == 0 {
            return Err(Error::InvalidInput("path needs at least one target".into()));
        }
        check_dim(2 * n - 1, self.breakpoints.len())?;
        let d = self.targets[0].len();
        for t in &self.targets {
            check_dim(d, t.len())?;
        }
        if self.breakpoints.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput(
                "breakpoints must be nondecreasing".into(),
            ));
        }
        if self
            .knots()
            .collect::<Vec<_>>()
            .windows(2)
            .any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidInput(
                "sample keys must be strictly increasing".into(),
            ));
        }
        check_lambda(self.lambda)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "lambda must lie in (0, 1], got {lambda}"
        )))
    }
}

fn check_points(points: &[Vec<f64>], what: &str) -> Result<usize> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidInput(format!("{what} sample is empty")))?;
    let dim = first.len();
    if dim == 0 {
        return Err(Error::InvalidInput(format!(
            "{what} points must have positive dimension"
        )));
    }
    for p in points {
        check_dim(dim, p.len())?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{what} sample contains a non-finite value"
            )));
        }
    }
    Ok(dim)
}

/// Sorts `keys`, rejecting ties. Returns the sorting permutation.
fn sort_keys(keys: &[f64]) -> Result<Vec<usize>> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]));
    for w in order.windows(2) {
        if keys[w[0]] == keys[w[1]] {
            let (first, second) = (w[0].min(w[1]), w[0].max(w[1]));
            return Err(Error::DuplicateKey {
                value: keys[w[0]],
                first,
                second,
            });
        }
    }
    Ok(order)
}

/// Path through `targets` keyed on the first coordinate of `inputs`:
/// the input with the `i`-th smallest key is sent to `targets[i]`.
fn build_path(
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    lambda: f64,
    what: &str,
) -> Result<(CpwlPath, SamplePairing)> {
    check_lambda(lambda)?;
    let input_dim = check_points(inputs, what)?;
    check_points(targets, "target")?;
    check_dim(inputs.len(), targets.len())?;
    let keys: Vec<f64> = inputs.iter().map(|p| p[0]).collect();
    let order = sort_keys(&keys)?;
    let n = keys.len();
    let mut breakpoints = Vec::with_capacity(2 * n - 1);
    for i in 0..n {
        let k = keys[order[i]];
        breakpoints.push(k);
        if i + 1 < n {
            let next = keys[order[i + 1]];
            breakpoints.push(if lambda == 1.0 {
                next
            } else {
                k + lambda * (next - k)
            });
        }
    }
    let path = CpwlPath {
        breakpoints,
        targets: targets.to_vec(),
        lambda,
        input_dim,
    };
    let pairing = SamplePairing {
        order,
        sort_key: format!("{what} coordinate 1"),
    };
    Ok((path, pairing))
}

/// Generator path sending the `i`-th smallest latent key to `x[i]`.
///
/// `z` holds latent points in `ℝ^k`; only their first coordinate is used.
/// Duplicate keys are rejected.
pub fn build_cpwl_generator(
    z: &[Vec<f64>],
    x: &[Vec<f64>],
    lambda: f64,
) -> Result<(CpwlPath, SamplePairing)> {
    build_path(z, x, lambda, "latent")
}

/// Encoder path sending `x[i]` to `z[i]`, keyed on the first data coordinate.
///
/// Duplicate first coordinates are rejected; re-draw or rotate the data.
pub fn build_cpwl_encoder(
    x: &[Vec<f64>],
    z: &[Vec<f64>],
    lambda: f64,
) -> Result<(CpwlPath, SamplePairing)> {
    let (mut path, pairing) = build_path(x, z, lambda, "data")?;
    path.targets = pairing.order.iter().map(|&i| z[i].clone()).collect();
    Ok((path, pairing))
}

/// Generator and encoder built on the same pair of samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPair {
    pub generator: CpwlPath,
    pub encoder: CpwlPath,
    /// Sorting permutation of the latent sample: `x[i]` is matched with `z[pairing.order[i]]`.
    pub pairing: SamplePairing,
}

impl TransportPair {
    /// Latent point matched with `x[i]`.
    pub fn matched_latent<'a>(&self, z: &'a [Vec<f64>], i: usize) -> &'a [f64] {
        &z[self.pairing.order[i]]
    }

    pub fn networks(&self) -> Result<(ReluNetwork, ReluNetwork)> {
        Ok((
            realize_as_network(&self.generator)?,
            realize_as_network(&self.encoder)?,
        ))
    }
}

/// Builds the generator `g: ℝ^k → ℝ^d` and encoder `e: ℝ^d → ℝ^k` with
/// `g(z_(i)) = x_i` and `e(x_i) = z_(i)`.
pub fn build_transport_pair(z: &[Vec<f64>], x: &[Vec<f64>], lambda: f64) -> Result<TransportPair> {
    let (generator, pairing) = build_cpwl_generator(z, x, lambda)?;
    let matched: Vec<Vec<f64>> = pairing.order.iter().map(|&i| z[i].clone()).collect();
    let (encoder, _) = build_cpwl_encoder(x, &matched, lambda)?;
    Ok(TransportPair {
        generator,
        encoder,
        pairing,
    })
}

fn key_selector(input_dim: usize) -> Vec<f64> {
    let mut row = vec![0.0; input_dim];
    row[0] = 1.0;
    row
}

/// Exact depth-3 ReLU realization of a path.
///
/// Hidden layer 1 computes `p_i = σ(t - z_i)`, hidden layer 2
/// `q_i = σ(w_i - p_i)` with `w_i = z_(i+½) - z_i`, and the output is
/// `x_1 + Σ_i c_i (w_i - q_i)` with slopes `c_i = (x_{i+1} - x_i) / w_i`.
/// Both widths equal `n - 1` (one unit for a constant path).
pub fn realize_as_network(path: &CpwlPath) -> Result<ReluNetwork> {
    path.validate()?;
    let n = path.len();
    let d = path.output_dim();
    let input_dim = path.input_dim;
    if n == 1 {
        let mut out = Layer::zeros(d, 1);
        out.bias.copy_from_slice(&path.targets[0]);
        return ReluNetwork::from_layers(vec![Layer::zeros(1, input_dim), Layer::zeros(1, 1), out]);
    }
    let m = n - 1;
    let selector = key_selector(input_dim);
    let mut first = Layer::zeros(m, input_dim);
    let mut second = Layer::zeros(m, m);
    let mut out = Layer::zeros(d, m);
    let mut offset = vec![0.0; d];
    for i in 0..m {
        let (z, mid) = (path.knot(i), path.midpoint(i));
        let w = mid - z;
        first.weights[i * input_dim..(i + 1) * input_dim].copy_from_slice(&selector);
        first.bias[i] = -z;
        *second.weight_mut(i, i) = -1.0;
        second.bias[i] = w;
        for j in 0..d {
            let c = (path.targets[i + 1][j] - path.targets[i][j]) / w;
            *out.weight_mut(j, i) = -c;
            offset[j] += c * w;
        }
    }
    for j in 0..d {
        out.bias[j] = path.targets[0][j] + offset[j];
    }
    ReluNetwork::from_layers(vec![first, second, out])
}

/// One-hidden-layer hinge realization of a path (width `2(n - 1)`).
pub fn realize_as_shallow_network(path: &CpwlPath) -> Result<ReluNetwork> {
    path.validate()?;
    let n = path.len();
    let d = path.output_dim();
    let input_dim = path.input_dim;
    if n == 1 {
        let mut out = Layer::zeros(d, 1);
        out.bias.copy_from_slice(&path.targets[0]);
        return ReluNetwork::from_layers(vec![Layer::zeros(1, input_dim), out]);
    }
    let m = n - 1;
    let selector = key_selector(input_dim);
    let mut hidden = Layer::zeros(2 * m, input_dim);
    let mut out = Layer::zeros(d, 2 * m);
    for i in 0..m {
        let (z, mid) = (path.knot(i), path.midpoint(i));
        for (r, b) in [(2 * i, -z), (2 * i + 1, -mid)] {
            hidden.weights[r * input_dim..(r + 1) * input_dim].copy_from_slice(&selector);
            hidden.bias[r] = b;
        }
        for j in 0..d {
            let c = (path.targets[i + 1][j] - path.targets[i][j]) / (mid - z);
            *out.weight_mut(j, 2 * i) = c;
            *out.weight_mut(j, 2 * i + 1) = -c;
        }
    }
    out.bias.copy_from_slice(&path.targets[0]);
    ReluNetwork::from_layers(vec![hidden, out])
}

/// Breakpoint budget `(W - d - 1)·⌊(W - d - 1)/(6d)⌋·⌊L/2⌋` of a width-`W`,
/// depth-`L` ReLU network with `d` outputs; zero when `W ≤ d + 1`.
pub fn breakpoint_budget(width: usize, depth: usize, d: usize) -> u64 {
    assert!(d >= 1, "output dimension must be positive");
    if width <= d + 1 {
        return 0;
    }
    let free = (width - d - 1) as u64;
    free * (free / (6 * d as u64)) * (depth as u64 / 2)
}

/// Width/depth sized to carry the `2n - 1` breakpoints of an `n`-sample path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitecturePlan {
    pub width: usize,
    pub depth: usize,
    pub d: usize,
    pub n: usize,
    /// Realized constant `W²L / (d n)`.
    pub c: f64,
    /// Whether `12 ≤ c ≤ 384`.
    pub in_reference_range: bool,
}

impl ArchitecturePlan {
    fn new(width: usize, depth: usize, d: usize, n: usize) -> Self {
        let c = (width * width * depth) as f64 / (d * n) as f64;
        Self {
            width,
            depth,
            d,
            n,
            c,
            in_reference_range: (12.0..=384.0).contains(&c),
        }
    }
}

/// Smallest width at depth 2 whose budget covers `2n - 1` breakpoints.
pub fn capacity_plan(n: usize, d: usize) -> Result<ArchitecturePlan> {
    capacity_plan_bounded(n, d, usize::MAX)
}

/// Like [`capacity_plan`] but with widths capped at `max_width`: depth grows
/// from 2 until some admissible width carries the breakpoints.
pub fn capacity_plan_bounded(n: usize, d: usize, max_width: usize) -> Result<ArchitecturePlan> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidInput("n and d must be positive".into()));
    }
    let need = 2 * n as u64 - 1;
    let min_width = 7 * d + 1;
    if max_width < min_width {
        return Err(Error::InvalidInput(format!(
            "max width {max_width} is below the minimum {min_width}"
        )));
    }
    let mut depth = 2;
    loop {
        if breakpoint_budget(max_width.min(1 << 24), depth, d) >= need {
            // Budget is nondecreasing in width, so bisect.
            let (mut lo, mut hi) = (d + 1, max_width.min(1 << 24));
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if breakpoint_budget(mid, depth, d) >= need {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            return Ok(ArchitecturePlan::new(lo, depth, d, n));
        }
        depth += 2;
        if depth > 1 << 20 {
            return Err(Error::InvalidInput("no architecture found".into()));
        }
    }
}

/// Outcome of [`verify_bijection`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BijectionReport {
    /// `max_i ‖g(z_(i)) - x_i‖`.
    pub generator_error: f64,
    /// `max_i ‖e(x_i) - z_(i)‖`.
    pub encoder_error: f64,
    pub pass: bool,
}

/// Checks that `g` and `e` map the matched samples onto each other.
pub fn verify_bijection(
    g: &ReluNetwork,
    e: &ReluNetwork,
    z: &[Vec<f64>],
    x: &[Vec<f64>],
    pairing: &SamplePairing,
    tol: f64,
) -> Result<BijectionReport> {
    check_dim(x.len(), z.len())?;
    check_dim(x.len(), pairing.order.len())?;
    let mut generator_error: f64 = 0.0;
    let mut encoder_error: f64 = 0.0;
    for (i, xi) in x.iter().enumerate() {
        let zi = &z[pairing.order[i]];
        let gz = g.forward(zi)?;
        check_dim(xi.len(), gz.len())?;
        generator_error = generator_error.max(distance(&gz, xi));
        let ex = e.forward(xi)?;
        check_dim(zi.len(), ex.len())?;
        encoder_error = encoder_error.max(distance(&ex, zi));
    }
    let pass = generator_error <= tol && encoder_error <= tol;
    Ok(BijectionReport {
        generator_error,
        encoder_error,
        pass,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}
