//! Empirical bidirectional minimax problem
//!
//! ```text
//! min_{g, e} max_f  (1/n) Σ f(g(z_i), z_i) - (1/n) Σ f(x_j, e(x_j))
//! ```
//!
//! solved by full-batch alternating gradient steps, and the measurement of
//! the four-term error decomposition on a fitted pair.
//!
//! The discriminator is kept approximately 1-Lipschitz and bounded by two
//! soft penalties. Difference quotients `|f(a) - f(b)| / ‖a - b‖` between
//! random generator/data joint pairs are pushed below 1, and `|f|` below `B`.
//! Both penalties only need first-order gradients.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{discriminator_approx_order_joint, rate_bound, ErrorBudget};
use crate::error::{check_dim, Error, Result};
use crate::ipm::{dudley_distance, joint_pushforward, DiscreteMeasure, JointOrder, LipschitzSpec};
use crate::relu_net::{Gradients, ReluNetwork};

const DIVERGENCE_LIMIT: f64 = 1e6;

/// Sizes, schedule and penalties of a training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub disc_width: usize,
    pub disc_depth: usize,
    pub gen_width: usize,
    pub gen_depth: usize,
    pub enc_width: usize,
    pub enc_depth: usize,
    /// Step size shared by generator and encoder.
    pub lr_gen: f64,
    pub lr_disc: f64,
    pub disc_steps: usize,
    pub outer_steps: usize,
    /// Output clipping level; `None` means `(log n)/√d`.
    pub clip_c: Option<f64>,
    pub seed: u64,
    /// Weight of the Lipschitz difference-quotient penalty.
    pub penalty_weight: f64,
    /// Sup bound `B` enforced softly on the discriminator; `None` means `√2·log n`.
    pub disc_bound: Option<f64>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self::for_problem(64, 1, 1)
    }
}

impl TrainingConfig {
    /// Rate-matched sizing: `W₁L₁ ≥ ⌈√n⌉`, `W₂²L₂ ≥ 12dn`, `W₃²L₃ ≥ 12kn`.
    pub fn for_problem(n: usize, d: usize, k: usize) -> Self {
        let depth = 3;
        let root = (n as f64).sqrt().ceil() as usize;
        let sized = |dim: usize| {
            ((12 * dim.max(1) * n.max(1)) as f64 / depth as f64)
                .sqrt()
                .ceil() as usize
        };
        Self {
            n,
            d,
            k,
            disc_width: root.div_ceil(depth).max(8),
            disc_depth: depth,
            gen_width: sized(d),
            gen_depth: depth,
            enc_width: sized(k),
            enc_depth: depth,
            lr_gen: 0.01,
            lr_disc: 0.02,
            disc_steps: 5,
            outer_steps: 200,
            clip_c: None,
            seed: 0,
            penalty_weight: 10.0,
            disc_bound: None,
        }
    }

    pub fn clip_level(&self) -> f64 {
        self.clip_c
            .unwrap_or_else(|| (self.n.max(2) as f64).ln() / (self.d as f64).sqrt())
    }

    pub fn bound(&self) -> f64 {
        self.disc_bound
            .unwrap_or_else(|| 2f64.sqrt() * (self.n.max(2) as f64).ln())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.k == 0 {
            return Err(Error::InvalidInput("n, d and k must be positive".into()));
        }
        for (name, v) in [
            ("disc_width", self.disc_width),
            ("disc_depth", self.disc_depth),
            ("gen_width", self.gen_width),
            ("gen_depth", self.gen_depth),
            ("enc_width", self.enc_width),
            ("enc_depth", self.enc_depth),
        ] {
            if v == 0 {
                return Err(Error::InvalidInput(format!("{name} must be positive")));
            }
        }
        for (name, v) in [
            ("lr_gen", self.lr_gen),
            ("lr_disc", self.lr_disc),
            ("clip_c", self.clip_level()),
            ("disc_bound", self.bound()),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.penalty_weight >= 0.0 && self.penalty_weight.is_finite()) {
            return Err(Error::InvalidInput(
                "penalty_weight must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Sizing conditions that are not met.
    pub fn sizing_warnings(&self) -> Vec<String> {
        let n = self.n as f64;
        let mut out = Vec::new();
        let root = n.sqrt().ceil();
        if ((self.disc_width * self.disc_depth) as f64) < root {
            out.push(format!(
                "W1*L1 = {} below ceil(sqrt(n)) = {root}",
                self.disc_width * self.disc_depth
            ));
        }
        for (name, w, l, dim) in [
            ("W2^2*L2", self.gen_width, self.gen_depth, self.d),
            ("W3^2*L3", self.enc_width, self.enc_depth, self.k),
        ] {
            let v = (w * w * l) as f64;
            let (lo, hi) = (12.0 * dim as f64 * n, 384.0 * dim as f64 * n);
            if v < lo || v > hi {
                out.push(format!("{name} = {v} outside [{lo}, {hi}]"));
            }
        }
        out
    }
}

/// Networks and objective trace of a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    /// Generator `ℝ^k → ℝ^d` including its clipping layer.
    pub g: ReluNetwork,
    /// Encoder `ℝ^d → ℝ^k` including its clipping layer.
    pub e: ReluNetwork,
    /// Discriminator on `ℝ^{d+k}`.
    pub f: ReluNetwork,
    /// Empirical objective after every outer step.
    pub trace: Vec<f64>,
    /// Word position of the run's random stream when training stopped.
    pub rng_word_pos: u128,
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn check_samples(z: &[Vec<f64>], x: &[Vec<f64>], k: usize, d: usize) -> Result<()> {
    if z.is_empty() || x.is_empty() {
        return Err(Error::InvalidInput("samples must be nonempty".into()));
    }
    for p in z {
        check_dim(k, p.len())?;
    }
    for p in x {
        check_dim(d, p.len())?;
    }
    Ok(())
}

/// `(1/n) Σ f(g(z_i), z_i) - (1/m) Σ f(x_j, e(x_j))`.
pub fn empirical_objective(
    f: &ReluNetwork,
    g: &ReluNetwork,
    e: &ReluNetwork,
    z: &[Vec<f64>],
    x: &[Vec<f64>],
) -> Result<f64> {
    let (k, d) = (g.input_dim(), g.output_dim());
    check_dim(d, e.input_dim())?;
    check_dim(k, e.output_dim())?;
    check_dim(d + k, f.input_dim())?;
    check_dim(1, f.output_dim())?;
    check_samples(z, x, k, d)?;
    let gen: f64 = z
        .iter()
        .map(|zi| f.scalar(&concat(&g.eval(zi), zi)))
        .sum::<f64>()
        / z.len() as f64;
    let data: f64 = x
        .iter()
        .map(|xj| f.scalar(&concat(xj, &e.eval(xj))))
        .sum::<f64>()
        / x.len() as f64;
    Ok(gen - data)
}

fn clip(a: f64, c: f64) -> f64 {
    (a + c).max(0.0) - (a - c).max(0.0) - c
}

/// Derivative of the clipping gadget under the `σ'(0) = 0` convention.
fn clip_slope(a: f64, c: f64) -> f64 {
    if a > -c && a <= c {
        1.0
    } else {
        0.0
    }
}

fn layer_sizes(input: usize, width: usize, depth: usize, output: usize) -> Vec<usize> {
    let mut sizes = vec![input];
    sizes.extend(std::iter::repeat_n(width, depth - 1));
    sizes.push(output);
    sizes
}

struct Run<'a> {
    cfg: &'a TrainingConfig,
    g: ReluNetwork,
    e: ReluNetwork,
    f: ReluNetwork,
    c: f64,
    bound: f64,
    z: &'a [Vec<f64>],
    x: &'a [Vec<f64>],
}

impl Run<'_> {
    fn gen_points(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let raw: Vec<Vec<f64>> = self.z.iter().map(|zi| self.g.eval(zi)).collect();
        let joint = raw
            .iter()
            .zip(self.z)
            .map(|(a, zi)| concat(&a.iter().map(|&v| clip(v, self.c)).collect::<Vec<_>>(), zi))
            .collect();
        (raw, joint)
    }

    fn data_points(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let raw: Vec<Vec<f64>> = self.x.iter().map(|xj| self.e.eval(xj)).collect();
        let joint = raw
            .iter()
            .zip(self.x)
            .map(|(a, xj)| concat(xj, &a.iter().map(|&v| clip(v, self.c)).collect::<Vec<_>>()))
            .collect();
        (raw, joint)
    }

    fn objective(&self) -> f64 {
        let (_, gp) = self.gen_points();
        let (_, dp) = self.data_points();
        mean_value(&self.f, &gp) - mean_value(&self.f, &dp)
    }

    /// Ascent direction for the penalized discriminator objective.
    fn disc_gradient(&self, rng: &mut ChaCha8Rng) -> Gradients {
        let (_, gp) = self.gen_points();
        let (_, dp) = self.data_points();
        let mut grads = Gradients::zeros_like(&self.f);
        disc_objective_gradient(&self.f, &gp, &dp, None, None, &mut grads);
        penalty_gradient(
            &self.f,
            &gp,
            &dp,
            self.cfg.penalty_weight,
            self.bound,
            rng,
            &mut grads,
        );
        grads
    }

    /// Gradients of the objective with respect to generator and encoder.
    fn gen_gradients(&self) -> (Gradients, Gradients) {
        let (d, k) = (self.cfg.d, self.cfg.k);
        let (graw, gp) = self.gen_points();
        let (eraw, dp) = self.data_points();
        let mut scratch = Gradients::zeros_like(&self.f);
        let mut gg = Gradients::zeros_like(&self.g);
        let inv_n = 1.0 / self.z.len() as f64;
        for ((zi, raw), p) in self.z.iter().zip(&graw).zip(&gp) {
            let df = self
                .f
                .backward_accumulate(p, &[inv_n], &mut scratch)
                .expect("checked dims");
            let up: Vec<f64> = (0..d).map(|r| df[r] * clip_slope(raw[r], self.c)).collect();
            self.g
                .backward_accumulate(zi, &up, &mut gg)
                .expect("checked dims");
        }
        let mut ge = Gradients::zeros_like(&self.e);
        let inv_m = 1.0 / self.x.len() as f64;
        for ((xj, raw), p) in self.x.iter().zip(&eraw).zip(&dp) {
            let df = self
                .f
                .backward_accumulate(p, &[inv_m], &mut scratch)
                .expect("checked dims");
            let up: Vec<f64> = (0..k)
                .map(|r| -df[d + r] * clip_slope(raw[r], self.c))
                .collect();
            self.e
                .backward_accumulate(xj, &up, &mut ge)
                .expect("checked dims");
        }
        (gg, ge)
    }

    fn into_state(self, trace: Vec<f64>, rng: &ChaCha8Rng) -> Result<TrainState> {
        let clip_g = ReluNetwork::clipping(self.c, self.cfg.d)?;
        let clip_e = ReluNetwork::clipping(self.c, self.cfg.k)?;
        Ok(TrainState {
            g: ReluNetwork::compose(&clip_g, &self.g)?,
            e: ReluNetwork::compose(&clip_e, &self.e)?,
            f: self.f,
            trace,
            rng_word_pos: rng.get_word_pos(),
        })
    }
}

fn mean_value(f: &ReluNetwork, pts: &[Vec<f64>]) -> f64 {
    pts.iter().map(|p| f.scalar(p)).sum::<f64>() / pts.len() as f64
}

/// Adds `∇(Σ a_i f(p_i) - Σ b_j f(q_j))`, uniform weights unless given.
fn disc_objective_gradient(
    f: &ReluNetwork,
    plus: &[Vec<f64>],
    minus: &[Vec<f64>],
    plus_w: Option<&[f64]>,
    minus_w: Option<&[f64]>,
    acc: &mut Gradients,
) {
    for (i, p) in plus.iter().enumerate() {
        let w = plus_w.map_or(1.0 / plus.len() as f64, |w| w[i]);
        f.backward_accumulate(p, &[w], acc).expect("checked dims");
    }
    for (j, q) in minus.iter().enumerate() {
        let w = minus_w.map_or(1.0 / minus.len() as f64, |w| w[j]);
        f.backward_accumulate(q, &[-w], acc).expect("checked dims");
    }
}

/// Adds the negative gradient of
/// `λ·mean σ(|f(a)-f(b)|/‖a-b‖ - 1)² + mean σ(|f(p)| - B)²`.
fn penalty_gradient(
    f: &ReluNetwork,
    a_pts: &[Vec<f64>],
    b_pts: &[Vec<f64>],
    weight: f64,
    bound: f64,
    rng: &mut ChaCha8Rng,
    acc: &mut Gradients,
) {
    let mut partner: Vec<usize> = (0..b_pts.len()).collect();
    partner.shuffle(rng);
    let pairs = a_pts.len();
    if weight > 0.0 {
        for (i, a) in a_pts.iter().enumerate() {
            let b = &b_pts[partner[i % partner.len()]];
            let dist = a
                .iter()
                .zip(b)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            if dist == 0.0 {
                continue;
            }
            let (fa, fb) = (f.scalar(a), f.scalar(b));
            let excess = (fa - fb).abs() / dist - 1.0;
            if excess > 0.0 {
                let s = -weight * 2.0 * excess * (fa - fb).signum() / (dist * pairs as f64);
                f.backward_accumulate(a, &[s], acc).expect("checked dims");
                f.backward_accumulate(b, &[-s], acc).expect("checked dims");
            }
        }
    }
    let total = (a_pts.len() + b_pts.len()) as f64;
    for p in a_pts.iter().chain(b_pts) {
        let v = f.scalar(p);
        let excess = v.abs() - bound;
        if excess > 0.0 {
            let s = -2.0 * excess * v.signum() / total;
            f.backward_accumulate(p, &[s], acc).expect("checked dims");
        }
    }
}

fn initial_run<'a>(
    cfg: &'a TrainingConfig,
    z: &'a [Vec<f64>],
    x: &'a [Vec<f64>],
    rng: &mut ChaCha8Rng,
) -> Result<Run<'a>> {
    cfg.validate()?;
    check_dim(cfg.n, z.len())?;
    check_dim(cfg.n, x.len())?;
    check_samples(z, x, cfg.k, cfg.d)?;
    let g = ReluNetwork::glorot_uniform(
        &layer_sizes(cfg.k, cfg.gen_width, cfg.gen_depth, cfg.d),
        rng,
    )?;
    let e = ReluNetwork::glorot_uniform(
        &layer_sizes(cfg.d, cfg.enc_width, cfg.enc_depth, cfg.k),
        rng,
    )?;
    let f = ReluNetwork::glorot_uniform(
        &layer_sizes(cfg.d + cfg.k, cfg.disc_width, cfg.disc_depth, 1),
        rng,
    )?;
    Ok(Run {
        cfg,
        g,
        e,
        f,
        c: cfg.clip_level(),
        bound: cfg.bound(),
        z,
        x,
    })
}

/// Initial networks of a run, identical to `train` with zero outer steps.
pub fn initialize(cfg: &TrainingConfig, z: &[Vec<f64>], x: &[Vec<f64>]) -> Result<TrainState> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let run = initial_run(cfg, z, x, &mut rng)?;
    run.into_state(Vec::new(), &rng)
}

/// Alternating full-batch training: `disc_steps` penalized ascent steps on
/// `f`, then one descent step on `g` and `e`, per outer step.
pub fn train(cfg: &TrainingConfig, z: &[Vec<f64>], x: &[Vec<f64>]) -> Result<TrainState> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut run = initial_run(cfg, z, x, &mut rng)?;
    let mut trace = Vec::with_capacity(cfg.outer_steps);
    for step in 0..cfg.outer_steps {
        for _ in 0..cfg.disc_steps {
            let grads = run.disc_gradient(&mut rng);
            run.f.apply_update(&grads, -cfg.lr_disc);
        }
        let (gg, ge) = run.gen_gradients();
        run.g.apply_update(&gg, cfg.lr_gen);
        run.e.apply_update(&ge, cfg.lr_gen);
        let objective = run.objective();
        trace.push(objective);
        if !objective.is_finite() || objective.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Divergence {
                step,
                objective,
                trace,
            });
        }
        log::trace!("step {step}: objective {objective}");
    }
    run.into_state(trace, &rng)
}

/// Upper bound on the ℓ2 Lipschitz constant: product of Frobenius norms.
pub fn lipschitz_upper_bound(net: &ReluNetwork) -> f64 {
    net.layers()
        .iter()
        .map(|l| l.weights.iter().map(|w| w * w).sum::<f64>().sqrt())
        .product()
}

/// Random scalar networks on `ℝ^dim`, each rescaled to be 1-Lipschitz.
pub fn lipschitz_probe_family(
    dim: usize,
    count: usize,
    width: usize,
    depth: usize,
    seed: u64,
) -> Result<Vec<ReluNetwork>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut net = ReluNetwork::glorot_uniform(&layer_sizes(dim, width, depth, 1), &mut rng)?;
        // Random biases so probes are not all positively homogeneous.
        for layer in net.layers_mut() {
            for b in &mut layer.bias {
                *b = rng.random_range(-1.0..1.0);
            }
        }
        let lip = lipschitz_upper_bound(&net);
        if lip > 0.0 {
            net.scale_output(1.0 / lip);
        }
        out.push(net);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionConfig {
    pub probes: usize,
    pub probe_width: usize,
    pub probe_depth: usize,
    pub seed: u64,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            probes: 100,
            probe_width: 16,
            probe_depth: 3,
            seed: 0,
        }
    }
}

/// Measured error decomposition of a fitted pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub budget: ErrorBudget,
    /// Dudley distance between the generator and encoder joints on the fresh samples.
    pub measured: f64,
    /// `measured ≤ budget.total + 1e-6`.
    pub holds: bool,
}

/// Measures E2 on a probe family over the training samples and E3/E4 as
/// Dudley distances between training and fresh joints; E1 is the
/// unit-prefactor order with `W₁L₁ = ⌈√n⌉`.
#[allow(clippy::too_many_arguments)]
pub fn measure_decomposition(
    g: &ReluNetwork,
    e: &ReluNetwork,
    train_z: &[Vec<f64>],
    train_x: &[Vec<f64>],
    fresh_z: &[Vec<f64>],
    fresh_x: &[Vec<f64>],
    bound: f64,
    cfg: &DecompositionConfig,
    extra_probes: &[ReluNetwork],
) -> Result<Decomposition> {
    let (k, d) = (g.input_dim(), g.output_dim());
    check_samples(train_z, train_x, k, d)?;
    check_samples(fresh_z, fresh_x, k, d)?;
    let spec = LipschitzSpec::bounded(bound)?;

    let probes = lipschitz_probe_family(
        d + k,
        cfg.probes,
        cfg.probe_width,
        cfg.probe_depth,
        cfg.seed,
    )?;
    let mut e2 = 0.0f64;
    for f in probes.iter().chain(extra_probes) {
        e2 = e2.max(empirical_objective(f, g, e, train_z, train_x)?.abs());
    }

    let gen_train = joint_pushforward(train_z, g, JointOrder::OutputFirst)?;
    let gen_fresh = joint_pushforward(fresh_z, g, JointOrder::OutputFirst)?;
    let enc_train = joint_pushforward(train_x, e, JointOrder::InputFirst)?;
    let enc_fresh = joint_pushforward(fresh_x, e, JointOrder::InputFirst)?;
    let e3 = dudley_distance(&gen_train, &gen_fresh, &spec)?.value;
    let e4 = dudley_distance(&enc_train, &enc_fresh, &spec)?.value;
    let measured = dudley_distance(&gen_fresh, &enc_fresh, &spec)?.value;

    let n = train_z.len() as f64;
    let e1 = discriminator_approx_order_joint(n.sqrt().ceil(), d, k, n);
    let budget = ErrorBudget::from_terms(e1, e2, e3, e4, rate_bound(n, d, k, 1.0));
    Ok(Decomposition {
        holds: measured <= budget.total + 1e-6,
        measured,
        budget,
    })
}

/// Discriminator used by [`estimate_nn_distance`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscConfig {
    pub width: usize,
    pub depth: usize,
    pub lr: f64,
    pub penalty_weight: f64,
    pub bound: f64,
    pub seed: u64,
}

impl Default for DiscConfig {
    fn default() -> Self {
        Self {
            width: 16,
            depth: 3,
            lr: 0.02,
            penalty_weight: 10.0,
            bound: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnEstimate {
    /// `E_μ f - E_ν f` for the trained discriminator.
    pub raw: f64,
    /// `raw / max(1, Lip_support(f), max|f|/B)`, never above the Dudley distance.
    pub certified: f64,
}

/// Gradient-ascent lower estimate of the neural IPM between two measures.
///
/// The last layer starts at zero, so zero steps give 0. The certified value
/// rescales `f` until it is 1-Lipschitz and bounded by `B` on the combined
/// support, which makes it a lower bound on the Dudley distance.
pub fn estimate_nn_distance(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    cfg: &DiscConfig,
    ascent_steps: usize,
) -> Result<NnEstimate> {
    check_dim(mu.dim(), nu.dim())?;
    if cfg.width == 0 || cfg.depth == 0 || !(cfg.bound > 0.0) || !(cfg.lr > 0.0) {
        return Err(Error::InvalidInput(
            "discriminator config needs positive sizes, bound and step".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut f =
        ReluNetwork::glorot_uniform(&layer_sizes(mu.dim(), cfg.width, cfg.depth, 1), &mut rng)?;
    f.scale_output(0.0);
    let (a, b) = (mu.points(), nu.points());
    for step in 0..ascent_steps {
        let mut grads = Gradients::zeros_like(&f);
        disc_objective_gradient(&f, a, b, Some(mu.weights()), Some(nu.weights()), &mut grads);
        penalty_gradient(
            &f,
            a,
            b,
            cfg.penalty_weight,
            cfg.bound,
            &mut rng,
            &mut grads,
        );
        f.apply_update(&grads, -cfg.lr);
        let v = mu.expectation(&f) - nu.expectation(&f);
        if !v.is_finite() || v.abs() > DIVERGENCE_LIMIT {
            return Err(Error::Divergence {
                step,
                objective: v,
                trace: Vec::new(),
            });
        }
    }
    let raw = mu.expectation(&f) - nu.expectation(&f);
    let pts: Vec<&Vec<f64>> = a.iter().chain(b).collect();
    let vals: Vec<f64> = pts.iter().map(|p| f.scalar(p)).collect();
    let mut scale = 1.0f64;
    for (i, p) in pts.iter().enumerate() {
        scale = scale.max(vals[i].abs() / cfg.bound);
        for j in i + 1..pts.len() {
            let dist = p
                .iter()
                .zip(pts[j])
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            if dist > 0.0 {
                scale = scale.max((vals[i] - vals[j]).abs() / dist);
            }
        }
    }
    Ok(NnEstimate {
        raw,
        certified: raw / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cpwl::{build_transport_pair, DEFAULT_LAMBDA};

    fn points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    }

    fn constant(dim: usize, c: f64) -> ReluNetwork {
        let mut l = crate::relu_net::Layer::zeros(1, dim);
        l.bias[0] = c;
        ReluNetwork::from_layers(vec![l]).unwrap()
    }

    #[test]
    fn constant_discriminator_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (z, x) = (points(&mut rng, 10, 1), points(&mut rng, 10, 2));
        let g = ReluNetwork::glorot_uniform(&[1, 4, 2], &mut rng).unwrap();
        let e = ReluNetwork::glorot_uniform(&[2, 4, 1], &mut rng).unwrap();
        assert_eq!(
            empirical_objective(&constant(3, 2.5), &g, &e, &z, &x).unwrap(),
            0.0
        );
    }

    #[test]
    fn projection_discriminator_hand_computation() {
        // f = first coordinate, g ≡ 0: objective is minus the mean of x₁.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (z, x) = (points(&mut rng, 7, 1), points(&mut rng, 7, 2));
        let mut w = crate::relu_net::Layer::zeros(1, 3);
        w.weights[0] = 1.0;
        let f = ReluNetwork::from_layers(vec![w]).unwrap();
        let g = ReluNetwork::from_layers(vec![crate::relu_net::Layer::zeros(2, 1)]).unwrap();
        let e = ReluNetwork::glorot_uniform(&[2, 3, 1], &mut rng).unwrap();
        let m1 = x.iter().map(|p| p[0]).sum::<f64>() / 7.0;
        assert!((empirical_objective(&f, &g, &e, &z, &x).unwrap() + m1).abs() < 1e-15);
    }

    #[test]
    fn negated_discriminator_negates_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (z, x) = (points(&mut rng, 9, 2), points(&mut rng, 9, 3));
        let g = ReluNetwork::glorot_uniform(&[2, 5, 3], &mut rng).unwrap();
        let e = ReluNetwork::glorot_uniform(&[3, 5, 2], &mut rng).unwrap();
        let f = ReluNetwork::glorot_uniform(&[5, 6, 1], &mut rng).unwrap();
        let mut neg = f.clone();
        neg.scale_output(-1.0);
        let a = empirical_objective(&f, &g, &e, &z, &x).unwrap();
        let b = empirical_objective(&neg, &g, &e, &z, &x).unwrap();
        assert!((a + b).abs() < 1e-14);
    }

    #[test]
    fn objective_rejects_bad_dims() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = ReluNetwork::glorot_uniform(&[1, 4, 2], &mut rng).unwrap();
        let e = ReluNetwork::glorot_uniform(&[2, 4, 1], &mut rng).unwrap();
        let f = ReluNetwork::glorot_uniform(&[4, 4, 1], &mut rng).unwrap();
        let (z, x) = (points(&mut rng, 3, 1), points(&mut rng, 3, 2));
        assert!(empirical_objective(&f, &g, &e, &z, &x).is_err());
    }

    #[test]
    fn constructed_pair_has_zero_objective() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (z, x) = (points(&mut rng, 40, 1), points(&mut rng, 40, 3));
        let pair = build_transport_pair(&z, &x, DEFAULT_LAMBDA).unwrap();
        let (g, e) = pair.networks().unwrap();
        let sorted: Vec<Vec<f64>> = pair.pairing.order.iter().map(|&i| z[i].clone()).collect();
        for f in lipschitz_probe_family(4, 20, 8, 3, 9).unwrap() {
            assert!(empirical_objective(&f, &g, &e, &sorted, &x).unwrap().abs() <= 1e-8);
        }
    }

    #[test]
    fn zero_steps_returns_initial_networks() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (z, x) = (points(&mut rng, 16, 1), points(&mut rng, 16, 2));
        let mut cfg = TrainingConfig::for_problem(16, 2, 1);
        cfg.outer_steps = 0;
        let state = train(&cfg, &z, &x).unwrap();
        assert_eq!(state, initialize(&cfg, &z, &x).unwrap());
        assert!(state.trace.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_clipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (z, x) = (points(&mut rng, 24, 1), points(&mut rng, 24, 2));
        let mut cfg = TrainingConfig::for_problem(24, 2, 1);
        cfg.outer_steps = 15;
        cfg.clip_c = Some(0.7);
        let a = train(&cfg, &z, &x).unwrap();
        let b = train(&cfg, &z, &x).unwrap();
        assert_eq!(
            a.trace.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.trace.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(a, b);
        assert_eq!(a.trace.len(), 15);
        for p in points(&mut rng, 200, 1)
            .iter()
            .map(|p| p.iter().map(|v| v * 50.0).collect::<Vec<_>>())
        {
            assert!(a
                .g
                .forward(&p)
                .unwrap()
                .iter()
                .all(|v| v.abs() <= 0.7 * (1.0 + 1e-12)));
        }
        assert!(a.rng_word_pos > 0);
    }

    #[test]
    fn divergence_is_reported_with_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (z, x) = (points(&mut rng, 8, 1), points(&mut rng, 8, 1));
        let x: Vec<Vec<f64>> = x.iter().map(|p| vec![p[0] * 1e7]).collect();
        let mut cfg = TrainingConfig::for_problem(8, 1, 1);
        cfg.outer_steps = 50;
        cfg.lr_disc = 10.0;
        cfg.penalty_weight = 0.0;
        cfg.disc_bound = Some(1e12);
        match train(&cfg, &z, &x) {
            Err(Error::Divergence { trace, step, .. }) => assert_eq!(trace.len(), step + 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn probe_family_is_lipschitz() {
        let probes = lipschitz_probe_family(3, 10, 6, 3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for f in &probes {
            for _ in 0..50 {
                let (a, b) = (
                    points(&mut rng, 1, 3).remove(0),
                    points(&mut rng, 1, 3).remove(0),
                );
                let dist = a
                    .iter()
                    .zip(&b)
                    .map(|(u, v)| (u - v) * (u - v))
                    .sum::<f64>()
                    .sqrt();
                assert!((f.scalar(&a) - f.scalar(&b)).abs() <= dist * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn identical_fresh_samples_give_zero_stochastic_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (z, x) = (points(&mut rng, 20, 1), points(&mut rng, 20, 2));
        let pair = build_transport_pair(&z, &x, DEFAULT_LAMBDA).unwrap();
        let (g, e) = pair.networks().unwrap();
        let cfg = DecompositionConfig::default();
        let dec = measure_decomposition(&g, &e, &z, &x, &z, &x, 2.0, &cfg, &[]).unwrap();
        assert!(dec.budget.e3_bound.abs() < 1e-12 && dec.budget.e4_bound.abs() < 1e-12);
        assert!(dec.budget.e2_value <= 1e-8);
        assert!(dec.holds);
    }

    #[test]
    fn nn_estimate_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mu = DiscreteMeasure::uniform(points(&mut rng, 12, 2)).unwrap();
        let nu = DiscreteMeasure::uniform(
            points(&mut rng, 12, 2)
                .iter()
                .map(|p| vec![p[0] + 1.0, p[1]])
                .collect(),
        )
        .unwrap();
        let cfg = DiscConfig::default();
        assert_eq!(estimate_nn_distance(&mu, &nu, &cfg, 0).unwrap().raw, 0.0);
        let same = estimate_nn_distance(&mu, &mu, &cfg, 50).unwrap();
        assert!(same.raw.abs() <= 1e-3);
        let est = estimate_nn_distance(&mu, &nu, &cfg, 300).unwrap();
        let dudley = dudley_distance(&mu, &nu, &LipschitzSpec::bounded(cfg.bound).unwrap())
            .unwrap()
            .value;
        assert!(est.certified <= dudley + 1e-9);
        assert!(est.raw > 0.0);
    }
}
