//! Covering numbers, the refined Dudley entropy integral, rate curves and
//! the four-term error budget.
//!
//! Every order-level quantity uses a unit prefactor. Only shapes and ratios
//! of these numbers are meaningful.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};

const QUAD_REL_TOL: f64 = 1e-6;
const QUAD_MAX_EVALS: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyKind {
    /// `(8√(2D)·r/ε)^D · log(16B/ε)` for 1-Lipschitz functions bounded by
    /// `B` on a ball of scale `r = log n` in `ℝ^D`.
    LipschitzExplicit,
    /// `c_d · (r/ε)^D`.
    LipschitzCd,
    /// Piecewise-linear interpolation of `(ε, entropy)` pairs, held constant
    /// outside the tabulated range.
    UserTable(Vec<(f64, f64)>),
}

/// Log covering number `log N(ε, F, ‖·‖_∞)` of a Lipschitz class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyModel {
    pub kind: EntropyKind,
    /// Ambient dimension `D` of the function domain (`d + 1` or `d + k`).
    pub dim: usize,
    /// Sup bound `B`.
    pub bound: f64,
    /// Radius scale `r`, usually `log n`.
    pub log_n: f64,
    pub c_d: f64,
}

impl EntropyModel {
    pub fn explicit(dim: usize, bound: f64, log_n: f64) -> Result<Self> {
        Self {
            kind: EntropyKind::LipschitzExplicit,
            dim,
            bound,
            log_n,
            c_d: 1.0,
        }
        .validated()
    }

    pub fn cd(dim: usize, log_n: f64, c_d: f64) -> Result<Self> {
        Self {
            kind: EntropyKind::LipschitzCd,
            dim,
            bound: 1.0,
            log_n,
            c_d,
        }
        .validated()
    }

    /// Tabulated entropy; `ε` strictly increasing, values nonincreasing and nonnegative.
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        Self {
            kind: EntropyKind::UserTable(points),
            dim: 1,
            bound: 1.0,
            log_n: 1.0,
            c_d: 1.0,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        if self.dim == 0 {
            return Err(Error::InvalidInput(
                "entropy dimension must be positive".into(),
            ));
        }
        for (name, v) in [
            ("bound", self.bound),
            ("log_n", self.log_n),
            ("c_d", self.c_d),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if let EntropyKind::UserTable(t) = &self.kind {
            if t.is_empty() {
                return Err(Error::InvalidInput("entropy table is empty".into()));
            }
            if t.iter()
                .any(|(e, h)| !(*e > 0.0 && e.is_finite() && *h >= 0.0 && h.is_finite()))
            {
                return Err(Error::InvalidInput(
                    "entropy table needs ε > 0 and finite entropy ≥ 0".into(),
                ));
            }
            if t.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 <= w[0].1)) {
                return Err(Error::InvalidInput(
                    "entropy table must have increasing ε and nonincreasing entropy".into(),
                ));
            }
        }
        Ok(self)
    }

    /// Upper end of the range on which the entropy can be positive.
    fn support_end(&self) -> f64 {
        match self.kind {
            EntropyKind::LipschitzExplicit => 16.0 * self.bound,
            _ => f64::INFINITY,
        }
    }

    /// Entropy with the explicit model's log factor clamped to 0 for `ε ≥ 16B`.
    fn eval(&self, eps: f64) -> f64 {
        let d = self.dim as f64;
        match &self.kind {
            EntropyKind::LipschitzExplicit => {
                if eps >= 16.0 * self.bound {
                    return 0.0;
                }
                (8.0 * (2.0 * d).sqrt() * self.log_n / eps).powf(d) * (16.0 * self.bound / eps).ln()
            }
            EntropyKind::LipschitzCd => self.c_d * (self.log_n / eps).powf(d),
            EntropyKind::UserTable(t) => interpolate(t, eps),
        }
    }
}

fn interpolate(t: &[(f64, f64)], x: f64) -> f64 {
    if x <= t[0].0 {
        return t[0].1;
    }
    let last = t[t.len() - 1];
    if x >= last.0 {
        return last.1;
    }
    let k = t.partition_point(|(e, _)| *e <= x);
    let ((x0, y0), (x1, y1)) = (t[k - 1], t[k]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Covering number `(√2·√D·r/ε)^D` of the ball of radius `√D·r` scale in `ℝ^D`.
pub fn covering_number_ball(eps: f64, ambient_dim: usize, radius_scale: f64) -> Result<f64> {
    if !(eps > 0.0 && radius_scale > 0.0) || ambient_dim == 0 {
        return Err(Error::InvalidInput(
            "covering number needs ε > 0, radius > 0, dim ≥ 1".into(),
        ));
    }
    let d = ambient_dim as f64;
    Ok((2f64.sqrt() * d.sqrt() * radius_scale / eps).powf(d))
}

/// Covering entropy of the Lipschitz class at scale `ε`.
///
/// The explicit model is only defined on `0 < ε < 16B`.
pub fn covering_entropy_lipschitz(eps: f64, model: &EntropyModel) -> Result<f64> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "ε must be positive and finite, got {eps}"
        )));
    }
    if eps >= model.support_end() {
        return Err(Error::InvalidInput(format!(
            "ε = {eps} outside (0, 16B) = (0, {}) for the explicit model",
            model.support_end()
        )));
    }
    Ok(model.eval(eps))
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` with relative tolerance `rel_tol`.
pub fn adaptive_simpson(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(
            "quadrature limits must be finite".into(),
        ));
    }
    if a == b {
        return Ok(0.0);
    }
    // A coarse composite rule sets the absolute target.
    let panels = 32;
    let h = (b - a) / panels as f64;
    let evals = std::cell::Cell::new(0usize);
    let eval = |x: f64| {
        evals.set(evals.get() + 1);
        f(x)
    };
    let mut nodes = Vec::with_capacity(2 * panels + 1);
    for i in 0..=2 * panels {
        nodes.push(eval(a + 0.5 * h * i as f64));
    }
    let coarse: f64 = (0..panels)
        .map(|i| h / 6.0 * (nodes[2 * i] + 4.0 * nodes[2 * i + 1] + nodes[2 * i + 2]))
        .sum();
    let target = rel_tol * coarse.abs().max(f64::MIN_POSITIVE);

    struct Segment {
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    }
    let mut stack: Vec<Segment> = (0..panels)
        .map(|i| {
            let (sa, sb) = (a + h * i as f64, a + h * (i + 1) as f64);
            let (fa, fm, fb) = (nodes[2 * i], nodes[2 * i + 1], nodes[2 * i + 2]);
            Segment {
                a: sa,
                b: sb,
                fa,
                fm,
                fb,
                whole: (sb - sa) / 6.0 * (fa + 4.0 * fm + fb),
                tol: target / panels as f64,
                depth: 0,
            }
        })
        .collect();
    let mut total = 0.0;
    while let Some(s) = stack.pop() {
        let m = 0.5 * (s.a + s.b);
        let (lm, rm) = (eval(0.5 * (s.a + m)), eval(0.5 * (m + s.b)));
        if evals.get() > max_evals {
            return Err(Error::Solver(format!(
                "quadrature exceeded {max_evals} evaluations"
            )));
        }
        let left = (m - s.a) / 6.0 * (s.fa + 4.0 * lm + s.fm);
        let right = (s.b - m) / 6.0 * (s.fm + 4.0 * rm + s.fb);
        let delta = left + right - s.whole;
        if delta.abs() <= 15.0 * s.tol || s.depth >= 50 {
            total += left + right + delta / 15.0;
        } else {
            stack.push(Segment {
                a: s.a,
                b: m,
                fa: s.fa,
                fm: lm,
                fb: s.fm,
                whole: left,
                tol: 0.5 * s.tol,
                depth: s.depth + 1,
            });
            stack.push(Segment {
                a: m,
                b: s.b,
                fa: s.fm,
                fm: rm,
                fb: s.fb,
                whole: right,
                tol: 0.5 * s.tol,
                depth: s.depth + 1,
            });
        }
    }
    Ok(total)
}

/// `∫_δ^M √entropy(ε) dε`, integrated in `u = log ε`.
pub fn entropy_integral(model: &EntropyModel, delta: f64, upper: f64) -> Result<f64> {
    let upper = upper.min(model.support_end());
    if delta >= upper {
        return Ok(0.0);
    }
    adaptive_simpson(
        |u| {
            let eps = u.exp();
            model.eval(eps).max(0.0).sqrt() * eps
        },
        delta.ln(),
        upper.ln(),
        QUAD_REL_TOL,
        QUAD_MAX_EVALS,
    )
}

/// `8√(2D)·n^{-1/D}·(log n)^{1+1/D}`, the analytic choice of `δ`.
pub fn analytic_delta(dim: usize, n: f64) -> f64 {
    let d = dim as f64;
    8.0 * (2.0 * d).sqrt() * n.powf(-1.0 / d) * n.ln().powf(1.0 + 1.0 / d)
}

/// 40 log-spaced points in `[M·1e-6, M/2]`.
pub fn default_delta_grid(m: f64) -> Vec<f64> {
    let (lo, hi) = ((m * 1e-6).ln(), (m * 0.5).ln());
    (0..40)
        .map(|i| (lo + (hi - lo) * i as f64 / 39.0).exp())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DudleyBound {
    pub value: f64,
    pub delta: f64,
}

/// `min_δ 4δ + (12/√n)∫_δ^M √entropy(ε) dε` over the grid plus the analytic `δ`.
pub fn refined_dudley_bound(
    model: &EntropyModel,
    m: f64,
    n: u64,
    grid: &[f64],
) -> Result<DudleyBound> {
    if !(m > 0.0 && m.is_finite()) || n == 0 {
        return Err(Error::InvalidInput(
            "refined Dudley bound needs M > 0 and n ≥ 1".into(),
        ));
    }
    if let Some(bad) = grid.iter().find(|&&d| !(d > 0.0 && d < m)) {
        return Err(Error::InvalidInput(format!("δ = {bad} outside (0, M)")));
    }
    let mut deltas = grid.to_vec();
    let analytic = analytic_delta(model.dim, n as f64);
    if analytic > 0.0 && analytic < m {
        deltas.push(analytic);
    }
    if deltas.is_empty() {
        return Err(Error::InvalidInput("δ grid is empty".into()));
    }
    deltas.sort_by(f64::total_cmp);
    let scale = 12.0 / (n as f64).sqrt();
    let mut best = DudleyBound {
        value: f64::INFINITY,
        delta: f64::NAN,
    };
    // Integrate between consecutive grid points from the top down.
    let mut tail = entropy_integral(model, deltas[deltas.len() - 1], m)?;
    for i in (0..deltas.len()).rev() {
        if i + 1 < deltas.len() {
            tail += entropy_integral(model, deltas[i], deltas[i + 1])?;
        }
        let value = 4.0 * deltas[i] + scale * tail;
        if value < best.value {
            best = DudleyBound {
                value,
                delta: deltas[i],
            };
        }
    }
    Ok(best)
}

/// `√d·(W₁L₁)^{-2/(d+1)}·log n`.
pub fn discriminator_approx_order(w1: f64, l1: f64, d: usize, n: f64) -> f64 {
    discriminator_approx_order_joint(w1 * l1, d, 1, n)
}

/// `√d·(W₁L₁)^{-2/(d+k)}·log n` for a discriminator on `ℝ^{d+k}`.
pub fn discriminator_approx_order_joint(w1l1: f64, d: usize, k: usize, n: f64) -> f64 {
    (d as f64).sqrt() * w1l1.powf(-2.0 / (d + k) as f64) * n.ln()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBounds {
    /// `C·n^{-(log n)^δ/d} / log n`.
    pub markov: f64,
    /// `2n·C·n^{-(log n)^δ/d}`.
    pub bad_set: f64,
}

pub fn tail_probability_bound(n: f64, d: usize, delta_exp: f64, c: f64) -> Result<TailBounds> {
    if !(n >= 3.0 && delta_exp > 0.0 && c > 0.0) || d == 0 {
        return Err(Error::InvalidInput(
            "tail bound needs n ≥ 3, δ > 0, C > 0, d ≥ 1".into(),
        ));
    }
    let log_n = n.ln();
    let base = c * (-(log_n.powf(delta_exp) / d as f64) * log_n).exp();
    Ok(TailBounds {
        markov: base / log_n,
        bad_set: 2.0 * n * base,
    })
}

/// `C₀·√d·n^{-1/(d+k)}·(log n)^{1+1/(d+k)}`.
pub fn rate_bound(n: f64, d: usize, k: usize, c0: f64) -> f64 {
    let s = (d + k) as f64;
    c0 * (d as f64).sqrt() * n.powf(-1.0 / s) * n.ln().powf(1.0 + 1.0 / s)
}

/// `min{C₀√d·n^{-1/(d+k)}(log n)^{1+1/(d+k)}, C_d·n^{-1/(d+k)}·log n}`.
pub fn rate_bound_with_cd(n: f64, d: usize, k: usize, c0: f64, c_d: f64) -> f64 {
    let s = (d + k) as f64;
    rate_bound(n, d, k, c0).min(c_d * n.powf(-1.0 / s) * n.ln())
}

/// Bounded-support rate `C₀·√d·n^{-1/(d+1)}·(log n)^{1/(d+1)}`.
pub fn rate_bound_bounded_support(n: f64, d: usize, c0: f64) -> f64 {
    let s = (d + 1) as f64;
    c0 * (d as f64).sqrt() * n.powf(-1.0 / s) * n.ln().powf(1.0 / s)
}

/// `E‖X‖·1{‖X‖ > t}` for `X ~ N(0, σ²I_d)`.
pub fn gaussian_tail_moment(d: usize, threshold: f64, sigma: f64) -> f64 {
    let a = 0.5 * (d as f64 + 1.0);
    let x = 0.5 * (threshold / sigma).powi(2);
    let upper = if x <= 0.0 { 1.0 } else { gamma_ur(a, x) };
    sigma * 2f64.sqrt() * (ln_gamma(a) - ln_gamma(0.5 * d as f64)).exp() * upper
}

/// Network sizes `(W₁L₁, W₂²L₂, W₃²L₃)` of discriminator, generator and encoder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    pub w1l1: f64,
    pub w2sq_l2: f64,
    pub w3sq_l3: f64,
}

impl Architecture {
    /// `W₁L₁ = ⌈√n⌉`, `W₂²L₂ = c·d·n`, `W₃²L₃ = c·k·n`.
    pub fn rate_sized(n: u64, d: usize, k: usize, c: f64) -> Self {
        let n_f = n as f64;
        Self {
            w1l1: n_f.sqrt().ceil(),
            w2sq_l2: c * d as f64 * n_f,
            w3sq_l3: c * k as f64 * n_f,
        }
    }

    fn warnings(&self, n: u64, d: usize, k: usize) -> Vec<String> {
        let n_f = n as f64;
        let mut w = Vec::new();
        if self.w1l1 < n_f.sqrt().ceil() {
            w.push(format!(
                "W1L1 = {} below ceil(sqrt(n)) = {}",
                self.w1l1,
                n_f.sqrt().ceil()
            ));
        }
        for (name, v, dim) in [("W2^2L2", self.w2sq_l2, d), ("W3^2L3", self.w3sq_l3, k)] {
            let (lo, hi) = (12.0 * dim as f64 * n_f, 384.0 * dim as f64 * n_f);
            if !(lo..=hi).contains(&v) {
                w.push(format!("{name} = {v} outside [{lo}, {hi}]"));
            }
        }
        w
    }
}

/// Four-term bound `2·E1 + E2 + E3 + E4` on the joint Dudley distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub e1_bound: f64,
    pub e2_value: f64,
    pub e3_bound: f64,
    pub e4_bound: f64,
    pub total: f64,
    pub rate_prediction: f64,
    /// All bounds carry unit prefactors.
    pub order_level: bool,
    pub warnings: Vec<String>,
}

impl ErrorBudget {
    pub fn from_terms(e1: f64, e2: f64, e3: f64, e4: f64, rate_prediction: f64) -> Self {
        Self {
            e1_bound: e1,
            e2_value: e2,
            e3_bound: e3,
            e4_bound: e4,
            total: 2.0 * e1 + e2 + e3 + e4,
            rate_prediction,
            order_level: true,
            warnings: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticModel {
    Explicit,
    Cd,
}

/// Error budget for sample size `n` with `B` the sup bound of the evaluation class.
///
/// E1 is the discriminator order on `ℝ^{d+k}`; E3 = E4 is the refined Dudley
/// bound with `M = B` and radius scale `log n`.
pub fn error_budget(
    n: u64,
    d: usize,
    k: usize,
    bound: f64,
    arch: Architecture,
    measured_e2: f64,
    model: StochasticModel,
) -> Result<ErrorBudget> {
    if n < 2 || d == 0 || k == 0 {
        return Err(Error::InvalidInput(
            "error budget needs n ≥ 2, d ≥ 1, k ≥ 1".into(),
        ));
    }
    if !(measured_e2 >= 0.0 && measured_e2.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "measured E2 must be finite and ≥ 0, got {measured_e2}"
        )));
    }
    let n_f = n as f64;
    let log_n = n_f.ln();
    let entropy = match model {
        StochasticModel::Explicit => EntropyModel::explicit(d + k, bound, log_n)?,
        StochasticModel::Cd => EntropyModel::cd(d + k, log_n, 1.0)?,
    };
    let e1 = discriminator_approx_order_joint(arch.w1l1, d, k, n_f);
    let e3 = refined_dudley_bound(&entropy, bound, n, &default_delta_grid(bound))?.value;
    let mut budget = ErrorBudget::from_terms(e1, measured_e2, e3, e3, rate_bound(n_f, d, k, 1.0));
    budget.warnings = arch.warnings(n, d, k);
    Ok(budget)
}
