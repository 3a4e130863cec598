//! Discrete measures and exact integral probability metrics.
//!
//! For discrete `μ = Σ a_i δ_{u_i}` and `ν = Σ b_j δ_{v_j}` the Dudley distance
//!
//! ```text
//! d(μ, ν) = sup { Σ a_i f(u_i) - Σ b_j f(v_j) : f L-Lipschitz, |f| ≤ B }
//! ```
//!
//! only depends on the values of `f` on the `p + q` support points. Any
//! function on the support that is `L`-Lipschitz and bounded by `B` there
//! extends to all of `ℝ^m` with the same constants (McShane extension
//! `min_y f(y) + L‖x - y‖`, then clamped to `[-B, B]`), so the finite
//! problem is exact.
//!
//! Up to an additive constant, which cancels between two probability
//! measures, such `f` are exactly the functions that are 1-Lipschitz for
//! the truncated metric `ρ(x, y) = min(L‖x - y‖, 2B)`. Kantorovich duality
//! then turns the sup into a transportation problem with cost `ρ`, which is
//! how [`dudley_distance`] computes it. [`dudley_distance_potential_lp`]
//! solves the potential LP directly and is kept for small cross-checks.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::lp::{self, LpStatus, SimplexOptions};
use crate::relu_net::{ReluNetwork, ScalarFunction};
use crate::transport;

const WEIGHT_TOLERANCE: f64 = 1e-12;

/// Finitely supported probability measure on `ℝ^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Weighted measure; weights must be nonnegative and sum to 1 within `1e-12`.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput(
                "measure needs at least one atom".into(),
            ));
        }
        check_dim(points.len(), weights.len())?;
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput(
                "points must have positive dimension".into(),
            ));
        }
        for p in &points {
            check_dim(dim, p.len())?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite coordinate".into()));
            }
        }
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidInput(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { points, weights })
    }

    /// Empirical measure with weight `1/n` on each point.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n.max(1) as f64; n])
    }

    /// Weighted measure from unnormalized nonnegative weights.
    pub fn normalized(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidInput(
                "weights must have a positive finite sum".into(),
            ));
        }
        Self::new(points, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Image under `x ↦ s·x`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| p.iter().map(|v| v * s).collect())
                .collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn expectation<F: ScalarFunction + ?Sized>(&self, f: &F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f.value(p))
            .sum()
    }

    /// Largest Euclidean distance between two atoms of `self` and `other` combined.
    pub fn joint_diameter(&self, other: &Self) -> f64 {
        let all: Vec<&Vec<f64>> = self.points.iter().chain(&other.points).collect();
        let mut best = 0.0f64;
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                best = best.max(euclidean(a, b));
            }
        }
        best
    }
}

/// Function class constants: Lipschitz constant `L`, sup bound `B`, and the
/// radius of the ball the class is restricted to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzSpec {
    pub lip_constant: f64,
    pub bound: f64,
    pub domain_radius: f64,
}

impl LipschitzSpec {
    pub fn new(lip_constant: f64, bound: f64, domain_radius: f64) -> Result<Self> {
        for (name, v) in [
            ("lip_constant", lip_constant),
            ("bound", bound),
            ("domain_radius", domain_radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            lip_constant,
            bound,
            domain_radius,
        })
    }

    /// 1-Lipschitz class with `B` equal to the restriction radius.
    pub fn with_radius(domain_radius: f64) -> Result<Self> {
        Self::new(1.0, domain_radius, domain_radius)
    }

    /// 1-Lipschitz class bounded by `B`; the radius is set to `B`.
    pub fn bounded(bound: f64) -> Result<Self> {
        Self::new(1.0, bound, bound)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverStatus {
    Optimal,
    IterationLimit,
}

/// Optimality certificate attached to an [`IpmResult`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// Optimal test function on the support of `μ` followed by the support of `ν`.
    Potential(Vec<f64>),
    /// Optimal coupling as `(i, j, mass)` triples.
    Plan(Vec<(usize, usize, f64)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpmResult {
    pub value: f64,
    pub certificate: Certificate,
    pub status: SolverStatus,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_same_dim(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    check_dim(mu.dim(), nu.dim())
}

fn cost_matrix(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    ground: impl Fn(f64) -> f64,
) -> Vec<f64> {
    let mut cost = Vec::with_capacity(mu.len() * nu.len());
    for u in &mu.points {
        for v in &nu.points {
            cost.push(ground(euclidean(u, v)));
        }
    }
    cost
}

/// Exact Dudley distance between two discrete measures.
///
/// The certificate is an optimal potential `f` with `|f| ≤ B`, `f`
/// `L`-Lipschitz on the support and `Σ a_i f(u_i) - Σ b_j f(v_j) = value`.
pub fn dudley_distance(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    spec: &LipschitzSpec,
) -> Result<IpmResult> {
    check_same_dim(mu, nu)?;
    let (lip, cap) = (spec.lip_constant, 2.0 * spec.bound);
    let cost = cost_matrix(mu, nu, |r| (lip * r).min(cap));
    let sol = transport::solve(&mu.weights, &nu.weights, &cost)?;
    let q = nu.len();

    // c-transform of the column duals: f(w) = min_j ρ(w, v_j) - ψ_j is
    // 1-Lipschitz for ρ and attains the optimum.
    let rho = |a: &[f64], b: &[f64]| (lip * euclidean(a, b)).min(cap);
    let ctrans = |w: &[f64]| {
        nu.points
            .iter()
            .zip(&sol.col_potential)
            .map(|(v, psi)| rho(w, v) - psi)
            .fold(f64::INFINITY, f64::min)
    };
    let mut potential: Vec<f64> = mu
        .points
        .iter()
        .chain(&nu.points)
        .map(|w| ctrans(w))
        .collect();
    let (lo, hi) = potential
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let shift = 0.5 * (lo + hi);
    potential.iter_mut().for_each(|v| *v -= shift);
    debug_assert_eq!(potential.len(), mu.len() + q);

    Ok(IpmResult {
        value: sol.cost.max(0.0),
        certificate: Certificate::Potential(potential),
        status: SolverStatus::Optimal,
    })
}

/// Dudley distance from the potential LP with all-pairs Lipschitz constraints.
///
/// Variables are `g = f + B ∈ [0, 2B]` on the `p + q` support points. The
/// constraint count grows like `(p + q)²`, so this is meant for small
/// supports and for cross-checking [`dudley_distance`].
pub fn dudley_distance_potential_lp(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    spec: &LipschitzSpec,
) -> Result<IpmResult> {
    check_same_dim(mu, nu)?;
    let pts: Vec<&Vec<f64>> = mu.points.iter().chain(&nu.points).collect();
    let n = pts.len();
    let mut c = vec![0.0; n];
    for (i, a) in mu.weights.iter().enumerate() {
        c[i] += a;
    }
    for (j, b) in nu.weights.iter().enumerate() {
        c[mu.len() + j] -= b;
    }
    let mut rows = Vec::with_capacity(n * n);
    let mut rhs = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            if k != l {
                let mut row = vec![0.0; n];
                row[k] = 1.0;
                row[l] = -1.0;
                rows.push(row);
                rhs.push(spec.lip_constant * euclidean(pts[k], pts[l]));
            }
        }
        let mut row = vec![0.0; n];
        row[k] = 1.0;
        rows.push(row);
        rhs.push(2.0 * spec.bound);
    }
    let sol = lp::maximize(&c, &rows, &rhs, SimplexOptions::default())?;
    let status = match sol.status {
        LpStatus::Optimal => SolverStatus::Optimal,
        LpStatus::IterationLimit => SolverStatus::IterationLimit,
        LpStatus::Unbounded => return Err(Error::Solver("potential LP reported unbounded".into())),
    };
    let potential = sol.x.iter().map(|g| g - spec.bound).collect();
    Ok(IpmResult {
        value: sol.objective.max(0.0),
        certificate: Certificate::Potential(potential),
        status,
    })
}

/// Exact Wasserstein-1 distance with Euclidean ground cost.
///
/// One-dimensional measures use the sorted quantile coupling; higher
/// dimensions solve the transportation problem.
pub fn wasserstein1(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<IpmResult> {
    check_same_dim(mu, nu)?;
    if mu.dim() == 1 {
        wasserstein1_sorted(mu, nu)
    } else {
        wasserstein1_transport(mu, nu)
    }
}

/// Wasserstein-1 from the transportation problem, in any dimension.
pub fn wasserstein1_transport(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<IpmResult> {
    check_same_dim(mu, nu)?;
    let cost = cost_matrix(mu, nu, |r| r);
    let sol = transport::solve(&mu.weights, &nu.weights, &cost)?;
    Ok(IpmResult {
        value: sol.cost.max(0.0),
        certificate: Certificate::Plan(sol.plan),
        status: SolverStatus::Optimal,
    })
}

/// One-dimensional Wasserstein-1 via the monotone (quantile) coupling.
pub fn wasserstein1_sorted(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<IpmResult> {
    check_dim(1, mu.dim())?;
    check_dim(1, nu.dim())?;
    let order = |m: &DiscreteMeasure| {
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.sort_by(|&a, &b| m.points[a][0].total_cmp(&m.points[b][0]));
        idx
    };
    let cumulative = |m: &DiscreteMeasure, idx: &[usize]| {
        let mut acc = 0.0;
        let mut c: Vec<f64> = idx
            .iter()
            .map(|&i| {
                acc += m.weights[i];
                acc
            })
            .collect();
        // Both quantile functions end at exactly 1 so the merge terminates together.
        *c.last_mut().unwrap() = 1.0;
        c
    };
    let (oa, ob) = (order(mu), order(nu));
    let (ca, cb) = (cumulative(mu, &oa), cumulative(nu, &ob));
    let (mut ia, mut ib, mut level) = (0, 0, 0.0);
    let mut plan = Vec::new();
    let mut value = 0.0;
    while ia < oa.len() && ib < ob.len() {
        let next = ca[ia].min(cb[ib]);
        let m = next - level;
        if m > 0.0 {
            let (i, j) = (oa[ia], ob[ib]);
            plan.push((i, j, m));
            value += m * (mu.points[i][0] - nu.points[j][0]).abs();
            level = next;
        }
        if ca[ia] <= next {
            ia += 1;
        }
        if cb[ib] <= next {
            ib += 1;
        }
    }
    Ok(IpmResult {
        value,
        certificate: Certificate::Plan(plan),
        status: SolverStatus::Optimal,
    })
}

/// Value of the IPM over a finite family, symmetrized by negation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyIpm {
    pub value: f64,
    /// Index of the maximizing function.
    pub index: usize,
    /// Whether the maximum is attained by the negated function.
    pub negated: bool,
}

/// `max_f |E_μ f - E_ν f|` over a nonempty family.
pub fn ipm_finite_family<F: ScalarFunction>(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    functions: &[F],
) -> Result<FamilyIpm> {
    check_same_dim(mu, nu)?;
    if functions.is_empty() {
        return Err(Error::InvalidInput("function family is empty".into()));
    }
    let mut best = FamilyIpm {
        value: f64::NEG_INFINITY,
        index: 0,
        negated: false,
    };
    for (index, f) in functions.iter().enumerate() {
        let gap = mu.expectation(f) - nu.expectation(f);
        if gap.abs() > best.value {
            best = FamilyIpm {
                value: gap.abs(),
                index,
                negated: gap < 0.0,
            };
        }
    }
    Ok(best)
}

/// `max_h min_f max_probe |h - f|`, the approximation error of `F` for `H`
/// measured on a probe set.
pub fn approx_error_finite<H: ScalarFunction, F: ScalarFunction>(
    h_family: &[H],
    f_family: &[F],
    probes: &[Vec<f64>],
) -> Result<f64> {
    if h_family.is_empty() || f_family.is_empty() || probes.is_empty() {
        return Err(Error::InvalidInput(
            "families and probes must be nonempty".into(),
        ));
    }
    let hv: Vec<Vec<f64>> = h_family
        .iter()
        .map(|h| probes.iter().map(|p| h.value(p)).collect())
        .collect();
    let fv: Vec<Vec<f64>> = f_family
        .iter()
        .map(|f| probes.iter().map(|p| f.value(p)).collect())
        .collect();
    Ok(hv
        .iter()
        .map(|h| {
            fv.iter()
                .map(|f| {
                    h.iter()
                        .zip(f)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointOrder {
    /// Points `(x, map(x))`: the encoder side.
    InputFirst,
    /// Points `(map(z), z)`: the generator side.
    OutputFirst,
}

/// Uniform measure on the graph of `map` over `inputs`.
pub fn joint_pushforward(
    inputs: &[Vec<f64>],
    map: &ReluNetwork,
    order: JointOrder,
) -> Result<DiscreteMeasure> {
    let mut points = Vec::with_capacity(inputs.len());
    for x in inputs {
        let y = map.forward(x)?;
        let mut p = Vec::with_capacity(x.len() + y.len());
        match order {
            JointOrder::InputFirst => {
                p.extend_from_slice(x);
                p.extend_from_slice(&y);
            }
            JointOrder::OutputFirst => {
                p.extend_from_slice(&y);
                p.extend_from_slice(x);
            }
        }
        points.push(p);
    }
    DiscreteMeasure::uniform(points)
}

/// Keeps the atoms with `‖x‖ ≤ radius`, renormalized, and reports the mass removed.
pub fn restrict_to_ball(m: &DiscreteMeasure, radius: f64) -> Result<(DiscreteMeasure, f64)> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut outside = 0.0;
    for (p, &w) in m.points.iter().zip(&m.weights) {
        if p.iter().map(|v| v * v).sum::<f64>().sqrt() <= radius {
            points.push(p.clone());
            weights.push(w);
        } else {
            outside += w;
        }
    }
    let inside: f64 = weights.iter().sum();
    if points.is_empty() || inside <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "all {} atoms lie outside the ball of radius {radius}",
            m.len()
        )));
    }
    if outside == 0.0 {
        return Ok((m.clone(), 0.0));
    }
    Ok((DiscreteMeasure::normalized(points, weights)?, outside))
}
