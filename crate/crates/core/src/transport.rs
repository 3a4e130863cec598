//! Exact solver for the discrete transportation problem
//!
//! ```text
//! minimize Σ_ij c_ij π_ij  subject to  Σ_j π_ij = a_i,  Σ_i π_ij = b_j,  π ≥ 0
//! ```
//!
//! by successive shortest augmenting paths with Dijkstra on reduced costs.
//! The node potentials maintained by the search are optimal Kantorovich duals
//! at termination.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Debug)]
pub struct TransportSolution {
    pub cost: f64,
    /// Nonzero entries `(i, j, mass)` of the optimal coupling.
    pub plan: Vec<(usize, usize, f64)>,
    /// Dual potentials with `row[i] + col[j] ≤ c_ij`, tight on the plan.
    pub row_potential: Vec<f64>,
    pub col_potential: Vec<f64>,
    pub augmentations: usize,
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Solves the transportation problem for a dense row-major `p × q` cost matrix.
///
/// Costs must be finite and nonnegative; both marginals nonnegative with
/// equal totals (up to `1e-9` relative).
pub fn solve(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let (p, q) = (supply.len(), demand.len());
    if p == 0 || q == 0 {
        return Err(Error::InvalidInput(
            "transport problem needs nonempty marginals".into(),
        ));
    }
    check_dim(p * q, cost.len())?;
    if supply
        .iter()
        .chain(demand)
        .any(|v| !(*v >= 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidInput(
            "marginals must be finite and nonnegative".into(),
        ));
    }
    if cost.iter().any(|c| !(*c >= 0.0 && c.is_finite())) {
        return Err(Error::InvalidInput(
            "costs must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = supply.iter().sum();
    let total_d: f64 = demand.iter().sum();
    if total <= 0.0 || (total - total_d).abs() > 1e-9 * total.max(total_d) {
        return Err(Error::InvalidInput(format!(
            "unbalanced marginals: {total} vs {total_d}"
        )));
    }
    let eps = 1e-14 * total;

    let mut rem_s = supply.to_vec();
    let mut rem_d = demand.to_vec();
    let mut flow = vec![0.0; p * q];
    // Rows carrying flow into each column (backward residual arcs).
    let mut carriers: Vec<Vec<usize>> = vec![Vec::new(); q];
    let mut h_row = vec![0.0; p];
    let mut h_col = vec![0.0; q];

    let mut dist = vec![f64::INFINITY; p + q];
    let mut settled = vec![false; p + q];
    let mut pred = vec![usize::MAX; p + q];
    let mut touched: Vec<usize> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut augmentations = 0;

    loop {
        if rem_s.iter().all(|&s| s <= eps) {
            break;
        }
        for &v in &touched {
            dist[v] = f64::INFINITY;
            settled[v] = false;
            pred[v] = usize::MAX;
        }
        touched.clear();
        heap.clear();
        for (i, &s) in rem_s.iter().enumerate() {
            if s > eps {
                dist[i] = 0.0;
                touched.push(i);
                heap.push(Entry { dist: 0.0, node: i });
            }
        }

        let mut target = None;
        while let Some(Entry { dist: du, node: u }) = heap.pop() {
            if settled[u] || du > dist[u] {
                continue;
            }
            if u >= p && rem_d[u - p] > eps {
                target = Some((u - p, du));
                break;
            }
            settled[u] = true;
            if u < p {
                let row = &cost[u * q..(u + 1) * q];
                for j in 0..q {
                    let v = p + j;
                    if settled[v] {
                        continue;
                    }
                    let rc = (row[j] + h_row[u] - h_col[j]).max(0.0);
                    let nd = du + rc;
                    if nd < dist[v] {
                        if dist[v].is_infinite() {
                            touched.push(v);
                        }
                        dist[v] = nd;
                        pred[v] = u;
                        heap.push(Entry { dist: nd, node: v });
                    }
                }
            } else {
                let j = u - p;
                for &i in &carriers[j] {
                    if settled[i] {
                        continue;
                    }
                    let rc = (h_col[j] - h_row[i] - cost[i * q + j]).max(0.0);
                    let nd = du + rc;
                    if nd < dist[i] {
                        if dist[i].is_infinite() {
                            touched.push(i);
                        }
                        dist[i] = nd;
                        pred[i] = u;
                        heap.push(Entry { dist: nd, node: i });
                    }
                }
            }
        }

        let Some((target, reach)) = target else {
            return Err(Error::Solver(
                "no augmenting path; marginals are inconsistent".into(),
            ));
        };

        // Potential update h += min(dist, reach); untouched nodes are at +∞.
        for i in 0..p {
            h_row[i] += dist[i].min(reach);
        }
        for j in 0..q {
            h_col[j] += dist[p + j].min(reach);
        }

        // Walk back to the source row and find the bottleneck.
        let mut amount = rem_d[target];
        let mut v = p + target;
        loop {
            let i = pred[v];
            let prev_col = pred[i];
            if prev_col == usize::MAX {
                amount = amount.min(rem_s[i]);
                break;
            }
            amount = amount.min(flow[i * q + (prev_col - p)]);
            v = prev_col;
        }

        let mut v = p + target;
        loop {
            let i = pred[v];
            let j = v - p;
            if flow[i * q + j] == 0.0 {
                carriers[j].push(i);
            }
            flow[i * q + j] += amount;
            let prev_col = pred[i];
            if prev_col == usize::MAX {
                rem_s[i] -= amount;
                break;
            }
            let jj = prev_col - p;
            let f = &mut flow[i * q + jj];
            *f -= amount;
            if *f <= eps * 1e-3 {
                *f = 0.0;
                carriers[jj].retain(|&r| r != i);
            }
            v = prev_col;
        }
        rem_d[target] -= amount;
        augmentations += 1;
        if augmentations > 64 * (p + q) * (p + q) + 1000 {
            return Err(Error::Solver("augmentation limit reached".into()));
        }
    }

    let mut plan = Vec::new();
    let mut total_cost = 0.0;
    for i in 0..p {
        for j in 0..q {
            let f = flow[i * q + j];
            if f > 0.0 {
                plan.push((i, j, f));
                total_cost += f * cost[i * q + j];
            }
        }
    }
    Ok(TransportSolution {
        cost: total_cost,
        plan,
        row_potential: h_row.iter().map(|h| -h).collect(),
        col_potential: h_col,
        augmentations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for perm in permutations(n - 1) {
            for pos in 0..=perm.len() {
                let mut p = perm.clone();
                p.insert(pos, n - 1);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn two_by_two() {
        // Uniform on {1, 2} vs uniform on {0, 4}: 0.5·1 + 0.5·2.
        let cost = [1.0, 3.0, 2.0, 2.0];
        let sol = solve(&[0.5, 0.5], &[0.5, 0.5], &cost).unwrap();
        assert!((sol.cost - 1.5).abs() < 1e-15);
    }

    #[test]
    fn assignment_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..10.0)).collect();
                let w = vec![1.0 / n as f64; n];
                let sol = solve(&w, &w, &cost).unwrap();
                let best = permutations(n)
                    .iter()
                    .map(|perm| {
                        perm.iter()
                            .enumerate()
                            .map(|(i, &j)| cost[i * n + j])
                            .sum::<f64>()
                            / n as f64
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(
                    (sol.cost - best).abs() < 1e-12,
                    "n={n}: {} vs {best}",
                    sol.cost
                );
            }
        }
    }

    #[test]
    fn duals_certify_optimality() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let (p, q) = (rng.random_range(1..12), rng.random_range(1..12));
            let mut a: Vec<f64> = (0..p).map(|_| rng.random_range(0.01..1.0)).collect();
            let mut b: Vec<f64> = (0..q).map(|_| rng.random_range(0.01..1.0)).collect();
            let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
            a.iter_mut().for_each(|v| *v /= sa);
            b.iter_mut().for_each(|v| *v /= sb);
            let cost: Vec<f64> = (0..p * q).map(|_| rng.random_range(0.0..5.0)).collect();
            let sol = solve(&a, &b, &cost).unwrap();
            for i in 0..p {
                for j in 0..q {
                    assert!(sol.row_potential[i] + sol.col_potential[j] <= cost[i * q + j] + 1e-9);
                }
            }
            let dual: f64 = a
                .iter()
                .zip(&sol.row_potential)
                .map(|(x, y)| x * y)
                .sum::<f64>()
                + b.iter()
                    .zip(&sol.col_potential)
                    .map(|(x, y)| x * y)
                    .sum::<f64>();
            assert!((dual - sol.cost).abs() < 1e-9, "gap {}", dual - sol.cost);
            // Marginals of the plan.
            let mut rows = vec![0.0; p];
            let mut cols = vec![0.0; q];
            for &(i, j, f) in &sol.plan {
                assert!(f > 0.0);
                rows[i] += f;
                cols[j] += f;
            }
            for (x, y) in rows.iter().zip(&a).chain(cols.iter().zip(&b)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(solve(&[1.0], &[0.5], &[0.0]).is_err());
        assert!(solve(&[1.0], &[1.0], &[-1.0]).is_err());
        assert!(solve(&[1.0], &[1.0], &[0.0, 1.0]).is_err());
        assert!(solve(&[], &[], &[]).is_err());
    }
}
