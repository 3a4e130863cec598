//! Dense tableau simplex for small linear programs of the form
//!
//! ```text
//! maximize cᵀx  subject to  A x ≤ b,  x ≥ 0,  with b ≥ 0.
//! ```
//!
//! `b ≥ 0` makes the origin feasible, so no phase one is needed. Pivoting
//! follows Bland's rule, which terminates on the heavily degenerate
//! Lipschitz-constraint systems this crate feeds it.

use crate::error::{check_dim, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Dual value of each constraint row.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-11,
            max_iterations: 1_000_000,
        }
    }
}

/// Solves `max cᵀx, A x ≤ b, x ≥ 0` for `b ≥ 0`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64], opts: SimplexOptions) -> Result<LpSolution> {
    let n = c.len();
    let m = b.len();
    check_dim(m, a.len())?;
    for row in a {
        check_dim(n, row.len())?;
    }
    if let Some(v) = b.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::InvalidInput(format!(
            "right-hand side must be nonnegative, got {v}"
        )));
    }

    let width = n + m + 1;
    let rhs = n + m;
    let mut t = vec![0.0; m * width];
    for i in 0..m {
        let row = &mut t[i * width..(i + 1) * width];
        row[..n].copy_from_slice(&a[i]);
        row[n + i] = 1.0;
        row[rhs] = b[i];
    }
    // Reduced costs c_j - z_j; the last slot holds -objective.
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(c);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let tol = opts.tolerance;
    let mut iterations = 0;
    let status = loop {
        let Some(enter) = (0..n + m).find(|&j| obj[j] > tol) else {
            break LpStatus::Optimal;
        };
        if iterations >= opts.max_iterations {
            break LpStatus::IterationLimit;
        }
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let aij = t[i * width + enter];
            if aij > tol {
                let ratio = t[i * width + rhs] / aij;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - tol || (ratio <= best + tol && basis[i] < basis[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            break LpStatus::Unbounded;
        };
        pivot(&mut t, &mut obj, width, m, row, enter);
        basis[row] = enter;
        iterations += 1;
    };

    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i * width + rhs];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    let duals = (0..m).map(|i| -obj[n + i]).collect();
    Ok(LpSolution {
        status,
        objective,
        x,
        duals,
        iterations,
    })
}

fn pivot(t: &mut [f64], obj: &mut [f64], width: usize, m: usize, row: usize, col: usize) {
    let p = t[row * width + col];
    for v in &mut t[row * width..(row + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = t[row * width..(row + 1) * width].to_vec();
    for i in 0..m {
        if i == row {
            continue;
        }
        let f = t[i * width + col];
        if f != 0.0 {
            for (v, pv) in t[i * width..(i + 1) * width].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            t[i * width + col] = 0.0;
        }
    }
    let f = obj[col];
    if f != 0.0 {
        for (v, pv) in obj.iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
        obj[col] = 0.0;
    }
}
