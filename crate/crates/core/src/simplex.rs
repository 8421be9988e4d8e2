//! Phase-1 dense simplex: feasibility of `A x = b`, `x >= 0`, with a
//! nonnegative least-squares fallback for badly conditioned systems.

use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-9;

/// Outcome of a phase-1 solve.
#[derive(Debug, Clone)]
pub struct Phase1 {
    /// Larger of the artificial sum and the max residual of `A x = b` at `x`.
    pub infeasibility: f64,
    /// Primal point for the structural variables.
    pub x: Vec<f64>,
}

/// Indices of a maximal linearly independent subset of the rows, in order.
fn independent_rows(a: &[Vec<f64>]) -> Vec<usize> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut keep = Vec::new();
    for (i, row) in a.iter().enumerate() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let mut r = row.clone();
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = r.iter().zip(q).map(|(x, y)| x * y).sum();
                for (x, y) in r.iter_mut().zip(q) {
                    *x -= d * y;
                }
            }
        }
        let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rn > 1e-9 * norm {
            basis.push(r.into_iter().map(|v| v / rn).collect());
            keep.push(i);
        }
    }
    keep
}

/// Minimizes the sum of artificials for `A x = b, x >= 0` with Bland's rule,
/// after dropping linearly dependent rows. `a` is row-major with rows of
/// equal length. If the simplex point misses `A x = b` by more than
/// rounding, NNLS is tried and the better point kept.
pub fn phase1(a: &[Vec<f64>], b: &[f64]) -> Phase1 {
    let keep = independent_rows(a);
    let ar: Vec<Vec<f64>> = keep.iter().map(|&i| a[i].clone()).collect();
    let br: Vec<f64> = keep.iter().map(|&i| b[i]).collect();
    let mut sol = phase1_independent(&ar, &br);
    let mut residual = max_residual(a, b, &sol.x);
    if residual > FALLBACK_RESIDUAL {
        let x = nnls(a, b);
        let r = max_residual(a, b, &x);
        if r < residual {
            sol.x = x;
            sol.infeasibility = 0.0;
            residual = r;
        }
    }
    sol.infeasibility = sol.infeasibility.max(residual);
    sol
}

/// Residual above which the simplex point is re-derived by NNLS.
const FALLBACK_RESIDUAL: f64 = 1e-10;

fn max_residual(a: &[Vec<f64>], b: &[f64], x: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(row, &bi)| (row.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() - bi).abs())
        .fold(0.0, f64::max)
}

/// Lawson-Hanson active-set NNLS: argmin |A x - b| over x >= 0. Passive-set
/// subproblems go through an SVD, so dependent columns and rows are fine.
pub fn nnls(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if m == 0 || n == 0 {
        return vec![0.0; n];
    }
    let am = DMatrix::from_fn(m, n, |i, j| a[i][j]);
    let bv = DVector::from_column_slice(b);
    let scale = am.amax().max(1.0) * bv.amax().max(1.0);
    let tol = 1e-13 * scale * (m.max(n) as f64);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let lstsq = |passive: &[bool]| -> DVector<f64> {
        let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = DMatrix::from_fn(m, cols.len(), |i, k| am[(i, cols[k])]);
        let z = sub.svd(true, true).solve(&bv, 1e-13 * scale).unwrap_or_else(|_| DVector::zeros(cols.len()));
        let mut s = DVector::zeros(n);
        for (k, &j) in cols.iter().enumerate() {
            s[j] = z[k];
        }
        s
    };
    for _ in 0..3 * n + 10 {
        let w = am.transpose() * (&bv - &am * &x);
        let Some(j) = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&p, &q| w[p].total_cmp(&w[q])) else { break };
        passive[j] = true;
        for _ in 0..3 * n + 10 {
            let s = lstsq(&passive);
            if (0..n).all(|i| !passive[i] || s[i] > 0.0) {
                x = s;
                break;
            }
            let alpha = (0..n)
                .filter(|&i| passive[i] && s[i] <= 0.0)
                .map(|i| x[i] / (x[i] - s[i]))
                .fold(f64::INFINITY, f64::min);
            x += (&s - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= 1e-15 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    x.iter().map(|v| v.max(0.0)).collect()
}

/// Solves `mat · z = rhs` by Gaussian elimination with partial pivoting.
/// `None` if the matrix is numerically singular.
fn solve(mut mat: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let m = rhs.len();
    let scale = mat.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    for col in 0..m {
        let piv = (col..m).max_by(|&p, &q| mat[p][col].abs().total_cmp(&mat[q][col].abs()))?;
        if mat[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        mat.swap(col, piv);
        rhs.swap(col, piv);
        let (top, rest) = mat.split_at_mut(col + 1);
        let pivot = &top[col];
        for (row, r) in rest.iter_mut().zip(col + 1..) {
            let f = row[col] / pivot[col];
            if f != 0.0 {
                for (a, b) in row[col..m].iter_mut().zip(&pivot[col..m]) {
                    *a -= f * b;
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut z = vec![0.0; m];
    for col in (0..m).rev() {
        let s: f64 = (col + 1..m).map(|k| mat[col][k] * z[k]).sum();
        z[col] = (rhs[col] - s) / mat[col][col];
    }
    Some(z)
}

/// Revised simplex on `[A | I]` with rows sign-flipped so that `b >= 0`.
/// The basis is refactorized from the original data at every pivot, so
/// rounding does not accumulate across iterations.
fn phase1_independent(a: &[Vec<f64>], b: &[f64]) -> Phase1 {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    let sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    let bb: Vec<f64> = b.iter().zip(&sign).map(|(v, s)| v * s).collect();
    let column = |j: usize| -> Vec<f64> {
        if j < n {
            (0..m).map(|i| sign[i] * a[i][j]).collect()
        } else {
            (0..m).map(|i| if i == j - n { 1.0 } else { 0.0 }).collect()
        }
    };
    let cost = |j: usize| if j < n { 0.0 } else { 1.0 };
    // distinct small shifts of the right-hand side break degenerate ties,
    // which otherwise make the toleranced ratio test cycle
    let shift = 1e-10 * bb.iter().fold(1.0f64, |acc, v| acc.max(*v));
    let bp: Vec<f64> = bb.iter().enumerate().map(|(i, v)| v + shift * (1.0 + (i as f64 * 0.618_033_988_75).fract())).collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut xb = bp.clone();

    let max_pivots = 50 * (n + m).max(1);
    for _ in 0..max_pivots {
        let cols: Vec<Vec<f64>> = basis.iter().map(|&j| column(j)).collect();
        // B[i][k] = cols[k][i]
        let bmat: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|k| cols[k][i]).collect()).collect();
        let Some(x) = solve(bmat.clone(), bp.clone()) else { break };
        xb = x;
        let Some(y) = solve(cols.clone(), basis.iter().map(|&j| cost(j)).collect()) else { break };
        let enter = (0..n + m).filter(|j| !basis.contains(j)).find(|&j| {
            let col = column(j);
            let d = cost(j) - y.iter().zip(&col).map(|(u, v)| u * v).sum::<f64>();
            let scale = 1.0 + col.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            d < -1e-11 * scale
        });
        let Some(enter) = enter else { break };
        let Some(w) = solve(bmat, column(enter)) else { break };
        let wmax = w.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let tol = (PIVOT_EPS * wmax).max(1e-14);
        let mut best = f64::INFINITY;
        for i in 0..m {
            if w[i] > tol {
                best = best.min(xb[i].max(0.0) / w[i]);
            }
        }
        if !best.is_finite() {
            break;
        }
        // Bland: smallest basic index among rows tied at the minimum ratio
        let leave = (0..m)
            .filter(|&i| w[i] > tol && xb[i].max(0.0) / w[i] <= best + 1e-12 * (1.0 + best))
            .min_by_key(|&i| basis[i]);
        let Some(r) = leave else { break };
        basis[r] = enter;
    }

    // basic solution for the unshifted right-hand side
    let bmat: Vec<Vec<f64>> = (0..m).map(|i| basis.iter().map(|&j| column(j)[i]).collect()).collect();
    if let Some(exact) = solve(bmat, bb) {
        xb = exact;
    }
    let mut x = vec![0.0; n];
    let mut infeasibility = 0.0;
    for (&bv, &v) in basis.iter().zip(&xb) {
        if bv < n {
            x[bv] = v.max(0.0);
        } else {
            infeasibility += v.max(0.0);
        }
    }
    Phase1 { infeasibility, x }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feasible_simple() {
        // x + y = 1, x - y = 0.5
        let r = phase1(&[vec![1.0, 1.0], vec![1.0, -1.0]], &[1.0, 0.5]);
        assert!(r.infeasibility.abs() < 1e-12);
        assert!((r.x[0] - 0.75).abs() < 1e-12 && (r.x[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn infeasible_simple() {
        // x + y = 1, x + y = 2
        let r = phase1(&[vec![1.0, 1.0], vec![1.0, 1.0]], &[1.0, 2.0]);
        assert!(r.infeasibility >= 0.5 - 1e-12);
    }

    #[test]
    fn redundant_rows() {
        let r = phase1(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![1.0, 0.0]], &[1.0, 2.0, 0.3]);
        assert!(r.infeasibility.abs() < 1e-12);
        assert!((r.x[1] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn nnls_recovers_nonnegative_solution() {
        let a = vec![vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]];
        let x = nnls(&a, &[1.0, 1.0]);
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!(max_residual(&a, &[1.0, 1.0], &x) < 1e-12);
        // the unconstrained solution would be negative
        let y = nnls(&[vec![1.0]], &[-2.0]);
        assert_eq!(y, vec![0.0]);
    }

    #[test]
    fn near_duplicate_rows_stay_feasible() {
        // garbling of a nearly fully correlated structure onto the iid one
        let mu = [0.3031056630189987, 0.2569564554713624, 0.39566076486064883, 0.04427711664898998];
        let m = [
            mu.to_vec(),
            vec![mu[0], 0.6526143625842232, 2.857747788029933e-6, mu[3]],
            vec![mu[0], 1.85592509408955e-6, 0.6526153644069171, mu[3]],
            mu.to_vec(),
        ];
        let (mut rows, mut rhs) = (Vec::new(), Vec::new());
        for a in 0..4 {
            rows.push((0..16).map(|v| if v / 4 == a { 1.0 } else { 0.0 }).collect::<Vec<_>>());
            rhs.push(1.0);
            for j in 0..4 {
                rows.push((0..16).map(|v| if v / 4 == a { m[v % 4][j] } else { 0.0 }).collect());
                rhs.push(mu[j]);
            }
        }
        for b in 0..4 {
            rows.push((0..16).map(|v| if v % 4 == b { mu[v / 4] } else { 0.0 }).collect());
            rhs.push(mu[b]);
        }
        let r = phase1(&rows, &rhs);
        assert!(r.infeasibility < 1e-9, "{}", r.infeasibility);
    }
}
