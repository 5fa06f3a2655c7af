//! Dense symmetric solvers used by the path algorithms.
//!
//! Gram systems are solved by a Cholesky factorization with diagonal
//! pivoting; a failed pivot signals a numerically singular active set
//! rather than silently regularizing. The non-negative least squares
//! solver is the Lawson–Hanson active-set method phrased in normal
//! equations.

use ndarray::{Array1, Array2};

/// Relative pivot tolerance for the Cholesky factorizations: a pivot
/// below `PIVOT_REL_TOL` times the largest initial diagonal fails.
pub(crate) const PIVOT_REL_TOL: f64 = 1e-12;

/// Convergence tolerance of the NNLS active-set iteration.
pub(crate) const NNLS_TOL: f64 = 1e-12;

/// Cholesky factorization `P A P^T = L L^T` of a symmetric positive
/// definite matrix with greedy diagonal pivoting.
pub(crate) struct PivotedCholesky {
    l: Array2<f64>,
    perm: Vec<usize>,
}

impl PivotedCholesky {
    /// Factor `a`; returns `Err(())` if any pivot falls below the relative
    /// tolerance (the matrix is numerically rank deficient).
    pub fn factor(a: &Array2<f64>) -> Result<Self, ()> {
        let k = a.nrows();
        debug_assert_eq!(a.ncols(), k);
        let mut w = a.clone();
        let mut perm: Vec<usize> = (0..k).collect();
        let max_diag = (0..k).map(|i| a[[i, i]]).fold(0.0_f64, f64::max);
        let tol = PIVOT_REL_TOL * max_diag.max(f64::MIN_POSITIVE);

        for step in 0..k {
            // Largest remaining diagonal becomes the pivot.
            let mut p = step;
            for r in step + 1..k {
                if w[[r, r]] > w[[p, p]] {
                    p = r;
                }
            }
            if w[[p, p]] <= tol {
                return Err(());
            }
            if p != step {
                swap_sym(&mut w, step, p);
                perm.swap(step, p);
            }
            let d = w[[step, step]].sqrt();
            w[[step, step]] = d;
            for r in step + 1..k {
                w[[r, step]] /= d;
            }
            // Keep the trailing block fully symmetric so later pivot swaps
            // of whole rows and columns stay valid.
            for c in step + 1..k {
                let lc = w[[c, step]];
                for r in step + 1..k {
                    w[[r, c]] -= w[[r, step]] * lc;
                }
            }
        }
        // Zero the strict upper triangle so `l` is a clean factor.
        for r in 0..k {
            for c in r + 1..k {
                w[[r, c]] = 0.0;
            }
        }
        Ok(Self { l: w, perm })
    }

    /// Solve `A z = b` using the factorization.
    pub fn solve(&self, b: &Array1<f64>) -> Array1<f64> {
        let k = b.len();
        let mut u = Array1::zeros(k);
        for i in 0..k {
            u[i] = b[self.perm[i]];
        }
        // L v = u
        for i in 0..k {
            let mut s = u[i];
            for j in 0..i {
                s -= self.l[[i, j]] * u[j];
            }
            u[i] = s / self.l[[i, i]];
        }
        // L^T w = v
        for i in (0..k).rev() {
            let mut s = u[i];
            for j in i + 1..k {
                s -= self.l[[j, i]] * u[j];
            }
            u[i] = s / self.l[[i, i]];
        }
        let mut z = Array1::zeros(k);
        for i in 0..k {
            z[self.perm[i]] = u[i];
        }
        z
    }
}

fn swap_sym(a: &mut Array2<f64>, i: usize, j: usize) {
    let k = a.nrows();
    for c in 0..k {
        let t = a[[i, c]];
        a[[i, c]] = a[[j, c]];
        a[[j, c]] = t;
    }
    for r in 0..k {
        let t = a[[r, i]];
        a[[r, i]] = a[[r, j]];
        a[[r, j]] = t;
    }
}

/// Solve the SPD system `A z = b`; `Err(())` on a failed pivot.
pub(crate) fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>, ()> {
    Ok(PivotedCholesky::factor(a)?.solve(b))
}

/// Least squares coefficients for `min ||y - X b||` via normal equations.
/// `Err(())` if the Gram matrix is numerically singular.
pub(crate) fn ols(x: &ndarray::ArrayView2<'_, f64>, y: &Array1<f64>) -> Result<Array1<f64>, ()> {
    let gram = x.t().dot(x);
    let rhs = x.t().dot(y);
    solve_spd(&gram, &rhs)
}

/// Lawson–Hanson non-negative least squares on normal equations:
/// minimize `||X w - r||^2` subject to `w >= 0`, given `g = X^T X` and
/// `b = X^T r`. Returns the coefficient vector; entries not in the final
/// passive set are exactly zero.
pub(crate) fn nnls_gram(g: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>, ()> {
    let p = b.len();
    let scale = b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1.0);
    let tol = NNLS_TOL * scale;

    let mut passive: Vec<usize> = Vec::new();
    let mut lambda = Array1::<f64>::zeros(p);
    let mut grad = b.clone(); // b - G lambda, lambda = 0

    for _outer in 0..(4 * p.max(4) * p.max(4)) {
        // Most violated KKT multiplier among the zero set.
        let mut best: Option<usize> = None;
        for j in 0..p {
            if !passive.contains(&j) && grad[j] > tol && best.is_none_or(|bj| grad[j] > grad[bj])
            {
                best = Some(j);
            }
        }
        let Some(jstar) = best else {
            return Ok(lambda);
        };
        passive.push(jstar);

        loop {
            // Unconstrained solve on the passive set.
            let k = passive.len();
            let mut gp = Array2::zeros((k, k));
            let mut bp = Array1::zeros(k);
            for (ri, &i) in passive.iter().enumerate() {
                bp[ri] = b[i];
                for (ci, &j) in passive.iter().enumerate() {
                    gp[[ri, ci]] = g[[i, j]];
                }
            }
            let z = solve_spd(&gp, &bp)?;
            if z.iter().all(|&v| v > tol) {
                lambda.fill(0.0);
                for (ri, &i) in passive.iter().enumerate() {
                    lambda[i] = z[ri];
                }
                break;
            }
            // Step toward z until the first passive coefficient hits zero.
            let mut alpha = f64::INFINITY;
            for (ri, &i) in passive.iter().enumerate() {
                if z[ri] <= tol {
                    let denom = lambda[i] - z[ri];
                    if denom > 0.0 {
                        alpha = alpha.min(lambda[i] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (ri, &i) in passive.iter().enumerate() {
                lambda[i] += alpha * (z[ri] - lambda[i]);
            }
            passive.retain(|&i| lambda[i] > tol);
            for j in 0..p {
                if !passive.contains(&j) {
                    lambda[j] = 0.0;
                }
            }
        }
        grad = b - &g.dot(&lambda);
    }
    // Active-set cycling would be a bug; treat as singular.
    Err(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.2], [0.6, 1.2, 3.0]];
        let b = array![1.0, -2.0, 0.5];
        let z = solve_spd(&a, &b).unwrap();
        let back = a.dot(&z);
        for i in 0..3 {
            assert_abs_diff_eq!(back[i], b[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_handles_pivot_swaps() {
        // Ascending diagonal forces a swap at every step.
        let a = array![
            [1.0, 0.2, 0.1, -0.3],
            [0.2, 2.5, -0.4, 0.5],
            [0.1, -0.4, 4.0, 0.7],
            [-0.3, 0.5, 0.7, 9.0]
        ];
        let b = array![0.5, -1.0, 2.0, 0.25];
        let z = solve_spd(&a, &b).unwrap();
        let back = a.dot(&z);
        for i in 0..4 {
            assert_abs_diff_eq!(back[i], b[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(PivotedCholesky::factor(&a).is_err());
    }

    #[test]
    fn cholesky_rejects_near_singular() {
        let e = 1e-14;
        let a = array![[1.0, 1.0 - e], [1.0 - e, 1.0]];
        // Determinant ~2e-14; the pivoted factorization should flag it.
        assert!(PivotedCholesky::factor(&a).is_err());
    }

    #[test]
    fn ols_matches_hand_solution() {
        // y = 2*x1 - x2 exactly.
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [2.0, -1.0]];
        let y = array![2.0, -1.0, 1.0, 5.0];
        let b = ols(&x.view(), &y).unwrap();
        assert_abs_diff_eq!(b[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn nnls_clips_negative_solution() {
        // Unconstrained solution has a negative coordinate; NNLS must zero it.
        let x = array![[1.0, 0.9], [0.0, 0.1], [0.0, 0.0]];
        let g = x.t().dot(&x);
        let r = array![1.0, -0.5, 0.0];
        let b = x.t().dot(&r);
        let w = nnls_gram(&g, &b).unwrap();
        assert!(w.iter().all(|&v| v >= 0.0));
        // KKT: gradient of active coords ~ 0, inactive <= 0.
        let grad = &b - &g.dot(&w);
        for j in 0..2 {
            if w[j] > 0.0 {
                assert_abs_diff_eq!(grad[j], 0.0, epsilon = 1e-9);
            } else {
                assert!(grad[j] <= 1e-9);
            }
        }
    }

    #[test]
    fn nnls_recovers_positive_solution() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [0.3, 0.4]];
        let truth = array![1.5, 2.5];
        let r = x.dot(&truth);
        let g = x.t().dot(&x);
        let b = x.t().dot(&r);
        let w = nnls_gram(&g, &b).unwrap();
        assert_abs_diff_eq!(w[0], 1.5, epsilon = 1e-10);
        assert_abs_diff_eq!(w[1], 2.5, epsilon = 1e-10);
    }
}
