//! Shared fixtures and independent oracles for the integration tests.
//!
//! The solvers here deliberately avoid the crate's path code: the Lasso
//! oracle is projected-gradient descent on the constrained least squares
//! problem, and the OLS oracle is plain Gauss-Jordan elimination.

#![allow(dead_code)]

use lars::{StandardizeMode, StandardizedDesign};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

/// The committed drop-event fixture: an 8x4 integer design whose third
/// and fourth columns are strongly negatively correlated (about -0.97
/// after standardization). Its Lasso path contains a drop event.
pub fn drop_fixture() -> (Array2<f64>, Array1<f64>) {
    let x = ndarray::array![
        [1.0, 1.0, 3.0, -3.0],
        [-2.0, -1.0, 4.0, -4.0],
        [0.0, 0.0, -4.0, 3.0],
        [1.0, -1.0, -2.0, 3.0],
        [4.0, -3.0, -2.0, 3.0],
        [-2.0, 2.0, -1.0, 1.0],
        [1.0, 4.0, 1.0, -2.0],
        [0.0, -4.0, -3.0, 4.0]
    ];
    let y = ndarray::array![0.0, 9.0, -4.0, -3.0, 6.0, -6.0, -3.0, -2.0];
    (x, y)
}

pub fn drop_design() -> StandardizedDesign {
    let (x, y) = drop_fixture();
    StandardizedDesign::standardize(&x, &y, StandardizeMode::Standard).unwrap()
}

/// Sylvester-Hadamard matrix of order `n` (a power of two).
fn hadamard(n: usize) -> Array2<f64> {
    assert!(n.is_power_of_two());
    let mut h = Array2::from_elem((1, 1), 1.0);
    let mut size = 1;
    while size < n {
        let mut next = Array2::zeros((2 * size, 2 * size));
        for i in 0..size {
            for j in 0..size {
                let v = h[[i, j]];
                next[[i, j]] = v;
                next[[i + size, j]] = v;
                next[[i, j + size]] = v;
                next[[i + size, j + size]] = -v;
            }
        }
        h = next;
        size *= 2;
    }
    h
}

/// An exactly orthonormal `n x m` design built from Hadamard columns
/// (skipping the constant column), so the columns are also centered.
pub fn hadamard_orthonormal(n: usize, m: usize) -> Array2<f64> {
    assert!(m < n);
    let h = hadamard(n);
    let scale = 1.0 / (n as f64).sqrt();
    let mut x = Array2::zeros((n, m));
    for j in 0..m {
        for i in 0..n {
            x[[i, j]] = h[[i, j + 1]] * scale;
        }
    }
    x
}

/// Orthonormalize the columns of a random `n x m` matrix by two rounds of
/// Gram-Schmidt.
pub fn random_orthonormal(n: usize, m: usize, seed: u64) -> Array2<f64> {
    let mut rng = lars::stream(seed, 0);
    let mut x = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            x[[i, j]] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    for _round in 0..2 {
        for j in 0..m {
            for k in 0..j {
                let proj = x.column(j).dot(&x.column(k));
                let ck = x.column(k).to_owned();
                x.column_mut(j).scaled_add(-proj, &ck);
            }
            let norm = x.column(j).dot(&x.column(j)).sqrt();
            x.column_mut(j).mapv_inplace(|v| v / norm);
        }
    }
    x
}

/// A random regression fixture with a sparse-ish signal, scaled so the
/// response has unit-order norm.
pub fn random_fixture(n: usize, m: usize, seed: u64) -> (Array2<f64>, Array1<f64>) {
    let mut rng = lars::stream(seed, 1);
    let mut x = Array2::zeros((n, m));
    for i in 0..n {
        for j in 0..m {
            x[[i, j]] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let mut beta = Array1::zeros(m);
    for j in 0..m {
        if rng.random::<f64>() < 0.6 {
            beta[j] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    let noise: Array1<f64> = (0..n)
        .map(|_| 0.3 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let y_raw = x.dot(&beta) + noise;
    let scale = (y_raw.dot(&y_raw) / n as f64).sqrt().max(1e-6);
    (x, y_raw.mapv(|v| v / scale))
}

/// Gauss-Jordan solve of a small linear system, independent of the
/// crate's factorizations.
pub fn gauss_solve(a: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let k = b.len();
    let mut aug = Array2::zeros((k, k + 1));
    for i in 0..k {
        for j in 0..k {
            aug[[i, j]] = a[[i, j]];
        }
        aug[[i, k]] = b[i];
    }
    for col in 0..k {
        let mut pivot = col;
        for r in col + 1..k {
            if aug[[r, col]].abs() > aug[[pivot, col]].abs() {
                pivot = r;
            }
        }
        if pivot != col {
            for c in 0..=k {
                let t = aug[[col, c]];
                aug[[col, c]] = aug[[pivot, c]];
                aug[[pivot, c]] = t;
            }
        }
        let d = aug[[col, col]];
        assert!(d.abs() > 1e-14, "oracle system is singular");
        for c in 0..=k {
            aug[[col, c]] /= d;
        }
        for r in 0..k {
            if r != col {
                let f = aug[[r, col]];
                for c in 0..=k {
                    aug[[r, c]] -= f * aug[[col, c]];
                }
            }
        }
    }
    (0..k).map(|i| aug[[i, k]]).collect()
}

/// Ordinary least squares via Gauss-Jordan on the normal equations.
pub fn ols_oracle(x: &Array2<f64>, y: &Array1<f64>) -> Array1<f64> {
    let gram = x.t().dot(x);
    let rhs = x.t().dot(y);
    gauss_solve(&gram, &rhs)
}

/// Euclidean projection onto the L1 ball of radius `t` (sort-based).
pub fn project_l1_ball(v: &Array1<f64>, t: f64) -> Array1<f64> {
    if t <= 0.0 {
        return Array1::zeros(v.len());
    }
    let norm: f64 = v.iter().map(|x| x.abs()).sum();
    if norm <= t {
        return v.clone();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &u) in mags.iter().enumerate() {
        acc += u;
        let cand = (acc - t) / (i + 1) as f64;
        if u - cand > 0.0 {
            theta = cand;
        } else {
            break;
        }
    }
    v.mapv(|x| x.signum() * (x.abs() - theta).max(0.0))
}

/// Constrained least squares oracle: minimize `||y - X b||^2` subject to
/// `||b||_1 <= t`, solved by accelerated projected gradient descent.
pub fn qp_lasso_oracle(x: &Array2<f64>, y: &Array1<f64>, t: f64, max_iters: usize) -> Array1<f64> {
    let m = x.ncols();
    let gram = x.t().dot(x);
    let xty = x.t().dot(y);
    // Safe Lipschitz bound for the gradient 2(G b - X^T y).
    let lip = 2.0 * (0..m).map(|j| gram[[j, j]]).sum::<f64>().max(1e-12);
    let step = 1.0 / lip;

    let mut beta = Array1::<f64>::zeros(m);
    let mut z = beta.clone();
    let mut s_t = 1.0_f64;
    let mut stall = 0;
    for _ in 0..max_iters {
        let grad = (gram.dot(&z) - &xty) * 2.0;
        let next = project_l1_ball(&(&z - &(&grad * step)), t);
        let s_next = 0.5 * (1.0 + (1.0 + 4.0 * s_t * s_t).sqrt());
        let momentum = (s_t - 1.0) / s_next;
        z = &next + &((&next - &beta) * momentum);
        let delta = next
            .iter()
            .zip(beta.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        beta = next;
        s_t = s_next;
        if delta < 1e-15 {
            stall += 1;
            if stall > 32 {
                break;
            }
        } else {
            stall = 0;
        }
    }
    beta
}

/// A fixed 50x8 design with diabetes-like correlation structure (two
/// latent factors with mixed-sign loadings plus idiosyncratic noise).
pub fn correlated_design_50x8() -> Array2<f64> {
    let mut rng = lars::stream(2718, 0);
    let (n, m) = (50, 8);
    let mut x = Array2::zeros((n, m));
    let loads = [
        (0.8, 0.1),
        (0.7, -0.3),
        (-0.5, 0.6),
        (0.4, 0.5),
        (-0.6, -0.4),
        (0.3, -0.7),
        (0.5, 0.2),
        (-0.2, 0.8),
    ];
    for i in 0..n {
        let f1: f64 = rng.sample(StandardNormal);
        let f2: f64 = rng.sample(StandardNormal);
        for j in 0..m {
            let e: f64 = rng.sample(StandardNormal);
            x[[i, j]] = loads[j].0 * f1 + loads[j].1 * f2 + 0.6 * e;
        }
    }
    x
}

/// Load the committed diabetes dataset: 442 patients, ten baseline
/// variables (age, sex, bmi, bp, s1..s6) and the disease-progression
/// response.
pub fn load_diabetes() -> (Array2<f64>, Array1<f64>, Vec<String>) {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/diabetes.csv");
    let text = std::fs::read_to_string(path).expect("data/diabetes.csv must be committed");
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .expect("header row")
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let m = header.len() - 1;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().expect("numeric cell"))
            .collect();
        assert_eq!(vals.len(), m + 1);
        rows.push(vals);
    }
    let n = rows.len();
    let mut x = Array2::zeros((n, m));
    let mut y = Array1::zeros(n);
    for (i, row) in rows.iter().enumerate() {
        for j in 0..m {
            x[[i, j]] = row[j];
        }
        y[i] = row[m];
    }
    (x, y, header[..m].to_vec())
}

/// The quadratic expansion of the diabetes predictors: 10 main effects,
/// 45 pairwise interactions and 9 squares, leaving out the square of the
/// dichotomous sex variable (column 1), which is collinear with sex
/// itself after centering.
pub fn diabetes_quadratic(raw: &Array2<f64>) -> Array2<f64> {
    let (expanded, map) = lars::experiments::gen_interactions(raw, true).unwrap();
    let sex_sq = map
        .iter()
        .find(|t| t.parent_i == 1 && t.parent_j == 1)
        .unwrap()
        .column;
    let keep: Vec<usize> = (0..expanded.ncols()).filter(|&c| c != sex_sq).collect();
    let mut out = Array2::zeros((expanded.nrows(), keep.len()));
    for (ci, &c) in keep.iter().enumerate() {
        out.column_mut(ci).assign(&expanded.column(c));
    }
    out
}

/// Check the Lasso stationarity conditions for interpolated coefficients
/// at penalty level `lambda`: active correlations equal `lambda` with the
/// coefficient's sign, inactive ones do not exceed it.
pub fn kkt_violation(design: &StandardizedDesign, beta: &Array1<f64>, lambda: f64) -> f64 {
    let resid = &design.y().to_owned() - &design.x().dot(beta);
    let c = design.correlations(&resid).unwrap();
    let mut worst = 0.0_f64;
    for j in 0..design.m() {
        if beta[j] != 0.0 {
            worst = worst.max((c[j] - lambda * beta[j].signum()).abs());
        } else {
            worst = worst.max((c[j].abs() - lambda).max(0.0));
        }
    }
    worst
}
