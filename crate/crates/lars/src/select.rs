//! Stopping rules over a computed path: Cp curves with a configurable
//! penalty multiplier, k-fold cross-validation aligned on arc-length
//! fractions, and a Monte-Carlo check of the degrees-of-freedom count.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::{StandardizeMode, StandardizedDesign};
use crate::error::{LarsError, Result};
use crate::linalg;
use crate::path::{fs_path, lar_path, lasso_path, CoefficientPath, PathMethod};
use crate::rng;

/// Penalty multiplier applied per knot in a Cp curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MultSchedule {
    /// One multiplier for every knot (classical Cp uses 2).
    Fixed(f64),
    /// A per-knot sequence, e.g. `log(n/k)` which depends on the step.
    PerKnot(Vec<f64>),
}

/// One row of a Cp report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpRow {
    pub step_index: usize,
    pub rss: f64,
    pub df: f64,
    pub mult: f64,
    pub cp: f64,
}

/// Penalized-risk values along a path with the minimizing knot.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CpReport {
    pub mult: MultSchedule,
    pub sigma2: f64,
    pub per_knot: Vec<CpRow>,
    /// Step index attaining the minimal Cp; ties go to the smallest model.
    pub selected: usize,
}

impl CpReport {
    /// The row for the selected knot.
    pub fn selected_row(&self) -> &CpRow {
        &self.per_knot[self.selected]
    }
}

/// Full-model residual variance estimate
/// `sigma2 = RSS_OLS / (n - m - 1)` on a standardized design (the
/// centering intercept consumes one degree of freedom).
pub fn estimate_sigma2(design: &StandardizedDesign) -> Result<f64> {
    let n = design.n();
    let m = design.m();
    let intercept_df = usize::from(!design.raw_mode());
    if n <= m + intercept_df {
        return Err(LarsError::SigmaUnestimable(format!(
            "n = {n} leaves no residual degrees of freedom beyond m = {m}"
        )));
    }
    let y = design.y().to_owned();
    let beta = linalg::ols(&design.x(), &y).map_err(|()| {
        LarsError::SigmaUnestimable("full design is numerically collinear".into())
    })?;
    let resid = &y - &design.x().dot(&beta);
    let rss = resid.dot(&resid);
    Ok(rss / (n - m - intercept_df) as f64)
}

/// Cp curve with a single multiplier: `cp = rss/sigma2 - n + mult * df`.
///
/// The degrees of freedom at a knot are the active-set size for LAR and
/// the nonzero-coefficient count for Lasso and Forward Stagewise paths
/// (approximate for the latter two).
pub fn cp_curve(
    path: &CoefficientPath,
    design: &StandardizedDesign,
    sigma2: f64,
    mult: f64,
) -> Result<CpReport> {
    cp_curve_schedule(path, design, sigma2, MultSchedule::Fixed(mult))
}

/// Cp curve with a per-knot multiplier schedule.
pub fn cp_curve_schedule(
    path: &CoefficientPath,
    design: &StandardizedDesign,
    sigma2: f64,
    mult: MultSchedule,
) -> Result<CpReport> {
    if sigma2 <= 0.0 || !sigma2.is_finite() {
        return Err(LarsError::InvalidParameter(format!(
            "sigma2 must be positive and finite, got {sigma2}"
        )));
    }
    if let MultSchedule::PerKnot(seq) = &mult {
        if seq.len() != path.knots.len() {
            return Err(LarsError::DimensionMismatch(format!(
                "{} multipliers for {} knots",
                seq.len(),
                path.knots.len()
            )));
        }
    }
    let n = design.n() as f64;
    let y = design.y().to_owned();
    let mut rows = Vec::with_capacity(path.knots.len());
    for (k, knot) in path.knots.iter().enumerate() {
        let resid = &y - &design.x().dot(&knot.beta);
        let rss = resid.dot(&resid);
        let df = match path.method {
            PathMethod::Lar => knot.active.len() as f64,
            _ => knot.beta.iter().filter(|v| **v != 0.0).count() as f64,
        };
        let mk = match &mult {
            MultSchedule::Fixed(v) => *v,
            MultSchedule::PerKnot(seq) => seq[k],
        };
        rows.push(CpRow {
            step_index: knot.step_index,
            rss,
            df,
            mult: mk,
            cp: rss / sigma2 - n + mk * df,
        });
    }
    let mut selected = 0;
    for (k, row) in rows.iter().enumerate() {
        if row.cp < rows[selected].cp {
            selected = k;
        }
    }
    Ok(CpReport {
        mult,
        sigma2,
        per_knot: rows,
        selected,
    })
}

/// The named multiplier presets discussed alongside Cp stopping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultPresets {
    pub two: f64,
    pub four: f64,
    /// BIC: `log(sample size)`.
    pub bic: f64,
    /// The model-dependent penalty `log(n/k)`.
    pub loubes_massart: f64,
}

/// Evaluate the presets for sample size `n` at step `k`.
pub fn mult_presets(n: usize, k: usize) -> Result<MultPresets> {
    if n < 2 {
        return Err(LarsError::InvalidParameter(format!(
            "need n >= 2 for the multiplier presets, got {n}"
        )));
    }
    if k == 0 || k >= n {
        return Err(LarsError::InvalidParameter(format!(
            "log(n/k) needs 1 <= k < n, got k = {k}, n = {n}"
        )));
    }
    Ok(MultPresets {
        two: 2.0,
        four: 4.0,
        bic: (n as f64).ln(),
        loubes_massart: (n as f64 / k as f64).ln(),
    })
}

/// Per-knot `log(n/k)` schedule for a path, using `k = max(step, 1)`.
pub fn loubes_massart_schedule(n: usize, path: &CoefficientPath) -> Vec<f64> {
    path.knots
        .iter()
        .map(|knot| (n as f64 / knot.step_index.max(1) as f64).ln())
        .collect()
}

/// Two-sided standard normal tail probability at `sqrt(mult)`: the test
/// size of the rule "prefer the larger model when |t| exceeds
/// sqrt(mult)". `mult = 2` gives about 16%, `mult = 4` about 5%.
pub fn threshold_alpha(mult: f64) -> f64 {
    assert!(mult > 0.0, "mult must be positive");
    // 2 * (1 - Phi(sqrt(mult))) = erfc(sqrt(mult / 2))
    libm::erfc((mult / 2.0).sqrt())
}

/// Cross-validation summary over a grid of arc-length fractions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: usize,
    pub grid: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub se_error: Vec<f64>,
    /// Grid fraction minimizing the mean error; ties go to the smallest.
    pub selected_fraction: f64,
    pub seed: u64,
}

/// Forward Stagewise knot cap used when a caller does not control it.
pub fn default_fs_knot_cap(m: usize) -> usize {
    32 * m + 128
}

fn fit_by_method(design: &StandardizedDesign, method: PathMethod) -> Result<CoefficientPath> {
    match method {
        PathMethod::Lar => lar_path(design, design.max_steps_default()),
        PathMethod::Lasso => lasso_path(design),
        PathMethod::ForwardStagewise => fs_path(design, default_fs_knot_cap(design.m())),
    }
}

/// K-fold cross-validation of a path method.
///
/// Folds are assigned by a seeded shuffle. Each fold refits the path on
/// the remaining rows (re-standardizing within the fold) and evaluates
/// squared prediction error at every grid fraction of that path's own
/// total arc length. A fold whose training rows contain a constant column
/// triggers one re-draw of the whole assignment before failing hard.
pub fn kfold_cv(
    design: &StandardizedDesign,
    method: PathMethod,
    folds: usize,
    grid: &[f64],
    seed: u64,
) -> Result<CvReport> {
    let n = design.n();
    if folds < 2 {
        return Err(LarsError::InvalidParameter(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    // K = n is leave-one-out; beyond that a fold would be empty, and the
    // training part must keep at least two rows.
    if folds > n || n - n.div_ceil(folds) < 2 {
        return Err(LarsError::InvalidParameter(format!(
            "{folds}-fold cross-validation is not feasible with n = {n}"
        )));
    }
    if grid.is_empty() {
        return Err(LarsError::InvalidParameter("empty fraction grid".into()));
    }
    if grid.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(LarsError::InvalidParameter(
            "grid fractions must lie in [0, 1]".into(),
        ));
    }

    let raw_x = design.raw_x();
    let raw_y = design.raw_y();
    let mode = if design.raw_mode() {
        StandardizeMode::Raw
    } else {
        StandardizeMode::Standard
    };

    let mut errors: Option<Array2<f64>> = None;
    let mut redraw_reason = String::new();
    'attempt: for attempt in 0..2 {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(seed, attempt));
        let mut fold_errors = Array2::zeros((folds, grid.len()));
        let mut start = 0;
        for f in 0..folds {
            let size = n / folds + usize::from(f < n % folds);
            let test: &[usize] = &order[start..start + size];
            start += size;
            let train: Vec<usize> = order
                .iter()
                .copied()
                .filter(|i| !test.contains(i))
                .collect();

            let x_train = select_rows(&raw_x, &train);
            let y_train = select_elems(&raw_y, &train);
            let fold_design = match StandardizedDesign::standardize(&x_train, &y_train, mode) {
                Ok(d) => d,
                Err(e @ LarsError::ConstantColumn(_)) => {
                    redraw_reason = e.to_string();
                    continue 'attempt;
                }
                Err(e) => return Err(e),
            };
            let path = fit_by_method(&fold_design, method)?;
            let total = path.total_arc_length();
            for (gi, &frac) in grid.iter().enumerate() {
                let beta = path.interpolate(frac * total);
                let (icept, coefs) = if fold_design.raw_mode() {
                    (0.0, beta)
                } else {
                    fold_design.destandardize(&beta)?
                };
                let mut err = 0.0;
                for &row in test {
                    let pred = icept + raw_x.row(row).dot(&coefs);
                    err += (raw_y[row] - pred).powi(2);
                }
                fold_errors[[f, gi]] = err / test.len() as f64;
            }
        }
        errors = Some(fold_errors);
        break;
    }
    let errors = errors.ok_or(LarsError::DegenerateFold(redraw_reason))?;

    let mut mean_error = Vec::with_capacity(grid.len());
    let mut se_error = Vec::with_capacity(grid.len());
    for gi in 0..grid.len() {
        let col = errors.column(gi);
        let mean = col.sum() / folds as f64;
        let var = col.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (folds - 1) as f64;
        mean_error.push(mean);
        se_error.push((var / folds as f64).sqrt());
    }
    let mut sel = 0;
    for gi in 1..grid.len() {
        let better = mean_error[gi] < mean_error[sel]
            || (mean_error[gi] == mean_error[sel] && grid[gi] < grid[sel]);
        if better {
            sel = gi;
        }
    }
    Ok(CvReport {
        folds,
        grid: grid.to_vec(),
        mean_error,
        se_error,
        selected_fraction: grid[sel],
        seed,
    })
}

fn select_rows(x: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((rows.len(), x.ncols()));
    for (ri, &r) in rows.iter().enumerate() {
        out.row_mut(ri).assign(&x.row(r));
    }
    out
}

fn select_elems(y: &Array1<f64>, rows: &[usize]) -> Array1<f64> {
    rows.iter().map(|&r| y[r]).collect()
}

/// Monte-Carlo estimate of the degrees of freedom of the k-step LAR fit:
/// `df = sum_i cov(muhat_i, y_i) / sigma^2` with the covariance taken over
/// replicated responses `y = mu_true + sigma * z`.
///
/// Returns the estimate and its Monte-Carlo standard error. The fit is
/// the path component only (no intercept term; with centered columns the
/// fitted path is invariant to the response mean).
pub fn df_monte_carlo(
    design: &StandardizedDesign,
    mu_true: &Array1<f64>,
    sigma: f64,
    k: usize,
    reps: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let n = design.n();
    if mu_true.len() != n {
        return Err(LarsError::DimensionMismatch(format!(
            "mu_true has {} entries for {} rows",
            mu_true.len(),
            n
        )));
    }
    if reps < 100 {
        return Err(LarsError::InvalidParameter(format!(
            "need at least 100 replicates, got {reps}"
        )));
    }
    if sigma <= 0.0 || sigma.is_nan() {
        return Err(LarsError::InvalidParameter("sigma must be positive".into()));
    }
    if k > design.max_steps_default() {
        return Err(LarsError::InvalidParameter(format!(
            "k = {} exceeds the supported {} steps",
            k,
            design.max_steps_default()
        )));
    }

    let mut ys = Array2::zeros((reps, n));
    let mut fits = Array2::zeros((reps, n));
    for r in 0..reps {
        let mut stream = rng::stream(seed, r as u64);
        let y: Array1<f64> = (0..n)
            .map(|i| mu_true[i] + sigma * stream.sample::<f64, _>(StandardNormal))
            .collect();
        let sim = design.with_response(y.clone())?;
        let path = lar_path(&sim, k)?;
        let fit = design.x().dot(path.terminal_beta());
        ys.row_mut(r).assign(&y);
        fits.row_mut(r).assign(&fit);
    }

    let y_mean = ys.mean_axis(ndarray::Axis(0)).unwrap();
    let fit_mean = fits.mean_axis(ndarray::Axis(0)).unwrap();
    let sigma2 = sigma * sigma;
    // Per-replicate covariance contributions; df is their scaled mean.
    let mut t = Vec::with_capacity(reps);
    for r in 0..reps {
        let mut s = 0.0;
        for i in 0..n {
            s += (fits[[r, i]] - fit_mean[i]) * (ys[[r, i]] - y_mean[i]);
        }
        t.push(s / sigma2);
    }
    let scale = reps as f64 / (reps - 1) as f64;
    let df_hat = t.iter().sum::<f64>() / (reps - 1) as f64;
    let t_mean = t.iter().sum::<f64>() / reps as f64;
    let t_var = t.iter().map(|v| (v - t_mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let mc_se = scale * (t_var / reps as f64).sqrt();
    Ok((df_hat, mc_se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn small_design() -> StandardizedDesign {
        let x = array![
            [1.0, 0.3],
            [2.0, -1.0],
            [3.0, 0.4],
            [4.0, 2.0],
            [5.0, -0.8],
            [6.0, 1.4],
            [7.0, 0.0],
            [8.0, -2.1],
            [9.0, 1.1],
            [10.0, 0.6]
        ];
        let y = array![1.2, 1.9, 3.1, 4.4, 4.8, 6.2, 7.1, 7.7, 9.0, 10.3];
        StandardizedDesign::standardize(&x, &y, StandardizeMode::Standard).unwrap()
    }

    #[test]
    fn cp_identity_holds_on_every_row() {
        let d = small_design();
        let p = lar_path(&d, 2).unwrap();
        let report = cp_curve(&p, &d, 0.5, 2.0).unwrap();
        for row in &report.per_knot {
            let expect = row.rss / 0.5 - d.n() as f64 + row.mult * row.df;
            assert_eq!(row.cp, expect);
        }
    }

    #[test]
    fn cp_saturated_fit_formula() {
        // rss = 0, n = 10, k = 10, mult = 2 -> cp = 10.
        let cp = 0.0 / 1.0 - 10.0 + 2.0 * 10.0;
        assert_abs_diff_eq!(cp, 10.0);
    }

    #[test]
    fn cp_zero_mult_selects_terminal() {
        let d = small_design();
        let p = lar_path(&d, 2).unwrap();
        let report = cp_curve(&p, &d, 0.5, 0.0).unwrap();
        assert_eq!(report.selected, p.knots.len() - 1);
    }

    #[test]
    fn cp_rejects_bad_sigma2() {
        let d = small_design();
        let p = lar_path(&d, 2).unwrap();
        assert!(cp_curve(&p, &d, 0.0, 2.0).is_err());
        assert!(cp_curve(&p, &d, -1.0, 2.0).is_err());
    }

    #[test]
    fn sigma2_matches_hand_ols_on_fixture() {
        // n = 12, single orthonormal-ish column, known residuals.
        let raw: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let x = Array2::from_shape_vec((12, 1), raw).unwrap();
        let e = array![0.3, -0.2, 0.1, 0.4, -0.5, 0.2, -0.1, 0.3, -0.3, 0.1, -0.2, -0.1];
        let d0 = StandardizedDesign::standardize(&x, &Array1::zeros(12), StandardizeMode::Standard)
            .unwrap();
        let y: Array1<f64> = (0..12).map(|i| d0.x()[[i, 0]] + e[i]).collect();
        let d = StandardizedDesign::standardize(&x, &y, StandardizeMode::Standard).unwrap();
        let s2 = estimate_sigma2(&d).unwrap();
        // Direct least squares on the standardized column.
        let xs = d.x().column(0).to_owned();
        let yc = d.y().to_owned();
        let bhat = xs.dot(&yc) / xs.dot(&xs);
        let resid = &yc - &(&xs * bhat);
        assert_abs_diff_eq!(s2, resid.dot(&resid) / 10.0, epsilon = 1e-12);
    }

    #[test]
    fn sigma2_zero_when_response_in_span_and_cp_refuses() {
        // y lies exactly in the span of the centered column: the residual
        // variance estimate is zero and Cp rejects it as a divisor.
        let x = array![[1.0], [2.0], [3.0], [4.0], [5.0]];
        let y = array![2.0, 4.0, 6.0, 8.0, 10.0];
        let d = StandardizedDesign::standardize(&x, &y, StandardizeMode::Standard).unwrap();
        let s2 = estimate_sigma2(&d).unwrap();
        assert!(s2.abs() < 1e-24);
        let p = lar_path(&d, 1).unwrap();
        assert!(cp_curve(&p, &d, s2, 2.0).is_err());
    }

    #[test]
    fn sigma2_unestimable_when_saturated() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let y = array![1.0, 2.0, 3.0];
        let d = StandardizedDesign::standardize(&x, &y, StandardizeMode::Standard).unwrap();
        assert!(matches!(
            estimate_sigma2(&d),
            Err(LarsError::SigmaUnestimable(_))
        ));
    }

    #[test]
    fn presets_match_formulas() {
        let p = mult_presets(8, 1).unwrap();
        assert_eq!(p.two, 2.0);
        assert_eq!(p.four, 4.0);
        assert_abs_diff_eq!(p.bic, 8.0_f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(p.loubes_massart, 8.0_f64.ln(), epsilon = 1e-15);
        let p = mult_presets(100, 50).unwrap();
        assert_abs_diff_eq!(p.loubes_massart, 2.0_f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            mult_presets(100, 1).unwrap().loubes_massart,
            100.0_f64.ln(),
            epsilon = 1e-15
        );
        assert!(mult_presets(10, 10).is_err());
        assert!(mult_presets(10, 0).is_err());
    }

    #[test]
    fn threshold_alpha_reference_points() {
        let a2 = threshold_alpha(2.0);
        assert!((0.156..=0.158).contains(&a2), "alpha(2) = {a2}");
        let a4 = threshold_alpha(4.0);
        assert!((0.045..=0.046).contains(&a4), "alpha(4) = {a4}");
        // Limit toward zero is 1.
        assert!(threshold_alpha(1e-12) > 0.999);
        // Strictly decreasing.
        assert!(threshold_alpha(1.0) > threshold_alpha(1.5));
    }

    #[test]
    fn loubes_massart_schedule_uses_max_k_1() {
        let d = small_design();
        let p = lar_path(&d, 2).unwrap();
        let seq = loubes_massart_schedule(d.n(), &p);
        assert_eq!(seq.len(), p.knots.len());
        assert_abs_diff_eq!(seq[0], (d.n() as f64).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(seq[1], (d.n() as f64).ln(), epsilon = 1e-15);
        if seq.len() > 2 {
            assert_abs_diff_eq!(seq[2], (d.n() as f64 / 2.0).ln(), epsilon = 1e-15);
        }
    }

    #[test]
    fn kfold_cv_reproducible_and_validated() {
        let d = small_design();
        let grid = [0.0, 0.5, 1.0];
        let a = kfold_cv(&d, PathMethod::Lar, 5, &grid, 11).unwrap();
        let b = kfold_cv(&d, PathMethod::Lar, 5, &grid, 11).unwrap();
        assert_eq!(a.mean_error, b.mean_error);
        assert_eq!(a.selected_fraction, b.selected_fraction);
        assert!(kfold_cv(&d, PathMethod::Lar, 1, &grid, 11).is_err());
        assert!(kfold_cv(&d, PathMethod::Lar, 11, &grid, 11).is_err());
        assert!(kfold_cv(&d, PathMethod::Lar, 5, &[], 11).is_err());
        assert!(kfold_cv(&d, PathMethod::Lar, 5, &[1.5], 11).is_err());
    }

    #[test]
    fn df_zero_steps_is_exactly_zero() {
        let d = small_design();
        let mu = Array1::zeros(d.n());
        let (df, se) = df_monte_carlo(&d, &mu, 1.0, 0, 200, 3).unwrap();
        assert_eq!(df, 0.0);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn df_rejects_bad_arguments() {
        let d = small_design();
        let mu = Array1::zeros(d.n());
        assert!(df_monte_carlo(&d, &mu, 1.0, 1, 50, 3).is_err());
        assert!(df_monte_carlo(&d, &mu, 0.0, 1, 200, 3).is_err());
        let bad = Array1::zeros(3);
        assert!(df_monte_carlo(&d, &bad, 1.0, 1, 200, 3).is_err());
    }
}
