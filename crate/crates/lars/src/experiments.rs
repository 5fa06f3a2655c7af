//! Reproducible simulation studies: the penalty-multiplier sweep, the
//! uniform-predictor centering experiment, interaction expansion and the
//! marginality audit.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::design::{StandardizeMode, StandardizedDesign};
use crate::error::{LarsError, Result};
use crate::path::{lar_path, lasso_path, PathMethod};
use crate::rng;
use crate::select::{cp_curve, kfold_cv};

/// Parentage of an appended product column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionTerm {
    /// Index of the appended column in the expanded matrix.
    pub column: usize,
    pub parent_i: usize,
    pub parent_j: usize,
}

/// Append all pairwise products (and per-column squares when requested)
/// to a raw predictor matrix. The map records parentage for the
/// marginality audit; squares appear as `(j, j)` pairs. Duplicate columns
/// are not detected.
pub fn gen_interactions(
    raw_x: &Array2<f64>,
    include_squares: bool,
) -> Result<(Array2<f64>, Vec<InteractionTerm>)> {
    let (n, m) = raw_x.dim();
    if m < 2 {
        return Err(LarsError::InvalidParameter(format!(
            "interaction expansion needs at least 2 columns, got {m}"
        )));
    }
    let extra = m * (m - 1) / 2 + if include_squares { m } else { 0 };
    let mut out = Array2::zeros((n, m + extra));
    out.slice_mut(ndarray::s![.., ..m]).assign(raw_x);
    let mut map = Vec::with_capacity(extra);
    let mut col = m;
    for i in 0..m {
        for j in i + 1..m {
            for r in 0..n {
                out[[r, col]] = raw_x[[r, i]] * raw_x[[r, j]];
            }
            map.push(InteractionTerm {
                column: col,
                parent_i: i,
                parent_j: j,
            });
            col += 1;
        }
    }
    if include_squares {
        for j in 0..m {
            for r in 0..n {
                out[[r, col]] = raw_x[[r, j]] * raw_x[[r, j]];
            }
            map.push(InteractionTerm {
                column: col,
                parent_i: j,
                parent_j: j,
            });
            col += 1;
        }
    }
    Ok((out, map))
}

/// One failed hierarchy constraint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalityViolation {
    pub column: usize,
    pub parent_i: usize,
    pub parent_j: usize,
    pub interaction_coef: f64,
    pub parent_bound: f64,
}

/// Audit of the constraint `|beta_{i:j}| <= min(|beta_i|, |beta_j|)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarginalityAudit {
    pub violations: Vec<MarginalityViolation>,
    pub satisfied: bool,
}

/// Check every mapped product column against its parents.
///
/// The inequality is scale dependent: `beta` must be on the original
/// (de-standardized) scale, since rescaling columns rescales coefficients
/// unevenly.
pub fn marginality_check(
    beta: &Array1<f64>,
    map: &[InteractionTerm],
) -> Result<MarginalityAudit> {
    let mut violations = Vec::new();
    for term in map {
        if term.column >= beta.len() || term.parent_i >= beta.len() || term.parent_j >= beta.len()
        {
            return Err(LarsError::InvalidParameter(format!(
                "interaction map entry ({}, {}, {}) exceeds {} coefficients",
                term.column,
                term.parent_i,
                term.parent_j,
                beta.len()
            )));
        }
        let inter = beta[term.column].abs();
        let bound = beta[term.parent_i].abs().min(beta[term.parent_j].abs());
        if inter > bound + 1e-12 {
            violations.push(MarginalityViolation {
                column: term.column,
                parent_i: term.parent_i,
                parent_j: term.parent_j,
                interaction_coef: inter,
                parent_bound: bound,
            });
        }
    }
    Ok(MarginalityAudit {
        satisfied: violations.is_empty(),
        violations,
    })
}

/// Configuration of the penalty-multiplier sweep on a synthetic Gaussian
/// design.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultSweepConfig {
    pub n: usize,
    pub m: usize,
    pub true_beta: Vec<f64>,
    pub sigma: f64,
    pub mult_list: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

impl Default for MultSweepConfig {
    /// The committed default: 100 observations, 50 predictors with 30
    /// nonzero coefficients of mixed strength, noise level placing the
    /// weak ones near the selection threshold.
    fn default() -> Self {
        let mut beta = vec![0.0; 50];
        for (j, b) in beta.iter_mut().enumerate().take(30) {
            let magnitude = 0.25 * (1 + (j % 5)) as f64;
            *b = if j % 2 == 0 { magnitude } else { -magnitude };
        }
        MultSweepConfig {
            n: 100,
            m: 50,
            true_beta: beta,
            sigma: 4.0,
            mult_list: vec![2.0, 4.0],
            reps: 200,
            seed: 20240209,
        }
    }
}

/// Aggregate outcome of the sweep: average selected model size and average
/// squared estimation error per multiplier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultSweepResult {
    pub mult_values: Vec<f64>,
    pub avg_selected_size: Vec<f64>,
    pub avg_sq_error: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

/// Run the sweep: per replicate draw a Gaussian design and response, fit
/// the full LAR path, select a knot by Cp at every multiplier (with the
/// configured noise level taken as known), and record the selected size
/// and `||muhat - mu||^2 / n`.
pub fn mult_sweep(config: &MultSweepConfig) -> Result<MultSweepResult> {
    if config.reps < 50 {
        return Err(LarsError::InvalidParameter(format!(
            "mult sweep needs at least 50 replicates, got {}",
            config.reps
        )));
    }
    if config.true_beta.len() != config.m {
        return Err(LarsError::DimensionMismatch(format!(
            "true_beta has {} entries for m = {}",
            config.true_beta.len(),
            config.m
        )));
    }
    if config.mult_list.is_empty() {
        return Err(LarsError::InvalidParameter("empty mult_list".into()));
    }
    let n = config.n;
    let m = config.m;
    let beta_true = Array1::from(config.true_beta.clone());
    let mut size_sums = vec![0.0; config.mult_list.len()];
    let mut err_sums = vec![0.0; config.mult_list.len()];

    for rep in 0..config.reps {
        let mut stream = rng::stream(config.seed, rep as u64);
        let mut x = Array2::zeros((n, m));
        for r in 0..n {
            for c in 0..m {
                x[[r, c]] = stream.sample::<f64, _>(StandardNormal);
            }
        }
        let mu: Array1<f64> = x.dot(&beta_true);
        let y: Array1<f64> = (0..n)
            .map(|i| mu[i] + config.sigma * stream.sample::<f64, _>(StandardNormal))
            .collect();
        let design = StandardizedDesign::standardize(&x, &y, StandardizeMode::Standard)?;
        let path = lar_path(&design, design.max_steps_default())?;

        for (mi, &mult) in config.mult_list.iter().enumerate() {
            let (selected_df, beta_std) = if config.sigma > 0.0 {
                let report = cp_curve(&path, &design, config.sigma * config.sigma, mult)?;
                let row = report.selected_row();
                (row.df, &path.knots[report.selected].beta)
            } else {
                // Noiseless limit: Cp is undefined at sigma = 0; the first
                // exact fit is selected for every multiplier.
                let y_norm = design.y().dot(&design.y());
                let mut pick = path.knots.len() - 1;
                for (k, knot) in path.knots.iter().enumerate() {
                    let resid = &design.y().to_owned() - &design.x().dot(&knot.beta);
                    if resid.dot(&resid) <= 1e-12 * y_norm.max(f64::MIN_POSITIVE) {
                        pick = k;
                        break;
                    }
                }
                (path.knots[pick].active.len() as f64, &path.knots[pick].beta)
            };
            let (icept, coefs) = design.destandardize(beta_std)?;
            let muhat = x.dot(&coefs) + icept;
            let err = muhat
                .iter()
                .zip(mu.iter())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / n as f64;
            size_sums[mi] += selected_df;
            err_sums[mi] += err;
        }
    }
    let reps = config.reps as f64;
    Ok(MultSweepResult {
        mult_values: config.mult_list.clone(),
        avg_selected_size: size_sums.iter().map(|s| s / reps).collect(),
        avg_sq_error: err_sums.iter().map(|s| s / reps).collect(),
        reps: config.reps,
        seed: config.seed,
    })
}

/// Support of the uniform predictors in the centering experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UniformSupport {
    /// `[0, 1]` — uncentered products inherit their parents' signal.
    #[serde(rename = "unit")]
    Unit,
    /// `[-1/2, 1/2]` — products are nearly orthogonal to the mains.
    #[serde(rename = "centered")]
    Centered,
}

/// Configuration of the uniform-predictor centering experiment: five
/// independent uniform main effects, a true model on the first three, all
/// pairwise interactions as candidates, Lasso path with 10-fold
/// cross-validation selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurlachConfig {
    pub n: usize,
    pub support: UniformSupport,
    pub noise_scale: f64,
    pub reps: usize,
    pub seed: u64,
    /// True coefficients of the five main effects.
    pub main_effects: Vec<f64>,
    pub folds: usize,
    /// Arc-length fractions offered to cross-validation. The committed
    /// default stops at 0.9: the saturated end of the path has every
    /// candidate active and is never selection-relevant.
    pub grid: Vec<f64>,
}

impl TurlachConfig {
    /// The committed default for a given support and noise level.
    pub fn with_defaults(
        support: UniformSupport,
        noise_scale: f64,
        reps: usize,
        seed: u64,
    ) -> Self {
        TurlachConfig {
            n: 100,
            support,
            noise_scale,
            reps,
            seed,
            main_effects: vec![5.0, 4.0, 3.0, 0.0, 0.0],
            folds: 10,
            grid: (0..=18).map(|i| i as f64 * 0.05).collect(),
        }
    }
}

/// Outcome of one replicate of the centering experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TurlachResult {
    pub support: UniformSupport,
    pub noise_scale: f64,
    /// Arc length of the cross-validation selection on the full-data path.
    pub cv_selected_l1: f64,
    /// Columns with nonzero coefficients at the selected point.
    pub active_at_selection: Vec<usize>,
    /// Largest absolute interaction coefficient at the selected point
    /// (standardized scale), reported alongside the exactly-zero
    /// activity criterion.
    pub max_interaction_coef: f64,
    /// All true main effects active and every interaction exactly zero.
    pub truth_recovered: bool,
}

/// One replicate's design and response. The uniform draws and the noise
/// come from the stream `(seed, replicate)` in a fixed order, so the two
/// supports see identical draws up to the affine shift.
fn turlach_draw(config: &TurlachConfig, rep: u64) -> (Array2<f64>, Array1<f64>) {
    let n = config.n;
    let mut stream = rng::stream(config.seed, rep);
    let mut x = Array2::zeros((n, 5));
    for r in 0..n {
        for c in 0..5 {
            let u: f64 = stream.random();
            x[[r, c]] = match config.support {
                UniformSupport::Unit => u,
                UniformSupport::Centered => u - 0.5,
            };
        }
    }
    let mut y = Array1::zeros(n);
    for r in 0..n {
        let mut v = 0.0;
        for c in 0..5 {
            v += config.main_effects[c] * x[[r, c]];
        }
        y[r] = v + config.noise_scale * stream.sample::<f64, _>(StandardNormal);
    }
    (x, y)
}

/// Run the experiment. Uniform draws and noise come from the stream
/// `(seed, replicate)` and are independent of the support, so paired runs
/// on the two supports see identical draws up to the affine shift.
pub fn turlach_experiment(config: &TurlachConfig) -> Result<Vec<TurlachResult>> {
    if config.main_effects.len() != 5 {
        return Err(LarsError::InvalidParameter(format!(
            "expected 5 main-effect coefficients, got {}",
            config.main_effects.len()
        )));
    }
    if config.reps < 20 {
        return Err(LarsError::InvalidParameter(format!(
            "the centering experiment needs at least 20 replicates, got {}",
            config.reps
        )));
    }
    let mut results = Vec::with_capacity(config.reps);
    for rep in 0..config.reps {
        let (x, y) = turlach_draw(config, rep as u64);
        let (expanded, map) = gen_interactions(&x, false)?;
        let design = StandardizedDesign::standardize(&expanded, &y, StandardizeMode::Standard)?;
        let cv = kfold_cv(
            &design,
            PathMethod::Lasso,
            config.folds,
            &config.grid,
            rng::derive_seed(config.seed, rep as u64),
        )?;
        let path = lasso_path(&design)?;
        let t_sel = cv.selected_fraction * path.total_arc_length();
        let beta = path.interpolate(t_sel);
        let active: Vec<usize> = (0..beta.len())
            .filter(|&j| beta[j].abs() > 1e-12)
            .collect();
        let mains_ok = (0..5)
            .filter(|&j| config.main_effects[j] != 0.0)
            .all(|j| active.contains(&j));
        let interactions_ok = map.iter().all(|t| !active.contains(&t.column));
        let max_interaction_coef = map
            .iter()
            .map(|t| beta[t.column].abs())
            .fold(0.0_f64, f64::max);
        results.push(TurlachResult {
            support: config.support,
            noise_scale: config.noise_scale,
            cv_selected_l1: t_sel,
            active_at_selection: active,
            max_interaction_coef,
            truth_recovered: mains_ok && interactions_ok,
        });
    }
    Ok(results)
}
