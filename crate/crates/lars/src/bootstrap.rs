//! Pairs bootstrap for scalar functionals of a fitted model.
//!
//! Whole `(x, y)` rows are resampled with replacement and the caller's
//! statistic — typically the entire fitting pipeline — is re-run on every
//! replicate. Resampling rows rather than residuals makes no assumption
//! about the error structure.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LarsError, Result};
use crate::rng;

/// Replicate values and the derived standard error of a statistic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BootstrapReport {
    /// Requested number of replicates.
    pub b_reps: usize,
    /// Statistic values of the successful replicates, in replicate order.
    pub statistic_values: Vec<f64>,
    /// Replicates skipped because the statistic failed (e.g. a resample
    /// produced a constant or collinear column).
    pub failed_replicates: usize,
    /// Statistic evaluated on the original data.
    pub point_estimate: f64,
    /// Sample standard deviation of the replicate values.
    pub se: f64,
    pub seed: u64,
}

/// Bootstrap standard error of `statistic` over `b_reps` row-resamples.
///
/// Replicate `r` draws its indices from the ChaCha8 stream `(seed, r)`,
/// so the report is reproducible and independent of evaluation order.
/// Failed replicates (the statistic returns an error or a non-finite
/// value) are skipped and counted; more than 20% failures is an error.
pub fn bootstrap_se<F>(
    raw_x: &Array2<f64>,
    raw_y: &Array1<f64>,
    statistic: F,
    b_reps: usize,
    seed: u64,
) -> Result<BootstrapReport>
where
    F: Fn(&Array2<f64>, &Array1<f64>) -> Result<f64>,
{
    let n = raw_x.nrows();
    if raw_y.len() != n {
        return Err(LarsError::DimensionMismatch(format!(
            "x has {} rows but y has {} entries",
            n,
            raw_y.len()
        )));
    }
    if b_reps < 50 {
        return Err(LarsError::InvalidParameter(format!(
            "need at least 50 bootstrap replicates, got {b_reps}"
        )));
    }

    let point_estimate = statistic(raw_x, raw_y)?;

    let mut values = Vec::with_capacity(b_reps);
    let mut failed = 0usize;
    let mut rx = Array2::zeros((n, raw_x.ncols()));
    let mut ry = Array1::zeros(n);
    for r in 0..b_reps {
        let mut stream = rng::stream(seed, r as u64);
        for i in 0..n {
            let pick = stream.random_range(0..n);
            rx.row_mut(i).assign(&raw_x.row(pick));
            ry[i] = raw_y[pick];
        }
        match statistic(&rx, &ry) {
            Ok(v) if v.is_finite() => values.push(v),
            _ => failed += 1,
        }
    }
    if failed * 5 > b_reps {
        return Err(LarsError::TooManyFailures {
            failed,
            total: b_reps,
        });
    }

    let k = values.len();
    let mean = values.iter().sum::<f64>() / k as f64;
    let se = if k > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(BootstrapReport {
        b_reps,
        statistic_values: values,
        failed_replicates: failed,
        point_estimate,
        se,
        seed,
    })
}
