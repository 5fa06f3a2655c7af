//! Predictor/response preprocessing.
//!
//! [`StandardizedDesign`] holds a centered, unit-norm predictor matrix
//! together with the metadata needed to map coefficients back to the
//! original scale. All path solvers operate on this type.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{LarsError, Result};

/// Whether [`StandardizedDesign::standardize`] rescales its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StandardizeMode {
    /// Center each column and scale it to unit L2 norm; center the response.
    Standard,
    /// Store the inputs untouched. Correlations become plain inner
    /// products and no de-standardization is available.
    Raw,
}

/// A design matrix prepared for path computation.
#[derive(Debug, Clone)]
pub struct StandardizedDesign {
    x: Array2<f64>,
    y: Array1<f64>,
    column_means: Array1<f64>,
    column_scales: Array1<f64>,
    y_mean: f64,
    raw_mode: bool,
}

impl StandardizedDesign {
    /// Build a design from raw data.
    ///
    /// In [`StandardizeMode::Standard`] every column is centered and scaled
    /// to unit L2 norm and the response is centered. Constant columns are
    /// rejected with their index. In raw mode the inputs are stored as
    /// given.
    pub fn standardize(
        raw_x: &Array2<f64>,
        raw_y: &Array1<f64>,
        mode: StandardizeMode,
    ) -> Result<Self> {
        let (n, m) = raw_x.dim();
        if raw_y.len() != n {
            return Err(LarsError::DimensionMismatch(format!(
                "x has {} rows but y has {} entries",
                n,
                raw_y.len()
            )));
        }
        if n < 2 {
            return Err(LarsError::InvalidParameter(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if m < 1 {
            return Err(LarsError::InvalidParameter(
                "need at least one predictor column".into(),
            ));
        }

        match mode {
            StandardizeMode::Raw => Ok(Self {
                x: raw_x.clone(),
                y: raw_y.clone(),
                column_means: Array1::zeros(m),
                column_scales: Array1::ones(m),
                y_mean: 0.0,
                raw_mode: true,
            }),
            StandardizeMode::Standard => {
                let mut x = raw_x.clone();
                let mut means = Array1::zeros(m);
                let mut scales = Array1::zeros(m);
                for j in 0..m {
                    let mean = x.column(j).mean().unwrap();
                    means[j] = mean;
                    let mut col = x.column_mut(j);
                    col.mapv_inplace(|v| v - mean);
                    let norm = col.dot(&col).sqrt();
                    if norm <= 0.0 {
                        return Err(LarsError::ConstantColumn(j));
                    }
                    scales[j] = norm;
                    col.mapv_inplace(|v| v / norm);
                }
                let y_mean = raw_y.mean().unwrap();
                let y = raw_y.mapv(|v| v - y_mean);
                Ok(Self {
                    x,
                    y,
                    column_means: means,
                    column_scales: scales,
                    y_mean,
                    raw_mode: false,
                })
            }
        }
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of predictor columns.
    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    /// The (standardized) predictor matrix.
    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    /// The (centered) response.
    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn column_means(&self) -> ArrayView1<'_, f64> {
        self.column_means.view()
    }

    pub fn column_scales(&self) -> ArrayView1<'_, f64> {
        self.column_scales.view()
    }

    pub fn y_mean(&self) -> f64 {
        self.y_mean
    }

    pub fn raw_mode(&self) -> bool {
        self.raw_mode
    }

    /// Inner products `c = X^T r` of every column with a residual vector.
    ///
    /// With unit-norm centered columns this is proportional to the Pearson
    /// correlation, so `argmax |c_j|` is the most correlated predictor.
    pub fn correlations(&self, residual: &Array1<f64>) -> Result<Array1<f64>> {
        if residual.len() != self.n() {
            return Err(LarsError::DimensionMismatch(format!(
                "residual has {} entries for {} rows",
                residual.len(),
                self.n()
            )));
        }
        Ok(self.x.t().dot(residual))
    }

    /// Map coefficients from the standardized scale back to the original
    /// data scale, returning `(intercept, coefficients)`.
    pub fn destandardize(&self, beta: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
        if self.raw_mode {
            return Err(LarsError::NotStandardized);
        }
        if beta.len() != self.m() {
            return Err(LarsError::DimensionMismatch(format!(
                "beta has {} entries for {} columns",
                beta.len(),
                self.m()
            )));
        }
        let coefs = beta / &self.column_scales;
        let intercept = self.y_mean - coefs.dot(&self.column_means);
        Ok((intercept, coefs))
    }

    /// Reconstruct the raw predictor matrix this design was built from.
    pub fn raw_x(&self) -> Array2<f64> {
        if self.raw_mode {
            return self.x.clone();
        }
        let mut out = self.x.clone();
        for j in 0..self.m() {
            let mean = self.column_means[j];
            let scale = self.column_scales[j];
            out.column_mut(j).mapv_inplace(|v| v * scale + mean);
        }
        out
    }

    /// Reconstruct the raw response vector.
    pub fn raw_y(&self) -> Array1<f64> {
        self.y.mapv(|v| v + self.y_mean)
    }

    /// Replace the response, keeping the predictor matrix and metadata.
    ///
    /// Intended for simulation studies that regenerate `y` on a fixed
    /// design. The response is stored as given; with centered columns the
    /// fitted paths are invariant to its mean.
    pub fn with_response(&self, y: Array1<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(LarsError::DimensionMismatch(format!(
                "response has {} entries for {} rows",
                y.len(),
                self.n()
            )));
        }
        let mut out = self.clone();
        out.y = y;
        out.y_mean = 0.0;
        Ok(out)
    }

    /// Default step cap for LAR: centering consumes one degree of freedom,
    /// so a standardized design supports at most `n - 1` entries.
    pub fn max_steps_default(&self) -> usize {
        if self.raw_mode {
            self.m().min(self.n())
        } else {
            self.m().min(self.n() - 1)
        }
    }

    /// FNV-1a hash of the design contents, used to tie a computed path to
    /// the design it was fit on.
    pub fn fingerprint(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x1000_0000_01b3);
            }
        };
        eat(&(self.n() as u64).to_le_bytes());
        eat(&(self.m() as u64).to_le_bytes());
        eat(&[u8::from(self.raw_mode)]);
        for v in self.x.iter() {
            eat(&v.to_bits().to_le_bytes());
        }
        for v in self.y.iter() {
            eat(&v.to_bits().to_le_bytes());
        }
        eat(&self.y_mean.to_bits().to_le_bytes());
        format!("{h:016x}")
    }
}
