//! Equiangular direction over a signed active set.

use ndarray::{Array1, Array2};

use crate::design::StandardizedDesign;
use crate::error::{LarsError, Result};
use crate::linalg::PivotedCholesky;

/// The unit vector making equal angles with every signed active column,
/// together with the quantities the step-length formulas need.
#[derive(Debug, Clone)]
pub struct EquiangularFrame {
    /// Active column indices, in entry order.
    pub active: Vec<usize>,
    /// Equiangular unit direction in observation space.
    pub u: Array1<f64>,
    /// Direction weights over the active set: `w = A_A G_A^{-1} 1`.
    pub w: Array1<f64>,
    /// The common inner product `A_A = (1^T G_A^{-1} 1)^{-1/2}`.
    pub a_scalar: f64,
    /// Inner products `a_j = x_j^T u` for every column of the design.
    pub inner_products: Array1<f64>,
}

/// Compute the equiangular frame for `active` columns with the given signs.
///
/// The Gram system is `G_A = S X_A^T X_A S` with `S = diag(signs)`. A
/// collinear active set surfaces as [`LarsError::SingularActiveSet`].
pub fn equiangular_frame(
    design: &StandardizedDesign,
    active: &[usize],
    signs: &[f64],
) -> Result<EquiangularFrame> {
    if active.is_empty() {
        return Err(LarsError::InvalidParameter(
            "active set must be nonempty".into(),
        ));
    }
    if signs.len() != active.len() {
        return Err(LarsError::DimensionMismatch(format!(
            "{} signs for {} active columns",
            signs.len(),
            active.len()
        )));
    }
    let x = design.x();
    let k = active.len();
    let mut gram = Array2::zeros((k, k));
    for (ri, &i) in active.iter().enumerate() {
        for (ci, &j) in active.iter().enumerate() {
            gram[[ri, ci]] = signs[ri] * signs[ci] * x.column(i).dot(&x.column(j));
        }
    }
    frame_from_gram(design, active, signs, &gram)
}

/// Same computation with the signed active Gram matrix already assembled.
pub(crate) fn frame_from_gram(
    design: &StandardizedDesign,
    active: &[usize],
    signs: &[f64],
    signed_gram: &Array2<f64>,
) -> Result<EquiangularFrame> {
    let x = design.x();
    let k = active.len();
    let chol = PivotedCholesky::factor(signed_gram)
        .map_err(|()| LarsError::SingularActiveSet(active.to_vec()))?;
    let z = chol.solve(&Array1::ones(k));
    let total = z.sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(LarsError::SingularActiveSet(active.to_vec()));
    }
    let a_scalar = total.powf(-0.5);
    let w = z.mapv(|v| v * a_scalar);

    let mut u = Array1::zeros(design.n());
    for (pos, &j) in active.iter().enumerate() {
        u.scaled_add(signs[pos] * w[pos], &x.column(j));
    }
    let inner_products = x.t().dot(&u);
    Ok(EquiangularFrame {
        active: active.to_vec(),
        u,
        w,
        a_scalar,
        inner_products,
    })
}
