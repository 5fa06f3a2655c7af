//! # Least angle regression paths
//!
//! Exact piecewise-linear coefficient paths for least angle regression
//! and its Lasso and Forward Stagewise modifications, with the model
//! selection machinery that goes with them:
//!
//! * [`lar_path`], [`lasso_path`], [`fs_path`] — equiangular-step path
//!   solvers over a [`StandardizedDesign`], plus the incremental
//!   [`fs_epsilon`] cross-check and path geometry utilities
//!   ([`CoefficientPath::interpolate`], [`CoefficientPath::arc_length`]).
//! * [`cp_curve`] — penalized-risk stopping with a configurable
//!   degrees-of-freedom multiplier ([`mult_presets`], [`threshold_alpha`]),
//!   [`kfold_cv`] — cross-validation aligned on arc-length fractions, and
//!   [`df_monte_carlo`] — a simulation check of the step-count
//!   degrees-of-freedom rule.
//! * [`bootstrap_se`] — pairs bootstrap of any scalar functional of the
//!   fitted model.
//! * [`experiments`] — the multiplier sweep, the uniform-predictor
//!   centering study and the marginality audit.
//!
//! Paths are pure values: computing one borrows the design immutably and
//! the result can be shared freely across threads. Randomized operations
//! draw from named ChaCha8 streams keyed by `(seed, replicate)`, making
//! every report reproducible bit for bit.

mod bootstrap;
mod design;
mod error;
pub mod experiments;
mod frame;
mod linalg;
mod path;
mod rng;
mod select;

pub use bootstrap::{bootstrap_se, BootstrapReport};
pub use design::{StandardizeMode, StandardizedDesign};
pub use error::{LarsError, Result};
pub use frame::{equiangular_frame, EquiangularFrame};
pub use path::{
    fs_epsilon, fs_path, lar_path, lasso_path, CoefficientPath, PathEvent, PathKnot, PathMethod,
    TIE_REL_TOL,
};
pub use rng::{derive_seed, stream};
pub use select::{
    cp_curve, cp_curve_schedule, default_fs_knot_cap, df_monte_carlo, estimate_sigma2, kfold_cv,
    loubes_massart_schedule, mult_presets, threshold_alpha, CpReport, CpRow, CvReport,
    MultPresets, MultSchedule,
};
