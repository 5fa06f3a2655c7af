//! Exact piecewise-linear coefficient paths.
//!
//! All three solvers move the active coefficients along the equiangular
//! direction of the signed active columns and stop at the next breakpoint:
//! an inactive column reaching the maximal absolute correlation (entry),
//! an active coefficient crossing zero (Lasso drop), or the correlations
//! vanishing (the least squares solution on the entered columns).
//!
//! The Forward Stagewise solver additionally restricts each move to the
//! positive cone of the signed tied columns, computed by non-negative
//! least squares; columns excluded from the cone keep their coefficients
//! frozen until they tie again.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::design::StandardizedDesign;
use crate::error::{LarsError, Result};
use crate::frame::{frame_from_gram, EquiangularFrame};
use crate::linalg::nnls_gram;

/// Two correlations (or two step lengths) tie when they differ by at most
/// this factor relative to the larger quantity.
pub const TIE_REL_TOL: f64 = 1e-9;

/// Correlations below `CORR_FLOOR_REL` times the initial maximum count as
/// exhausted.
const CORR_FLOOR_REL: f64 = 1e-12;

/// Which modification of the basic algorithm produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathMethod {
    #[serde(rename = "lar")]
    Lar,
    #[serde(rename = "lasso")]
    Lasso,
    #[serde(rename = "fs")]
    ForwardStagewise,
}

impl std::fmt::Display for PathMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathMethod::Lar => write!(f, "lar"),
            PathMethod::Lasso => write!(f, "lasso"),
            PathMethod::ForwardStagewise => write!(f, "fs"),
        }
    }
}

/// What happened at a knot. Simultaneous ties are recorded together, in
/// ascending column order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "variables", rename_all = "snake_case")]
pub enum PathEvent {
    /// The zero-coefficient starting point.
    Start,
    /// The listed columns reached the maximal absolute correlation at this
    /// knot and join the active set for the next step.
    Entered(Vec<usize>),
    /// The listed coefficients hit zero here and left the active set
    /// (Lasso modification).
    Dropped(Vec<usize>),
    /// Residual correlations are exhausted: the least squares fit on the
    /// entered columns.
    Terminal,
}

/// One breakpoint of a piecewise-linear coefficient path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathKnot {
    pub step_index: usize,
    /// Columns allowed to carry nonzero coefficients at this knot, in
    /// entry order.
    pub active: Vec<usize>,
    /// Correlation signs aligned with `active`.
    pub signs: Vec<i8>,
    /// Full-length coefficient vector in standardized coordinates.
    pub beta: Array1<f64>,
    /// Maximal absolute correlation with the residual at this knot.
    pub max_abs_corr: f64,
    /// Step length taken to reach this knot.
    pub gamma: f64,
    pub event: PathEvent,
}

/// An ordered knot sequence defining a piecewise-linear coefficient
/// trajectory. Between consecutive knots the coefficients evolve linearly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientPath {
    pub method: PathMethod,
    pub knots: Vec<PathKnot>,
    pub design_fingerprint: String,
}

impl CoefficientPath {
    /// Cumulative L1 arc length at each knot.
    pub fn knot_arc_lengths(&self) -> Vec<f64> {
        let mut arcs = Vec::with_capacity(self.knots.len());
        let mut acc = 0.0;
        for (k, knot) in self.knots.iter().enumerate() {
            if k > 0 {
                let prev = &self.knots[k - 1].beta;
                acc += knot
                    .beta
                    .iter()
                    .zip(prev.iter())
                    .map(|(b, p)| (b - p).abs())
                    .sum::<f64>();
            }
            arcs.push(acc);
        }
        arcs
    }

    /// Total L1 arc length of the path.
    pub fn total_arc_length(&self) -> f64 {
        *self.knot_arc_lengths().last().unwrap_or(&0.0)
    }

    /// Total L1 arc length together with the per-coordinate total
    /// variation. When every coordinate is monotone along the path the
    /// total equals the L1 norm of the terminal coefficients.
    pub fn arc_length(&self) -> (f64, Array1<f64>) {
        let m = self.knots.first().map_or(0, |k| k.beta.len());
        let mut per = Array1::zeros(m);
        for k in 1..self.knots.len() {
            let prev = &self.knots[k - 1].beta;
            let cur = &self.knots[k].beta;
            for j in 0..m {
                per[j] += (cur[j] - prev[j]).abs();
            }
        }
        (per.sum(), per)
    }

    /// Coefficients at cumulative arc length `t`, linearly interpolated
    /// between the bracketing knots. Beyond the terminal knot the terminal
    /// coefficients are returned; `t <= 0` returns the starting point.
    pub fn interpolate(&self, t: f64) -> Array1<f64> {
        let arcs = self.knot_arc_lengths();
        let last = self.knots.len() - 1;
        if t <= 0.0 {
            return self.knots[0].beta.clone();
        }
        if t >= arcs[last] {
            return self.knots[last].beta.clone();
        }
        let mut hi = 1;
        while arcs[hi] < t {
            hi += 1;
        }
        let lo = hi - 1;
        let span = arcs[hi] - arcs[lo];
        if span <= 0.0 {
            return self.knots[hi].beta.clone();
        }
        let theta = (t - arcs[lo]) / span;
        let a = &self.knots[lo].beta;
        let b = &self.knots[hi].beta;
        a * (1.0 - theta) + b * theta
    }

    /// True when the path ran until the residual correlations vanished.
    pub fn is_exhausted(&self) -> bool {
        matches!(self.knots.last().map(|k| &k.event), Some(PathEvent::Terminal))
    }

    /// Coefficients at the last knot.
    pub fn terminal_beta(&self) -> &Array1<f64> {
        &self.knots.last().expect("path has at least one knot").beta
    }
}

/// Shared state of a path computation.
struct Engine<'d> {
    design: &'d StandardizedDesign,
    gram: Array2<f64>,
    beta: Array1<f64>,
    c: Array1<f64>,
    cmax: f64,
    corr_floor: f64,
    knots: Vec<PathKnot>,
}

impl<'d> Engine<'d> {
    fn new(design: &'d StandardizedDesign) -> Self {
        let x = design.x();
        let gram = x.t().dot(&x);
        let y = design.y().to_owned();
        let c = x.t().dot(&y);
        let cmax = c.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        Engine {
            design,
            gram,
            beta: Array1::zeros(design.m()),
            c,
            cmax,
            corr_floor: CORR_FLOOR_REL * cmax.max(f64::MIN_POSITIVE),
            knots: Vec::new(),
        }
    }

    /// Recompute correlations from the actual residual.
    fn refresh(&mut self) {
        let x = self.design.x();
        let residual = &self.design.y().to_owned() - &x.dot(&self.beta);
        self.c = x.t().dot(&residual);
        self.cmax = self.c.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    }

    /// Signed Gram matrix over a column subset.
    fn signed_gram(&self, cols: &[usize], signs: &[f64]) -> Array2<f64> {
        let k = cols.len();
        let mut g = Array2::zeros((k, k));
        for (ri, &i) in cols.iter().enumerate() {
            for (ci, &j) in cols.iter().enumerate() {
                g[[ri, ci]] = signs[ri] * signs[ci] * self.gram[[i, j]];
            }
        }
        g
    }

    fn frame(&self, cols: &[usize], signs: &[f64]) -> Result<EquiangularFrame> {
        let g = self.signed_gram(cols, signs);
        frame_from_gram(self.design, cols, signs, &g)
    }

    /// Smallest positive step at which a column outside `excluded` ties
    /// the declining maximal correlation, with the tied achiever set.
    fn entry_step(&self, frame: &EquiangularFrame, excluded: &[bool]) -> (f64, Vec<usize>) {
        let a = frame.a_scalar;
        let pos_floor = TIE_REL_TOL * (self.cmax / a);
        let mut best = f64::INFINITY;
        let mut gammas = vec![f64::INFINITY; self.design.m()];
        for j in 0..self.design.m() {
            if excluded[j] {
                continue;
            }
            let aj = frame.inner_products[j];
            let mut g = f64::INFINITY;
            for (num, den) in [(self.cmax - self.c[j], a - aj), (self.cmax + self.c[j], a + aj)] {
                if den > 0.0 {
                    let cand = num / den;
                    if cand > pos_floor && cand < g {
                        g = cand;
                    }
                }
            }
            gammas[j] = g;
            if g < best {
                best = g;
            }
        }
        if !best.is_finite() {
            return (f64::INFINITY, Vec::new());
        }
        let tied: Vec<usize> = (0..self.design.m())
            .filter(|&j| gammas[j] <= best * (1.0 + TIE_REL_TOL))
            .collect();
        (best, tied)
    }

    fn record(
        &mut self,
        active: &[usize],
        signs: &[f64],
        gamma: f64,
        event: PathEvent,
    ) {
        let knot_signs = signs.iter().map(|s| if *s < 0.0 { -1 } else { 1 }).collect();
        self.knots.push(PathKnot {
            step_index: self.knots.len(),
            active: active.to_vec(),
            signs: knot_signs,
            beta: self.beta.clone(),
            max_abs_corr: self.cmax,
            gamma,
            event,
        });
    }

    fn finish(self, method: PathMethod) -> CoefficientPath {
        CoefficientPath {
            method,
            knots: self.knots,
            design_fingerprint: self.design.fingerprint(),
        }
    }
}

/// The basic path: variables accrue one (or, on exact ties, several) at a
/// time and are never removed. `max_steps` bounds the number of entry
/// steps; the full path needs `min(m, n - 1)` of them on a standardized
/// design and ends at the least squares solution on the entered columns.
pub fn lar_path(design: &StandardizedDesign, max_steps: usize) -> Result<CoefficientPath> {
    lar_like(design, max_steps, false).map(|mut p| {
        p.method = PathMethod::Lar;
        p
    })
}

/// The Lasso modification: a coefficient that would cross zero truncates
/// the step, is removed from the active set, and may re-enter later. Every
/// knot solves the L1-constrained least squares problem at its own
/// constraint value. Runs until the path is exhausted.
pub fn lasso_path(design: &StandardizedDesign) -> Result<CoefficientPath> {
    lar_like(design, design.max_steps_default(), true).map(|mut p| {
        p.method = PathMethod::Lasso;
        p
    })
}

fn lar_like(design: &StandardizedDesign, max_steps: usize, lasso: bool) -> Result<CoefficientPath> {
    if max_steps > design.max_steps_default() {
        return Err(LarsError::InvalidParameter(format!(
            "max_steps {} exceeds the supported {} for this design",
            max_steps,
            design.max_steps_default()
        )));
    }
    let m = design.m();
    let mut eng = Engine::new(design);
    let knot_cap = 50 * m + 200;

    if eng.cmax <= eng.corr_floor {
        eng.record(&[], &[], 0.0, PathEvent::Terminal);
        return Ok(eng.finish(PathMethod::Lar));
    }
    eng.record(&[], &[], 0.0, PathEvent::Start);

    let mut active: Vec<usize> = Vec::new();
    let mut signs: Vec<f64> = Vec::new();
    // First entrants come from the initial correlation ties; afterwards
    // entries are decided by the step-length search at the previous knot.
    let tie_floor = eng.cmax * (1.0 - TIE_REL_TOL);
    let mut pending: Option<Vec<usize>> =
        Some((0..m).filter(|&j| eng.c[j].abs() >= tie_floor).collect());

    loop {
        if let Some(newly) = pending.take() {
            if active.len() + newly.len() > max_steps {
                break;
            }
            for j in newly {
                signs.push(if eng.c[j] < 0.0 { -1.0 } else { 1.0 });
                active.push(j);
            }
        }
        if active.is_empty() {
            break;
        }

        let frame = eng.frame(&active, &signs)?;
        let gamma_full = eng.cmax / frame.a_scalar;

        let mut excluded = vec![false; m];
        for &j in &active {
            excluded[j] = true;
        }
        let (gamma_entry, entry_set) = eng.entry_step(&frame, &excluded);

        // Lasso drop candidates: active coefficients moving toward zero.
        let mut gamma_drop = f64::INFINITY;
        let mut drop_set: Vec<usize> = Vec::new();
        if lasso {
            let pos_floor = TIE_REL_TOL * gamma_full;
            let mut cands: Vec<(usize, f64)> = Vec::new();
            for (pos, &j) in active.iter().enumerate() {
                let dir = signs[pos] * frame.w[pos];
                if eng.beta[j] * dir < 0.0 {
                    let g = -eng.beta[j] / dir;
                    if g > pos_floor {
                        cands.push((j, g));
                        if g < gamma_drop {
                            gamma_drop = g;
                        }
                    }
                }
            }
            drop_set = cands
                .into_iter()
                .filter(|(_, g)| *g <= gamma_drop * (1.0 + TIE_REL_TOL))
                .map(|(j, _)| j)
                .collect();
            drop_set.sort_unstable();
        }

        // Drop-before-entry precedence on ties keeps the sign condition.
        // An entry tying the exhaustion step is vacuous (the correlations
        // are zero there), so terminal wins that tie.
        let (gamma, event) = if lasso
            && !drop_set.is_empty()
            && gamma_drop <= gamma_entry.min(gamma_full) * (1.0 + TIE_REL_TOL)
        {
            (gamma_drop, PathEvent::Dropped(drop_set.clone()))
        } else if gamma_entry < gamma_full * (1.0 - TIE_REL_TOL) && !entry_set.is_empty() {
            (gamma_entry, PathEvent::Entered(entry_set.clone()))
        } else {
            (gamma_full, PathEvent::Terminal)
        };

        for (pos, &j) in active.iter().enumerate() {
            eng.beta[j] += gamma * signs[pos] * frame.w[pos];
        }

        match &event {
            PathEvent::Dropped(ds) => {
                for &j in ds {
                    eng.beta[j] = 0.0;
                }
                let keep: Vec<usize> = (0..active.len())
                    .filter(|&p| !ds.contains(&active[p]))
                    .collect();
                active = keep.iter().map(|&p| active[p]).collect();
                signs = keep.iter().map(|&p| signs[p]).collect();
            }
            PathEvent::Entered(es) => pending = Some(es.clone()),
            _ => {}
        }

        eng.refresh();
        let terminal = matches!(event, PathEvent::Terminal);
        eng.record(&active, &signs, gamma, event);

        if terminal || eng.cmax <= eng.corr_floor {
            break;
        }
        if eng.knots.len() > knot_cap {
            return Err(LarsError::PathDidNotConverge(knot_cap));
        }
    }
    Ok(eng.finish(PathMethod::Lar))
}

/// The Forward Stagewise modification: within the tied set, each step
/// moves only the subset whose non-negative least squares projection
/// weights are positive; the rest stay frozen until they tie again. The
/// path is the limit of infinitesimal stagewise updates and its natural
/// parameter is cumulative L1 arc length.
pub fn fs_path(design: &StandardizedDesign, max_knots: usize) -> Result<CoefficientPath> {
    if max_knots < 1 {
        return Err(LarsError::InvalidParameter(
            "max_knots must be at least 1".into(),
        ));
    }
    let m = design.m();
    let active_cap = design.max_steps_default();
    let mut eng = Engine::new(design);

    if eng.cmax <= eng.corr_floor {
        eng.record(&[], &[], 0.0, PathEvent::Terminal);
        return Ok(eng.finish(PathMethod::ForwardStagewise));
    }
    eng.record(&[], &[], 0.0, PathEvent::Start);

    let mut entry_order: Vec<usize> = Vec::new();
    let mut tied: Vec<usize> = Vec::new();
    let tie_floor = eng.cmax * (1.0 - TIE_REL_TOL);
    let mut pending: Option<Vec<usize>> =
        Some((0..m).filter(|&j| eng.c[j].abs() >= tie_floor).collect());

    while eng.knots.len() < max_knots {
        if let Some(newly) = pending.take() {
            for j in newly {
                if !tied.contains(&j) {
                    tied.push(j);
                }
                if !entry_order.contains(&j) {
                    entry_order.push(j);
                }
            }
        }
        if tied.is_empty() || tied.len() > active_cap {
            break;
        }

        // Signs follow the current correlations of the tied columns.
        let tie_signs: Vec<f64> = tied
            .iter()
            .map(|&j| if eng.c[j] < 0.0 { -1.0 } else { 1.0 })
            .collect();

        // Positive-cone restriction: NNLS of the residual on the signed
        // tied columns; the support is the moving subset.
        let g_tied = eng.signed_gram(&tied, &tie_signs);
        let rhs: Array1<f64> = tied
            .iter()
            .zip(tie_signs.iter())
            .map(|(&j, s)| s * eng.c[j])
            .collect();
        let lambda =
            nnls_gram(&g_tied, &rhs).map_err(|()| LarsError::SingularActiveSet(tied.clone()))?;
        let lam_max = lambda.iter().fold(0.0_f64, |a, v| a.max(*v));
        let mut moving: Vec<usize> = Vec::new();
        let mut moving_signs: Vec<f64> = Vec::new();
        for (pos, &j) in tied.iter().enumerate() {
            if lambda[pos] > 1e-10 * lam_max {
                moving.push(j);
                moving_signs.push(tie_signs[pos]);
            }
        }
        if moving.is_empty() {
            // Numerical fallback: move the single most correlated column.
            let best = *tied
                .iter()
                .max_by(|&&a, &&b| eng.c[a].abs().total_cmp(&eng.c[b].abs()))
                .unwrap();
            moving.push(best);
            moving_signs.push(if eng.c[best] < 0.0 { -1.0 } else { 1.0 });
        }

        let frame = eng.frame(&moving, &moving_signs)?;
        let gamma_full = eng.cmax / frame.a_scalar;
        let mut excluded = vec![false; m];
        for &j in &moving {
            excluded[j] = true;
        }
        let (gamma_entry, entry_set) = eng.entry_step(&frame, &excluded);

        let (gamma, event) = if gamma_entry < gamma_full * (1.0 - TIE_REL_TOL)
            && !entry_set.is_empty()
        {
            (gamma_entry, PathEvent::Entered(entry_set.clone()))
        } else {
            (gamma_full, PathEvent::Terminal)
        };

        for (pos, &j) in moving.iter().enumerate() {
            eng.beta[j] += gamma * moving_signs[pos] * frame.w[pos];
        }
        eng.refresh();

        // A knot's active set: every column that has entered and still
        // carries a coefficient or sits at the maximal correlation.
        let tie_floor_now = eng.cmax * (1.0 - TIE_REL_TOL);
        let active_now: Vec<usize> = entry_order
            .iter()
            .copied()
            .filter(|&j| eng.beta[j] != 0.0 || eng.c[j].abs() >= tie_floor_now)
            .collect();
        let signs_now: Vec<f64> = active_now
            .iter()
            .map(|&j| {
                if eng.c[j] != 0.0 {
                    eng.c[j].signum()
                } else {
                    eng.beta[j].signum()
                }
            })
            .collect();
        let terminal = matches!(event, PathEvent::Terminal);
        if let PathEvent::Entered(es) = &event {
            pending = Some(es.clone());
        }
        eng.record(&active_now, &signs_now, gamma, event);

        tied = moving;
        if terminal || eng.cmax <= eng.corr_floor {
            break;
        }
    }
    Ok(eng.finish(PathMethod::ForwardStagewise))
}

/// Classic incremental forward stagewise: `iterations` updates of size
/// `epsilon` applied to the single most correlated coefficient, with the
/// coefficient vector recorded after every update.
pub fn fs_epsilon(
    design: &StandardizedDesign,
    epsilon: f64,
    iterations: usize,
) -> Vec<Array1<f64>> {
    assert!(
        epsilon > 0.0 && epsilon.is_finite(),
        "epsilon must be a positive finite step size"
    );
    let x = design.x();
    let gram = x.t().dot(&x);
    let y = design.y().to_owned();
    let mut c = x.t().dot(&y);
    let mut beta = Array1::<f64>::zeros(design.m());
    let mut trace = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut j = 0;
        for i in 1..design.m() {
            if c[i].abs() > c[j].abs() {
                j = i;
            }
        }
        if c[j].abs() > 0.0 {
            let s = c[j].signum();
            beta[j] += epsilon * s;
            c.scaled_add(-epsilon * s, &gram.column(j));
        }
        trace.push(beta.clone());
    }
    trace
}
