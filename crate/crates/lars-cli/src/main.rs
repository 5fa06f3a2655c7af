//! `lars` — coefficient paths, stopping rules, bootstrap and experiments
//! from the command line.

mod config;
mod io;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lars::experiments::{gen_interactions, marginality_check, mult_sweep, turlach_experiment};
use lars::{
    bootstrap_se, cp_curve_schedule, estimate_sigma2, fs_path, kfold_cv, lar_path, lasso_path,
    loubes_massart_schedule, CoefficientPath, CpReport, LarsError, MultSchedule, PathMethod,
    StandardizeMode, StandardizedDesign,
};
use ndarray::{Array1, Array2};
use serde::Serialize;

/// A reportable failure: kind + message, printed as one JSON line on
/// stderr.
#[derive(Debug)]
pub struct CliError {
    kind: String,
    message: String,
}

impl CliError {
    pub fn new(kind: &str, message: String) -> Self {
        CliError {
            kind: kind.to_string(),
            message,
        }
    }

    pub fn from_lars(e: LarsError) -> Self {
        let kind = match &e {
            LarsError::ConstantColumn(_) => "constant_column",
            LarsError::DimensionMismatch(_) => "dimension_mismatch",
            LarsError::SingularActiveSet(_) => "singular_active_set",
            LarsError::NotStandardized => "not_standardized",
            LarsError::SigmaUnestimable(_) => "sigma_unestimable",
            LarsError::InvalidParameter(_) => "invalid_parameter",
            LarsError::TooManyFailures { .. } => "too_many_failures",
            LarsError::DegenerateFold(_) => "degenerate_fold",
            LarsError::PathDidNotConverge(_) => "did_not_converge",
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<LarsError> for CliError {
    fn from(e: LarsError) -> Self {
        CliError::from_lars(e)
    }
}

#[derive(Parser)]
#[command(
    name = "lars",
    version,
    about = "Least angle regression paths with Cp/CV stopping, bootstrap and experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a coefficient path and write the knots file (optionally a plot).
    Path(PathCmd),
    /// Fit a path and apply a stopping rule (Cp or cross-validation).
    Select(SelectCmd),
    /// Pairs-bootstrap a statistic of the fitted, Cp-selected model.
    Bootstrap(BootstrapCmd),
    /// Run a declarative experiment config (mult-sweep or turlach).
    Experiment(ExperimentCmd),
    /// Fit on an interaction expansion and audit the marginality rule.
    AuditMarginality(AuditCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Lar,
    Lasso,
    Fs,
}

impl From<MethodArg> for PathMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Lar => PathMethod::Lar,
            MethodArg::Lasso => PathMethod::Lasso,
            MethodArg::Fs => PathMethod::ForwardStagewise,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum StopArg {
    None,
    Cp,
    Cv,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Response column name or zero-based index.
    #[arg(long)]
    response: String,
    /// Path method.
    #[arg(long, value_enum, default_value = "lar")]
    method: MethodArg,
    /// Cap on LAR entry steps (or Forward Stagewise knots).
    #[arg(long)]
    max_steps: Option<usize>,
    /// Fit on the raw inputs without centering and scaling.
    #[arg(long)]
    no_standardize: bool,
}

impl FitArgs {
    fn load(&self) -> Result<io::Dataset, CliError> {
        io::ingest_csv(&self.input, &self.response)
    }

    fn design(&self, x: &Array2<f64>, y: &Array1<f64>) -> Result<StandardizedDesign, CliError> {
        let mode = if self.no_standardize {
            StandardizeMode::Raw
        } else {
            StandardizeMode::Standard
        };
        Ok(StandardizedDesign::standardize(x, y, mode)?)
    }

    fn fit(&self, design: &StandardizedDesign) -> Result<CoefficientPath, CliError> {
        let path = match PathMethod::from(self.method) {
            PathMethod::Lar => {
                let steps = self.max_steps.unwrap_or_else(|| design.max_steps_default());
                lar_path(design, steps)?
            }
            PathMethod::Lasso => lasso_path(design)?,
            PathMethod::ForwardStagewise => {
                let cap = self
                    .max_steps
                    .unwrap_or_else(|| lars::default_fs_knot_cap(design.m()));
                fs_path(design, cap)?
            }
        };
        Ok(path)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output path for the knots file.
    #[arg(long)]
    out: PathBuf,
    /// Knots file format.
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Also render the coefficient-path figure to this SVG file.
    #[arg(long)]
    plot: Option<PathBuf>,
    /// Plot standardized instead of de-standardized coefficients.
    #[arg(long)]
    plot_standardized: bool,
}

#[derive(Args)]
struct PathCmd {
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SelectCmd {
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    output: OutputArgs,
    /// Stopping rule.
    #[arg(long, value_enum, default_value = "cp")]
    stop: StopArg,
    /// Cp multiplier: a number or one of two, four, bic, lm.
    #[arg(long, default_value = "two")]
    mult: String,
    /// Noise variance for Cp; estimated from the full model if omitted.
    #[arg(long)]
    sigma2: Option<f64>,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Comma-separated arc-length fractions for cross-validation.
    #[arg(long)]
    grid: Option<String>,
    /// Seed for the cross-validation fold shuffle.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BootstrapCmd {
    #[command(flatten)]
    fit: FitArgs,
    /// Output path for the bootstrap report (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Number of bootstrap replicates.
    #[arg(long, default_value_t = 500)]
    b_reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Statistic: the response mean, or the Cp-selected model's
    /// prediction shift at a displaced covariate point.
    #[arg(long, default_value = "cp-prediction")]
    statistic: String,
    /// Expand predictors to the full quadratic model (squares of
    /// two-valued columns are left out as collinear).
    #[arg(long)]
    quadratic: bool,
    /// Covariate displacement `column=k`: evaluate at the average patient
    /// with `column` moved k standard deviations up.
    #[arg(long)]
    at_sd: Option<String>,
    #[arg(long, default_value = "two")]
    mult: String,
    #[arg(long)]
    sigma2: Option<f64>,
}

#[derive(Args)]
struct ExperimentCmd {
    /// Experiment configuration file (flat key = value lines).
    #[arg(long)]
    config: PathBuf,
    /// Output base path; writes `<out>.csv` and `<out>.json`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AuditCmd {
    #[command(flatten)]
    fit: FitArgs,
    /// Output path for the audit report (JSON).
    #[arg(long)]
    out: PathBuf,
    /// Include squared terms in the expansion.
    #[arg(long)]
    squares: bool,
    #[arg(long, default_value = "two")]
    mult: String,
    #[arg(long)]
    sigma2: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Path(cmd) => run_path(cmd),
        Command::Select(cmd) => run_select(cmd),
        Command::Bootstrap(cmd) => run_bootstrap(cmd),
        Command::Experiment(cmd) => run_experiment(cmd),
        Command::AuditMarginality(cmd) => run_audit(cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": e.kind, "message": e.message})
            );
            ExitCode::FAILURE
        }
    }
}

fn write_knots(
    output: &OutputArgs,
    knots: &io::KnotsFile,
    selected_arc: Option<f64>,
) -> Result<(), CliError> {
    let body = match output.format {
        FormatArg::Json => {
            serde_json::to_string_pretty(knots).expect("knots serialize") + "\n"
        }
        FormatArg::Csv => knots.to_csv(),
    };
    io::atomic_write(&output.out, &body)?;
    if let Some(plot) = &output.plot {
        let svg = svg::render(knots, output.plot_standardized, selected_arc);
        io::atomic_write(plot, &svg)?;
    }
    Ok(())
}

fn run_path(cmd: PathCmd) -> Result<(), CliError> {
    let (x, y, names) = cmd.fit.load()?;
    let design = cmd.fit.design(&x, &y)?;
    let path = cmd.fit.fit(&design)?;
    let knots = io::KnotsFile::build(&path, &design, &names)?;
    write_knots(&cmd.output, &knots, None)
}

/// Resolve a `--mult` value against a path: fixed numbers and the named
/// presets; `lm` builds the per-knot log(n/k) schedule.
fn resolve_mult(
    spec: &str,
    n: usize,
    path: &CoefficientPath,
) -> Result<MultSchedule, CliError> {
    match spec {
        "two" => Ok(MultSchedule::Fixed(2.0)),
        "four" => Ok(MultSchedule::Fixed(4.0)),
        "bic" => Ok(MultSchedule::Fixed((n as f64).ln())),
        "lm" => Ok(MultSchedule::PerKnot(loubes_massart_schedule(n, path))),
        other => other
            .parse::<f64>()
            .map(MultSchedule::Fixed)
            .map_err(|_| CliError::new("args", format!("cannot parse --mult '{other}'"))),
    }
}

#[derive(Serialize)]
struct SelectionDocument {
    rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    cp: Option<CpReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cv: Option<lars::CvReport>,
    selected_arc_length: f64,
    selected_beta_standardized: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected_beta_raw: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected_intercept: Option<f64>,
}

fn selection_out_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".into());
    out.with_file_name(format!("{stem}.select.json"))
}

fn run_select(cmd: SelectCmd) -> Result<(), CliError> {
    let (x, y, names) = cmd.fit.load()?;
    let design = cmd.fit.design(&x, &y)?;
    let path = cmd.fit.fit(&design)?;
    let knots = io::KnotsFile::build(&path, &design, &names)?;
    let arcs = path.knot_arc_lengths();

    let (selected_arc, doc) = match cmd.stop {
        StopArg::None => {
            write_knots(&cmd.output, &knots, None)?;
            return Ok(());
        }
        StopArg::Cp => {
            let sigma2 = match cmd.sigma2 {
                Some(v) => v,
                None => estimate_sigma2(&design)?,
            };
            let mult = resolve_mult(&cmd.mult, design.n(), &path)?;
            let report = cp_curve_schedule(&path, &design, sigma2, mult)?;
            let beta = path.knots[report.selected].beta.clone();
            let arc = arcs[report.selected];
            (arc, build_selection("cp", Some(report), None, arc, &beta, &design)?)
        }
        StopArg::Cv => {
            let grid: Vec<f64> = match &cmd.grid {
                Some(spec) => spec
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| CliError::new("args", format!("bad grid entry '{s}'")))
                    })
                    .collect::<Result<_, _>>()?,
                None => (0..=20).map(|i| i as f64 * 0.05).collect(),
            };
            let report = kfold_cv(
                &design,
                PathMethod::from(cmd.fit.method),
                cmd.folds,
                &grid,
                cmd.seed,
            )?;
            let arc = report.selected_fraction * path.total_arc_length();
            let beta = path.interpolate(arc);
            (arc, build_selection("cv", None, Some(report), arc, &beta, &design)?)
        }
    };

    write_knots(&cmd.output, &knots, Some(selected_arc))?;
    let body = serde_json::to_string_pretty(&doc).expect("selection serialize") + "\n";
    io::atomic_write(&selection_out_path(&cmd.output.out), &body)
}

fn build_selection(
    rule: &str,
    cp: Option<CpReport>,
    cv: Option<lars::CvReport>,
    arc: f64,
    beta: &Array1<f64>,
    design: &StandardizedDesign,
) -> Result<SelectionDocument, CliError> {
    let (raw, icept) = if design.raw_mode() {
        (None, None)
    } else {
        let (i, c) = design.destandardize(beta)?;
        (Some(c.to_vec()), Some(i))
    };
    Ok(SelectionDocument {
        rule: rule.to_string(),
        cp,
        cv,
        selected_arc_length: arc,
        selected_beta_standardized: beta.to_vec(),
        selected_beta_raw: raw,
        selected_intercept: icept,
    })
}

/// Quadratic expansion dropping squares of two-valued columns (their
/// squares are collinear with the column after centering).
fn quadratic_expand(x: &Array2<f64>, names: &[String]) -> Result<(Array2<f64>, Vec<String>), CliError> {
    let (expanded, map) = gen_interactions(x, true)?;
    let mut binary = vec![false; x.ncols()];
    for (j, flag) in binary.iter_mut().enumerate() {
        let mut distinct: Vec<f64> = Vec::new();
        for v in x.column(j).iter() {
            if !distinct.iter().any(|d| d == v) {
                distinct.push(*v);
                if distinct.len() > 2 {
                    break;
                }
            }
        }
        *flag = distinct.len() <= 2;
    }
    let mut keep: Vec<usize> = (0..x.ncols()).collect();
    let mut kept_names: Vec<String> = names.to_vec();
    for term in &map {
        let square = term.parent_i == term.parent_j;
        if square && binary[term.parent_i] {
            continue;
        }
        keep.push(term.column);
        if square {
            kept_names.push(format!("{}^2", names[term.parent_i]));
        } else {
            kept_names.push(format!("{}:{}", names[term.parent_i], names[term.parent_j]));
        }
    }
    let mut out = Array2::zeros((x.nrows(), keep.len()));
    for (ci, &c) in keep.iter().enumerate() {
        out.column_mut(ci).assign(&expanded.column(c));
    }
    Ok((out, kept_names))
}

#[derive(Serialize)]
struct BootstrapDocument {
    statistic: String,
    evaluation: Option<String>,
    report: lars::BootstrapReport,
}

fn run_bootstrap(cmd: BootstrapCmd) -> Result<(), CliError> {
    let (x, y, names) = cmd.fit.load()?;

    let (doc, out) = match cmd.statistic.as_str() {
        "mean" => {
            let report = bootstrap_se(
                &x,
                &y,
                |_, ys| Ok(ys.mean().unwrap()),
                cmd.b_reps,
                cmd.seed,
            )?;
            (
                BootstrapDocument {
                    statistic: "mean".into(),
                    evaluation: None,
                    report,
                },
                cmd.out.clone(),
            )
        }
        "cp-prediction" => {
            let at = cmd.at_sd.as_deref().ok_or_else(|| {
                CliError::new("args", "--at-sd column=k is required for cp-prediction".into())
            })?;
            let (col_name, k_sd) = at.split_once('=').ok_or_else(|| {
                CliError::new("args", format!("cannot parse --at-sd '{at}' (want column=k)"))
            })?;
            let k_sd: f64 = k_sd
                .trim()
                .parse()
                .map_err(|_| CliError::new("args", format!("bad displacement in '{at}'")))?;
            let col = names
                .iter()
                .position(|n| n == col_name.trim())
                .ok_or_else(|| CliError::new("args", format!("unknown column '{col_name}'")))?;

            let mean = x.column(col).mean().unwrap();
            let sd = {
                let c = x.column(col);
                (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (c.len() - 1) as f64).sqrt()
            };
            let means: Array1<f64> = (0..x.ncols()).map(|j| x.column(j).mean().unwrap()).collect();
            let mut moved = means.clone();
            moved[col] += k_sd * sd;

            let quadratic = cmd.quadratic;
            let expand = move |m: &Array2<f64>, nm: &[String]| -> Result<Array2<f64>, CliError> {
                if quadratic {
                    Ok(quadratic_expand(m, nm)?.0)
                } else {
                    Ok(m.clone())
                }
            };
            let point = |z: &Array1<f64>| -> Result<Array1<f64>, CliError> {
                let zm = z.view().insert_axis(ndarray::Axis(0)).to_owned();
                Ok(expand(&zm, &names)?.row(0).to_owned())
            };
            let z0 = point(&means)?;
            let z1 = point(&moved)?;

            let method = PathMethod::from(cmd.fit.method);
            let mult_spec = cmd.mult.clone();
            let sigma2_opt = cmd.sigma2;
            let names_inner = names.clone();
            let statistic = move |xr: &Array2<f64>, yr: &Array1<f64>| -> Result<f64, LarsError> {
                let ex = expand(xr, &names_inner)
                    .map_err(|e| LarsError::InvalidParameter(e.message.clone()))?;
                let d = StandardizedDesign::standardize(&ex, yr, StandardizeMode::Standard)?;
                let p = match method {
                    PathMethod::Lar => lar_path(&d, d.max_steps_default())?,
                    PathMethod::Lasso => lasso_path(&d)?,
                    PathMethod::ForwardStagewise => {
                        fs_path(&d, lars::default_fs_knot_cap(d.m()))?
                    }
                };
                let sigma2 = match sigma2_opt {
                    Some(v) => v,
                    None => estimate_sigma2(&d)?,
                };
                if sigma2 <= 0.0 {
                    return Err(LarsError::SigmaUnestimable("degenerate fit".into()));
                }
                let mult = match mult_spec.as_str() {
                    "two" => MultSchedule::Fixed(2.0),
                    "four" => MultSchedule::Fixed(4.0),
                    "bic" => MultSchedule::Fixed((d.n() as f64).ln()),
                    "lm" => MultSchedule::PerKnot(loubes_massart_schedule(d.n(), &p)),
                    other => MultSchedule::Fixed(other.parse::<f64>().map_err(|_| {
                        LarsError::InvalidParameter(format!("bad mult '{other}'"))
                    })?),
                };
                let report = cp_curve_schedule(&p, &d, sigma2, mult)?;
                let beta = &p.knots[report.selected].beta;
                let (_icept, coefs) = d.destandardize(beta)?;
                Ok(coefs.dot(&z1) - coefs.dot(&z0))
            };
            let report = bootstrap_se(&x, &y, statistic, cmd.b_reps, cmd.seed)?;
            (
                BootstrapDocument {
                    statistic: "cp-prediction".into(),
                    evaluation: Some(format!("{col_name}+{k_sd}sd vs mean point")),
                    report,
                },
                cmd.out.clone(),
            )
        }
        other => {
            return Err(CliError::new(
                "args",
                format!("unknown statistic '{other}' (use mean or cp-prediction)"),
            ))
        }
    };

    let body = serde_json::to_string_pretty(&doc).expect("report serialize") + "\n";
    io::atomic_write(&out, &body)
}

fn run_experiment(cmd: ExperimentCmd) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&cmd.config)
        .map_err(|e| CliError::new("io", format!("cannot read {}: {e}", cmd.config.display())))?;
    let parsed = config::parse_config(&text)?;
    let base = cmd.out.to_string_lossy().to_string();
    match parsed {
        config::ExperimentConfig::MultSweep(config) => {
            let result = mult_sweep(&config)?;
            let mut csv = String::from("mult,avg_selected_size,avg_sq_error\n");
            for i in 0..result.mult_values.len() {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    io::fmt_f64(result.mult_values[i]),
                    io::fmt_f64(result.avg_selected_size[i]),
                    io::fmt_f64(result.avg_sq_error[i])
                ));
            }
            io::atomic_write(Path::new(&format!("{base}.csv")), &csv)?;
            let body = serde_json::to_string_pretty(&result).expect("serialize") + "\n";
            io::atomic_write(Path::new(&format!("{base}.json")), &body)
        }
        config::ExperimentConfig::Turlach(config) => {
            let results = turlach_experiment(&config)?;
            let recovery =
                results.iter().filter(|r| r.truth_recovered).count() as f64 / results.len() as f64;
            let mut csv = String::from(
                "rep,support,noise_scale,cv_selected_l1,n_active,max_interaction_coef,truth_recovered\n",
            );
            for (i, r) in results.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    i,
                    match r.support {
                        lars::experiments::UniformSupport::Unit => "unit",
                        lars::experiments::UniformSupport::Centered => "centered",
                    },
                    io::fmt_f64(r.noise_scale),
                    io::fmt_f64(r.cv_selected_l1),
                    r.active_at_selection.len(),
                    io::fmt_f64(r.max_interaction_coef),
                    r.truth_recovered
                ));
            }
            io::atomic_write(Path::new(&format!("{base}.csv")), &csv)?;
            let doc = serde_json::json!({
                "recovery_rate": recovery,
                "results": results,
            });
            let body = serde_json::to_string_pretty(&doc).expect("serialize") + "\n";
            io::atomic_write(Path::new(&format!("{base}.json")), &body)
        }
    }
}

#[derive(Serialize)]
struct AuditDocument {
    selected_step: usize,
    satisfied: bool,
    violations: Vec<serde_json::Value>,
    column_names: Vec<String>,
}

fn run_audit(cmd: AuditCmd) -> Result<(), CliError> {
    let (x, y, names) = cmd.fit.load()?;
    let (expanded, map) = gen_interactions(&x, cmd.squares)?;
    let mut full_names = names.clone();
    for term in &map {
        if term.parent_i == term.parent_j {
            full_names.push(format!("{}^2", names[term.parent_i]));
        } else {
            full_names.push(format!("{}:{}", names[term.parent_i], names[term.parent_j]));
        }
    }
    let design = StandardizedDesign::standardize(&expanded, &y, StandardizeMode::Standard)?;
    let path = match PathMethod::from(cmd.fit.method) {
        PathMethod::Lar => lar_path(&design, design.max_steps_default())?,
        PathMethod::Lasso => lasso_path(&design)?,
        PathMethod::ForwardStagewise => fs_path(&design, lars::default_fs_knot_cap(design.m()))?,
    };
    let sigma2 = match cmd.sigma2 {
        Some(v) => v,
        None => estimate_sigma2(&design)?,
    };
    let mult = resolve_mult(&cmd.mult, design.n(), &path)?;
    let report = cp_curve_schedule(&path, &design, sigma2, mult)?;
    let beta = &path.knots[report.selected].beta;
    // The inequality lives on the original scale.
    let (_icept, coefs) = design.destandardize(beta)?;
    let audit = marginality_check(&coefs, &map)?;
    let violations = audit
        .violations
        .iter()
        .map(|v| {
            serde_json::json!({
                "interaction": full_names[v.column],
                "parents": [full_names[v.parent_i], full_names[v.parent_j]],
                "interaction_coef": v.interaction_coef,
                "parent_bound": v.parent_bound,
            })
        })
        .collect();
    let doc = AuditDocument {
        selected_step: report.selected,
        satisfied: audit.satisfied,
        violations,
        column_names: full_names,
    };
    let body = serde_json::to_string_pretty(&doc).expect("serialize") + "\n";
    io::atomic_write(&cmd.out, &body)
}
