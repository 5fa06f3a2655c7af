//! CSV ingestion, knots-file serialization and atomic output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lars::{CoefficientPath, PathEvent, StandardizedDesign};
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Predictors, response and predictor names as parsed from a CSV file.
pub type Dataset = (Array2<f64>, Array1<f64>, Vec<String>);

/// Parse a headered numeric CSV, returning the predictor matrix, the
/// response column and the predictor names. Rows with missing cells are
/// rejected with their line numbers; non-numeric cells name row and
/// column.
pub fn ingest_csv(path: &Path, response: &str) -> Result<Dataset, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::new("io", format!("cannot open {}: {e}", path.display())))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::new("csv", format!("missing header: {e}")))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.is_empty() {
        return Err(CliError::new("csv", "missing header row".to_string()));
    }
    let response_idx = match header.iter().position(|h| h == response) {
        Some(i) => i,
        None => response.parse::<usize>().map_err(|_| {
            CliError::new(
                "csv",
                format!(
                    "unknown response column '{response}'; header has {:?}",
                    header
                ),
            )
        })?,
    };
    if response_idx >= header.len() {
        return Err(CliError::new(
            "csv",
            format!("response index {response_idx} out of range"),
        ));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut bad_rows: Vec<String> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record
            .map_err(|e| CliError::new("csv", format!("line {line}: unreadable record: {e}")))?;
        if record.len() != header.len() {
            bad_rows.push(format!("line {line}: {} of {} cells", record.len(), header.len()));
            continue;
        }
        let mut vals = Vec::with_capacity(header.len());
        let mut row_bad = false;
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() {
                bad_rows.push(format!("line {line}: empty cell in column '{}'", header[j]));
                row_bad = true;
                break;
            }
            match cell.parse::<f64>() {
                Ok(v) => vals.push(v),
                Err(_) => {
                    return Err(CliError::new(
                        "csv",
                        format!(
                            "line {line}: non-numeric value '{cell}' in column '{}'",
                            header[j]
                        ),
                    ));
                }
            }
        }
        if !row_bad {
            rows.push(vals);
        }
    }
    if !bad_rows.is_empty() {
        return Err(CliError::new(
            "csv",
            format!("rejected rows: {}", bad_rows.join("; ")),
        ));
    }
    if rows.len() < 2 {
        return Err(CliError::new(
            "csv",
            format!("need at least 2 data rows, found {}", rows.len()),
        ));
    }

    let n = rows.len();
    let m = header.len() - 1;
    let mut x = Array2::zeros((n, m));
    let mut y = Array1::zeros(n);
    let mut names = Vec::with_capacity(m);
    for (j, name) in header.iter().enumerate() {
        if j != response_idx {
            names.push(name.clone());
        }
    }
    for (i, row) in rows.iter().enumerate() {
        let mut c = 0;
        for (j, v) in row.iter().enumerate() {
            if j == response_idx {
                y[i] = *v;
            } else {
                x[[i, c]] = *v;
                c += 1;
            }
        }
    }
    Ok((x, y, names))
}

/// One knot as written to the knots file.
#[derive(Debug, Serialize, Deserialize)]
pub struct KnotRecord {
    pub step_index: usize,
    pub event: PathEvent,
    pub active: Vec<usize>,
    pub signs: Vec<i8>,
    pub max_abs_corr: f64,
    pub gamma: f64,
    pub arc_length: f64,
    pub beta_standardized: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_raw: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
}

/// The serialized path document.
#[derive(Debug, Serialize, Deserialize)]
pub struct KnotsFile {
    pub method: lars::PathMethod,
    pub design_fingerprint: String,
    pub standardized: bool,
    pub column_names: Vec<String>,
    pub n: usize,
    pub knots: Vec<KnotRecord>,
}

impl KnotsFile {
    pub fn build(
        path: &CoefficientPath,
        design: &StandardizedDesign,
        names: &[String],
    ) -> Result<Self, CliError> {
        let arcs = path.knot_arc_lengths();
        let mut knots = Vec::with_capacity(path.knots.len());
        for (k, knot) in path.knots.iter().enumerate() {
            let (beta_raw, intercept) = if design.raw_mode() {
                (None, None)
            } else {
                let (icept, coefs) = design
                    .destandardize(&knot.beta)
                    .map_err(CliError::from_lars)?;
                (Some(coefs.to_vec()), Some(icept))
            };
            knots.push(KnotRecord {
                step_index: knot.step_index,
                event: knot.event.clone(),
                active: knot.active.clone(),
                signs: knot.signs.clone(),
                max_abs_corr: knot.max_abs_corr,
                gamma: knot.gamma,
                arc_length: arcs[k],
                beta_standardized: knot.beta.to_vec(),
                beta_raw,
                intercept,
            });
        }
        Ok(KnotsFile {
            method: path.method,
            design_fingerprint: path.design_fingerprint.clone(),
            standardized: !design.raw_mode(),
            column_names: names.to_vec(),
            n: design.n(),
            knots,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let mut cols = vec![
            "step_index".to_string(),
            "event".to_string(),
            "event_variables".to_string(),
            "active".to_string(),
            "signs".to_string(),
            "max_abs_corr".to_string(),
            "gamma".to_string(),
            "arc_length".to_string(),
        ];
        for name in &self.column_names {
            cols.push(format!("beta_std_{name}"));
        }
        if self.standardized {
            for name in &self.column_names {
                cols.push(format!("beta_raw_{name}"));
            }
            cols.push("intercept".to_string());
        }
        let _ = writeln!(out, "{}", cols.join(","));
        for k in &self.knots {
            let (ev, vars): (&str, String) = match &k.event {
                PathEvent::Start => ("start", String::new()),
                PathEvent::Terminal => ("terminal", String::new()),
                PathEvent::Entered(v) => ("entered", join_usize(v)),
                PathEvent::Dropped(v) => ("dropped", join_usize(v)),
            };
            let mut fields = vec![
                k.step_index.to_string(),
                ev.to_string(),
                vars,
                join_usize(&k.active),
                k.signs
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
                fmt_f64(k.max_abs_corr),
                fmt_f64(k.gamma),
                fmt_f64(k.arc_length),
            ];
            for v in &k.beta_standardized {
                fields.push(fmt_f64(*v));
            }
            if self.standardized {
                if let Some(raw) = &k.beta_raw {
                    for v in raw {
                        fields.push(fmt_f64(*v));
                    }
                }
                if let Some(icept) = k.intercept {
                    fields.push(fmt_f64(icept));
                }
            }
            let _ = writeln!(out, "{}", fields.join(","));
        }
        out
    }
}

fn join_usize(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// Shortest decimal representation that round-trips (`Display` for f64).
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Write a file atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp: PathBuf = dir.join(format!(
        ".{}.tmp{}",
        path.file_name().map(|s| s.to_string_lossy()).unwrap_or_default(),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::new("io", format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::new("io", format!("cannot move into {}: {e}", path.display())))?;
    Ok(())
}
