//! Flat key-value experiment configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment; lists are
//! comma-separated. The `kind` key selects the experiment.

use std::collections::BTreeMap;

use lars::experiments::{MultSweepConfig, TurlachConfig, UniformSupport};

use crate::CliError;

#[derive(Debug)]
pub enum ExperimentConfig {
    MultSweep(MultSweepConfig),
    Turlach(TurlachConfig),
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::new(
                "config",
                format!("line {}: expected 'key = value', got '{raw}'", i + 1),
            ));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let kind = req(&map, "kind")?;
    match kind.as_str() {
        "mult-sweep" => {
            let config = MultSweepConfig {
                n: parse(&map, "n")?,
                m: parse(&map, "m")?,
                true_beta: parse_list(&map, "true_beta")?,
                sigma: parse(&map, "sigma")?,
                mult_list: parse_list(&map, "mult_list")?,
                reps: parse(&map, "reps")?,
                seed: parse(&map, "seed")?,
            };
            Ok(ExperimentConfig::MultSweep(config))
        }
        "turlach" => {
            let support = match req(&map, "support")?.as_str() {
                "unit" => UniformSupport::Unit,
                "centered" => UniformSupport::Centered,
                other => {
                    return Err(CliError::new(
                        "config",
                        format!("support must be 'unit' or 'centered', got '{other}'"),
                    ))
                }
            };
            let noise_scale: f64 = parse(&map, "noise_scale")?;
            let reps: usize = parse(&map, "reps")?;
            let seed: u64 = parse(&map, "seed")?;
            let mut config = TurlachConfig::with_defaults(support, noise_scale, reps, seed);
            if map.contains_key("n") {
                config.n = parse(&map, "n")?;
            }
            if map.contains_key("main_effects") {
                config.main_effects = parse_list(&map, "main_effects")?;
            }
            if map.contains_key("folds") {
                config.folds = parse(&map, "folds")?;
            }
            if map.contains_key("grid") {
                config.grid = parse_list(&map, "grid")?;
            }
            Ok(ExperimentConfig::Turlach(config))
        }
        other => Err(CliError::new(
            "config",
            format!("unknown experiment kind '{other}'"),
        )),
    }
}

fn req(map: &BTreeMap<String, String>, key: &str) -> Result<String, CliError> {
    map.get(key)
        .cloned()
        .ok_or_else(|| CliError::new("config", format!("missing key '{key}'")))
}

fn parse<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str) -> Result<T, CliError> {
    req(map, key)?
        .parse::<T>()
        .map_err(|_| CliError::new("config", format!("cannot parse value for '{key}'")))
}

fn parse_list<T: std::str::FromStr>(
    map: &BTreeMap<String, String>,
    key: &str,
) -> Result<Vec<T>, CliError> {
    req(map, key)?
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| CliError::new("config", format!("bad list entry in '{key}'")))
        })
        .collect()
}
