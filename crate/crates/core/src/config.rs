//! Plain-text configuration files for the replication study.
//!
//! Grammar: `key = value` lines grouped under bracketed section names.
//! Blank lines are skipped and `#` starts a comment. Unknown sections or
//! keys are errors. Values start from the bundled default protocol, so a
//! config file only needs the fields it overrides.
//!
//! ```text
//! [experiment]
//! signals = laplace5, gamma     # laplace5 | gamma
//! pre_scale = 0.1
//! s_values = 0.5, 1, 1.5, 2
//! ns = 500, 1000, 2000, 5000
//! replications = 100
//! master_seed = 1
//!
//! [selector]
//! grid = 0.5, 1, 1.5, 2
//! points = 2.5, 1.7, 1.5, 1.45  # or: delta = 5.5 (formula mode)
//! envelope_a = 0.92
//! envelope_beta_prime = 0.21
//! spacing_c = 2.5
//! ```

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, SignalSpec};
use crate::models::SignalModel;
use crate::selector::{EvalPoints, Grid};

fn parse_list<T: std::str::FromStr>(value: &str, what: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|part| {
            part.trim()
                .parse::<T>()
                .map_err(|_| Error::InvalidConfig(format!("bad {what} entry {:?}", part.trim())))
        })
        .collect()
}

fn parse_scalar<T: std::str::FromStr>(value: &str, what: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::InvalidConfig(format!("bad {what}: {value:?}")))
}

/// Parse a configuration file body into an [`ExperimentConfig`], starting
/// from [`ExperimentConfig::study_default`].
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::study_default();
    let mut signals: Option<Vec<String>> = None;
    let mut pre_scale: Option<f64> = None;
    let mut grid: Option<Vec<f64>> = None;
    let mut points: Option<Vec<f64>> = None;
    let mut delta: Option<f64> = None;

    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| Error::InvalidConfig(format!("line {}: {msg}", lineno + 1));
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| at(format!("malformed section header {line:?}")))?
                .trim();
            match name {
                "experiment" | "selector" => section = name.to_string(),
                other => return Err(at(format!("unknown section [{other}]"))),
            }
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| at(format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        match (section.as_str(), key) {
            ("experiment", "signals") => {
                signals = Some(value.split(',').map(|s| s.trim().to_string()).collect())
            }
            ("experiment", "pre_scale") => pre_scale = Some(parse_scalar(value, "pre_scale")?),
            ("experiment", "s_values") => config.s_values = parse_list(value, "s_values")?,
            ("experiment", "ns") => config.ns = parse_list(value, "ns")?,
            ("experiment", "replications") => {
                config.replications = parse_scalar(value, "replications")?
            }
            ("experiment", "master_seed") => config.master_seed = parse_scalar(value, "master_seed")?,
            ("selector", "grid") => grid = Some(parse_list(value, "grid")?),
            ("selector", "points") => points = Some(parse_list(value, "points")?),
            ("selector", "delta") => delta = Some(parse_scalar(value, "delta")?),
            ("selector", "envelope_a") => {
                config.selector.envelope_a = parse_scalar(value, "envelope_a")?
            }
            ("selector", "envelope_beta_prime") => {
                config.selector.envelope_beta_prime = parse_scalar(value, "envelope_beta_prime")?
            }
            ("selector", "spacing_c") => {
                config.selector.spacing_c = parse_scalar(value, "spacing_c")?
            }
            ("", _) => return Err(at(format!("key {key:?} before any section header"))),
            (_, _) => return Err(at(format!("unknown key {key:?} in section [{section}]"))),
        }
    }

    if let Some(names) = signals {
        let scale = pre_scale.unwrap_or(0.1);
        config.signals = names
            .iter()
            .map(|name| signal_by_name(name, scale))
            .collect::<Result<_>>()?;
    } else if let Some(scale) = pre_scale {
        for spec in &mut config.signals {
            spec.model = SignalModel::new(spec.model.kind, scale)?;
        }
    }

    if let Some(values) = grid {
        config.selector.grid = Grid::new(values)?;
    }
    match (points, delta) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidConfig(
                "give either `points` or `delta`, not both".into(),
            ))
        }
        (Some(p), None) => config.selector.eval_points = EvalPoints::Explicit(p),
        (None, Some(d)) => config.selector.eval_points = EvalPoints::Formula { delta: d },
        (None, None) => {
            if let EvalPoints::Explicit(pts) = &config.selector.eval_points {
                if pts.len() != config.selector.grid.len() {
                    return Err(Error::InvalidConfig(
                        "custom grid needs matching `points` or a `delta` for formula mode".into(),
                    ));
                }
            }
        }
    }
    config.validate()?;
    if let EvalPoints::Formula { delta } = config.selector.eval_points {
        let rec = config.selector.recommended_min_delta();
        if delta <= rec {
            eprintln!(
                "warning: delta = {delta} is below the recommended minimum {rec:.3} for this grid"
            );
        }
    }
    Ok(config)
}

/// Resolve a signal name from the config grammar (`laplace5` or `gamma`).
pub fn signal_by_name(name: &str, pre_scale: f64) -> Result<SignalSpec> {
    let model = match name {
        "laplace5" => SignalModel::laplace5(pre_scale)?,
        "gamma" => SignalModel::gamma_chi3(pre_scale)?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown signal {other:?} (expected laplace5 or gamma)"
            )))
        }
    };
    Ok(SignalSpec { id: name.to_string(), model })
}
