//! Model files.
//!
//! ```text
//! # Kronig-Penney lattice
//! model = kronig_penney
//! period = 1
//! barrier_height = 10
//! barrier_width = 0.5
//! ```
//!
//! One `key = value` per line; `#` starts a comment. Piecewise-constant
//! models list their segments in order with repeated
//! `segment = width, p, q, s` lines.

use std::collections::BTreeMap;

use hill::coeffs::{Model, PeriodicCoefficients, Segment};

use crate::CliError;

const KNOWN_KEYS: &[&str] = &["model", "period", "v0", "barrier_height", "barrier_width", "amplitude", "segment"];

fn parameters_of(model: &str) -> Option<&'static [&'static str]> {
    Some(match model {
        "free_particle" => &[],
        "constant_shift" => &["v0"],
        "kronig_penney" => &["barrier_height", "barrier_width"],
        "mathieu" => &["amplitude"],
        "piecewise_constant" => &["segment"],
        _ => return None,
    })
}

fn invalid(field: &str, line: usize, reason: impl std::fmt::Display) -> CliError {
    if line == 0 {
        CliError::Validation(format!("config field `{field}`: {reason}"))
    } else {
        CliError::Validation(format!("config field `{field}` (line {line}): {reason}"))
    }
}

fn number(field: &str, line: usize, text: &str) -> Result<f64, CliError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| invalid(field, line, format!("`{}` is not a number", text.trim())))?;
    if !v.is_finite() {
        return Err(invalid(field, line, "must be finite"));
    }
    Ok(v)
}

/// Parses a model file into validated coefficients.
pub fn parse(text: &str) -> Result<PeriodicCoefficients, CliError> {
    let mut scalars: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut segments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("config line {line_no}: expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(invalid(key, line_no, "unknown key"));
        }
        if value.is_empty() {
            return Err(invalid(key, line_no, "missing value"));
        }
        if key == "segment" {
            let fields: Vec<&str> = value.split(',').collect();
            if fields.len() != 4 {
                return Err(invalid(key, line_no, "expected `width, p, q, s`"));
            }
            let v = fields
                .iter()
                .map(|f| number(key, line_no, f))
                .collect::<Result<Vec<_>, _>>()?;
            segments.push((line_no, Segment::new(v[0], v[1], v[2], v[3])));
        } else if let Some((first, _)) = scalars.insert(key, (line_no, value)) {
            return Err(invalid(key, line_no, format!("already set on line {first}")));
        }
    }

    let (model_line, model_name) = *scalars.get("model").ok_or_else(|| invalid("model", 0, "missing"))?;
    let allowed = parameters_of(model_name).ok_or_else(|| {
        invalid(
            "model",
            model_line,
            format!(
                "unknown model `{model_name}` (expected free_particle, constant_shift, kronig_penney, \
                 mathieu or piecewise_constant)"
            ),
        )
    })?;
    for (&key, &(line, _)) in &scalars {
        if key != "model" && key != "period" && !allowed.contains(&key) {
            return Err(invalid(key, line, format!("not a parameter of `{model_name}`")));
        }
    }
    if let Some(&(line, _)) = segments.first() {
        if model_name != "piecewise_constant" {
            return Err(invalid("segment", line, format!("not a parameter of `{model_name}`")));
        }
    }

    let get = |key: &str| -> Result<f64, CliError> {
        let (line, text) = scalars.get(key).ok_or_else(|| invalid(key, 0, "missing"))?;
        number(key, *line, text)
    };
    let period = get("period")?;
    let model = match model_name {
        "free_particle" => Model::FreeParticle,
        "constant_shift" => Model::ConstantShift { v0: get("v0")? },
        "kronig_penney" => Model::KronigPenney {
            barrier_height: get("barrier_height")?,
            barrier_width: get("barrier_width")?,
        },
        "mathieu" => Model::Mathieu {
            amplitude: get("amplitude")?,
        },
        _ => {
            if segments.is_empty() {
                return Err(invalid("segment", 0, "piecewise_constant needs at least one segment"));
            }
            Model::PiecewiseConstant {
                segments: segments.into_iter().map(|(_, s)| s).collect(),
            }
        }
    };
    PeriodicCoefficients::new(period, model).map_err(CliError::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn message(text: &str) -> String {
        match parse(text) {
            Err(CliError::Validation(m)) => m,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn kronig_penney_file() {
        let c = parse("# lattice\nmodel = kronig_penney\nperiod = 1.0\nbarrier_height = 10 # eV\nbarrier_width = 0.5\n")
            .unwrap();
        assert_eq!(
            c.model(),
            &Model::KronigPenney {
                barrier_height: 10.0,
                barrier_width: 0.5
            }
        );
    }

    #[test]
    fn segments_in_order() {
        let c = parse("model = piecewise_constant\nperiod = 1\nsegment = 0.25, 1, 4, 1\nsegment = 0.75,2,0,1\n").unwrap();
        let Model::PiecewiseConstant { segments } = c.model() else {
            panic!()
        };
        assert_eq!(segments, &vec![Segment::new(0.25, 1.0, 4.0, 1.0), Segment::new(0.75, 2.0, 0.0, 1.0)]);
    }

    #[test]
    fn errors_name_the_field() {
        assert!(message("model = mathieu\nperiod = 1\n").contains("`amplitude`"));
        assert!(message("model = mathieu\nperiod = 1\namplitude = x\n").contains("`amplitude` (line 3)"));
        assert!(message("model = free_particle\nperiod = 1\ncolour = red\n").contains("`colour`"));
        assert!(message("model = free_particle\nperiod = 1\nv0 = 2\n").contains("`v0`"));
        assert!(message("model = free_particle\nperiod = 1\nperiod = 2\n").contains("already set on line 2"));
        assert!(message("model = crystal\nperiod = 1\n").contains("unknown model"));
        assert!(message("model = free_particle\nperiod\n").contains("line 2"));
        assert!(message("model = piecewise_constant\nperiod = 1\nsegment = 1, 1, 0\n").contains("`segment`"));
    }

    #[test]
    fn coefficient_errors_are_validation_errors() {
        let m = message("model = piecewise_constant\nperiod = 1\nsegment = 1, 0, 0, 1\n");
        assert!(m.contains("p vanishes"), "{m}");
        let m = message("model = free_particle\nperiod = -1\n");
        assert!(m.contains("period"), "{m}");
    }
}
