//! Model files, observation and state files, CSV output.
//!
//! A model file is TOML:
//!
//! ```toml
//! states = 2            # optional, checked against the vectors
//! pi = [1.0, 0.0]
//! gamma = [[0.928, 0.072], [0.119, 0.881]]
//! lambda = [15.4, 26.0]
//! ```
//!
//! Observation and state files hold one integer per line with an optional
//! header line. Blank lines and lines starting with `#` are skipped. States
//! are written 1-based.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{HmmModel, ObsSeq, Renormalization, StateSeq, ValidationOptions};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    states: Option<usize>,
    pi: Vec<f64>,
    gamma: Vec<Vec<f64>>,
    lambda: Vec<f64>,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_model(
    text: &str,
    origin: &str,
    options: ValidationOptions,
) -> Result<(HmmModel, Vec<Renormalization>)> {
    let file: ModelFile = toml::from_str(text).map_err(|e| Error::Parse {
        path: origin.into(),
        line: e
            .span()
            .map(|s| text[..s.start].lines().count().max(1))
            .unwrap_or(0),
        message: e.message().to_string(),
    })?;
    if let Some(k) = file.states {
        if k != file.pi.len() {
            return Err(Error::InvalidModel(format!(
                "states = {k} but pi has {} entries",
                file.pi.len()
            )));
        }
    }
    HmmModel::validated(file.pi, file.gamma, file.lambda, options)
}

pub fn read_model(
    path: &Path,
    options: ValidationOptions,
) -> Result<(HmmModel, Vec<Renormalization>)> {
    parse_model(&read_to_string(path)?, &path.display().to_string(), options)
}

pub fn model_to_toml(model: &HmmModel) -> String {
    let list = |v: &[f64]| {
        v.iter()
            .map(|x| format_real(*x))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut s = format!(
        "states = {}\npi = [{}]\ngamma = [\n",
        model.num_states(),
        list(model.pi())
    );
    for i in 0..model.num_states() {
        let _ = writeln!(s, "  [{}],", list(model.gamma_row(i)));
    }
    let _ = writeln!(s, "]\nlambda = [{}]", list(model.lambda()));
    s
}

/// Integers one per line; a first line that is not a number is a header.
fn parse_integer_column(text: &str, origin: &str) -> Result<Vec<(usize, u64)>> {
    let mut values = Vec::new();
    let mut seen_content = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        // first field only, so `t,count` style files with a single column still work
        let field = line.split(',').next().unwrap_or("").trim();
        match field.parse::<u64>() {
            Ok(v) => values.push((i + 1, v)),
            Err(_) if !seen_content && field.chars().next().is_some_and(|c| c.is_alphabetic()) => {}
            Err(_) => {
                return Err(Error::Parse {
                    path: origin.into(),
                    line: i + 1,
                    message: format!("expected a non-negative integer, found {field:?}"),
                })
            }
        }
        seen_content = true;
    }
    if values.is_empty() {
        return Err(Error::Parse {
            path: origin.into(),
            line: 0,
            message: "no values".into(),
        });
    }
    Ok(values)
}

pub fn parse_observations(text: &str, origin: &str) -> Result<ObsSeq> {
    ObsSeq::new(
        parse_integer_column(text, origin)?
            .into_iter()
            .map(|(_, v)| v)
            .collect(),
    )
}

pub fn read_observations(path: &Path) -> Result<ObsSeq> {
    parse_observations(&read_to_string(path)?, &path.display().to_string())
}

/// 1-based state labels.
pub fn parse_states(text: &str, origin: &str) -> Result<StateSeq> {
    let labels = parse_integer_column(text, origin)?;
    if let Some((line, v)) = labels.iter().find(|(_, v)| *v == 0) {
        return Err(Error::Parse {
            path: origin.into(),
            line: *line,
            message: format!("state labels start at 1, found {v}"),
        });
    }
    StateSeq::from_labels(
        &labels
            .into_iter()
            .map(|(_, v)| v as usize)
            .collect::<Vec<_>>(),
    )
}

pub fn read_states(path: &Path) -> Result<StateSeq> {
    parse_states(&read_to_string(path)?, &path.display().to_string())
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Real number with 12 significant digits; `inf`, `-inf` and `nan` spelled out.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

/// Parses what [`format_real`] writes.
pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        "nan" => Some(f64::NAN),
        t => t.parse().ok(),
    }
}

/// Minimal CSV builder; fields never contain commas.
#[derive(Debug, Default, Clone)]
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn with_header(columns: &[&str]) -> Self {
        let mut c = Self::default();
        c.row(columns.iter().map(|s| s.to_string()));
        c
    }

    pub fn row(&mut self, fields: impl IntoIterator<Item = String>) {
        let fields: Vec<String> = fields.into_iter().collect();
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_file(path, &self.text)
    }
}
