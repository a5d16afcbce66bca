use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// One line of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub scenario: String,
    pub quantity: String,
    pub parameter: String,
    pub value: Option<f64>,
    pub text: String,
}

/// 17 significant digits, so values survive a text round trip.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io(dir))
}

/// Writes a table whose first line is `header`.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Serialize(e.to_string()))?;
    let err = |e: csv::Error| CliError::Serialize(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.flush().map_err(io(path))
}

/// `results.csv` or `results.json` in `dir`.
pub fn write_rows(dir: &Path, rows: &[Row], format: Format) -> CliResult<PathBuf> {
    match format {
        Format::Csv => {
            let path = dir.join("results.csv");
            let body = rows.iter().map(|r| {
                vec![
                    r.experiment.clone(),
                    r.scenario.clone(),
                    r.quantity.clone(),
                    r.parameter.clone(),
                    r.value.map(fmt_f64).unwrap_or_default(),
                    r.text.clone(),
                ]
            });
            write_table(&path, &["experiment", "scenario", "quantity", "parameter", "value", "text"], body)?;
            Ok(path)
        }
        Format::Json => {
            let path = dir.join("results.json");
            write_json(&path, &rows)?;
            Ok(path)
        }
    }
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Serialize(e.to_string()))?;
    fs::write(path, text + "\n").map_err(io(path))
}
