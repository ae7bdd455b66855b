//! Matrix and train arguments: inline `rows` specs or `@path` JSON records.

use std::fs;
use std::io::Read;

use padic_gl::format::{self, CertificateRecord, MatrixRecord, TrainRecord};
use padic_gl::{GroupElement, Modulus, TrainCoset};
use serde::de::DeserializeOwned;

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("{source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error("{0}: {1}")]
    Io(String, std::io::Error),

    #[error(transparent)]
    Library(#[from] padic_gl::Error),
}

fn parse_err(source_name: &str, message: impl Into<String>) -> InputError {
    InputError::Parse {
        source_name: source_name.to_string(),
        message: message.into(),
    }
}

/// Reads `path`, or stdin for `-`.
pub fn read_text(path: &str) -> Result<String, InputError> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| InputError::Io("stdin".into(), e))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| InputError::Io(path.into(), e))
    }
}

pub fn read_json<T: DeserializeOwned>(path: &str) -> Result<T, InputError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, format!("line {}, column {}: {e}", e.line(), e.column())))
}

pub fn parse_rows(spec: &str, modulus: Modulus) -> Result<GroupElement, InputError> {
    format::parse_rows(spec, modulus).map_err(|e| parse_err("rows", e.to_string()))
}

fn check_modulus(found: Modulus, expected: Modulus, source_name: &str) -> Result<(), InputError> {
    if found != expected {
        return Err(parse_err(
            source_name,
            format!("record is over {found}, flags say {expected}"),
        ));
    }
    Ok(())
}

/// `@path` loads a matrix record, anything else is an inline rows spec.
pub fn matrix_arg(arg: &str, modulus: Modulus) -> Result<GroupElement, InputError> {
    match arg.strip_prefix('@') {
        Some(path) => {
            let rec: MatrixRecord = read_json(path)?;
            let g = rec.to_element().map_err(|e| parse_err(path, e.to_string()))?;
            check_modulus(g.modulus(), modulus, path)?;
            Ok(g)
        }
        None => parse_rows(arg, modulus),
    }
}

/// `@path` loads a train record; inline form is `alpha/gamma/rows|rows|...`.
pub fn train_arg(arg: &str, modulus: Modulus) -> Result<TrainCoset, InputError> {
    if let Some(path) = arg.strip_prefix('@') {
        let rec: TrainRecord = read_json(path)?;
        let t = rec.to_train().map_err(|e| parse_err(path, e.to_string()))?;
        check_modulus(t.rep.modulus(), modulus, path)?;
        return Ok(t);
    }
    format::parse_train(arg, modulus).map_err(|e| parse_err("train", e.to_string()))
}

/// A bare certificate record or any report object carrying one under `certificate`.
pub fn certificate_arg(path: &str) -> Result<CertificateRecord, InputError> {
    let value: serde_json::Value = read_json(path)?;
    let inner = value.get("certificate").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| parse_err(path, e.to_string()))
}
