//! The on-disk matrix format: `{"n": 2, "data": [[re, im], ...]}` with
//! `n * n` entries in row-major order.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::matcore::ComplexMatrix;

#[derive(Debug, Error)]
pub enum MatFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> MatFileError {
    MatFileError::Field {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        Self {
            n: m.n(),
            data: m.to_row_major().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix, MatFileError> {
        let expected = self.n * self.n;
        if self.n == 0 {
            return Err(field_err("n", "must be at least 1"));
        }
        if self.data.len() != expected {
            return Err(field_err(
                "data",
                format!(
                    "expected {expected} entries for n = {}, found {}",
                    self.n,
                    self.data.len()
                ),
            ));
        }
        for (i, [re, im]) in self.data.iter().enumerate() {
            if !re.is_finite() || !im.is_finite() {
                return Err(field_err(format!("data[{i}]"), "entry is not finite"));
            }
        }
        let entries = self
            .data
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        ComplexMatrix::new(self.n, entries).map_err(|e| field_err("data", e.to_string()))
    }

    /// Parses a matrix document. A document with an `inverse` member and no
    /// `n` (the output of the compute command) is read through that member.
    pub fn parse(text: &str) -> Result<Self, MatFileError> {
        let v: Value = serde_json::from_str(text)?;
        let obj = v
            .as_object()
            .ok_or_else(|| field_err("<root>", "expected a JSON object"))?;
        if !obj.contains_key("n") {
            if let Some(inner) = obj.get("inverse") {
                return Self::from_value(inner, "inverse.");
            }
        }
        Self::from_value(&v, "")
    }

    fn from_value(v: &Value, prefix: &str) -> Result<Self, MatFileError> {
        let f = |name: &str| format!("{prefix}{name}");
        let obj = v.as_object().ok_or_else(|| {
            field_err(
                if prefix.is_empty() {
                    "<root>".into()
                } else {
                    prefix.trim_end_matches('.').to_string()
                },
                "expected a JSON object",
            )
        })?;
        let n = obj
            .get("n")
            .ok_or_else(|| field_err(f("n"), "missing"))?
            .as_u64()
            .ok_or_else(|| field_err(f("n"), "expected a non-negative integer"))?;
        let data = obj
            .get("data")
            .ok_or_else(|| field_err(f("data"), "missing"))?
            .as_array()
            .ok_or_else(|| field_err(f("data"), "expected an array of [re, im] pairs"))?;
        let mut entries = Vec::with_capacity(data.len());
        for (i, e) in data.iter().enumerate() {
            let pair = e.as_array().filter(|a| a.len() == 2).ok_or_else(|| {
                field_err(
                    f(&format!("data[{i}]")),
                    "expected a two-element array [re, im]",
                )
            })?;
            let mut parts = [0.0; 2];
            for (k, part) in pair.iter().enumerate() {
                parts[k] = part
                    .as_f64()
                    .ok_or_else(|| field_err(f(&format!("data[{i}][{k}]")), "expected a number"))?;
            }
            entries.push(parts);
        }
        let file = MatrixFile {
            n: n as usize,
            data: entries,
        };
        file.to_matrix().map_err(|e| match e {
            MatFileError::Field { field, message } => field_err(f(&field), message),
            other => other,
        })?;
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite matrix entries serialize")
    }
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix, MatFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| MatFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    MatrixFile::parse(&text)?.to_matrix()
}

pub fn write_matrix(path: &Path, m: &ComplexMatrix) -> Result<(), MatFileError> {
    std::fs::write(path, MatrixFile::from_matrix(m).to_json() + "\n").map_err(|source| {
        MatFileError::Io {
            path: path.display().to_string(),
            source,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_of(text: &str) -> String {
        match MatrixFile::parse(text).unwrap_err() {
            MatFileError::Field { field, .. } => field,
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn round_trip() {
        let m = ComplexMatrix::new(
            2,
            vec![
                Complex64::new(1.0, -0.5),
                Complex64::new(0.1, 0.0),
                Complex64::new(0.0, 3.0),
                Complex64::new(-2.0, 1e-300),
            ],
        )
        .unwrap();
        let f = MatrixFile::from_matrix(&m);
        let back = MatrixFile::parse(&f.to_json())
            .unwrap()
            .to_matrix()
            .unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn compute_output_is_accepted() {
        let text = r#"{"index":2,"inverse":{"n":1,"data":[[0.5,0.0]]},"residuals":{}}"#;
        let m = MatrixFile::parse(text).unwrap().to_matrix().unwrap();
        assert_eq!(m.get(0, 0), Complex64::new(0.5, 0.0));
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of(r#"{"data":[]}"#), "n");
        assert_eq!(field_of(r#"{"n":-1,"data":[]}"#), "n");
        assert_eq!(field_of(r#"{"n":1}"#), "data");
        assert_eq!(field_of(r#"{"n":1,"data":[[1.0]]}"#), "data[0]");
        assert_eq!(field_of(r#"{"n":1,"data":[[1.0,"x"]]}"#), "data[0][1]");
        assert_eq!(field_of(r#"{"n":2,"data":[[1.0,0.0]]}"#), "data");
        assert_eq!(field_of(r#"{"n":0,"data":[]}"#), "n");
        assert_eq!(field_of(r#"[1,2]"#), "<root>");
        assert_eq!(
            field_of(r#"{"inverse":{"n":1,"data":[[1.0]]}}"#),
            "inverse.data[0]"
        );
    }
}
