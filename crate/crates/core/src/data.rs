//! Field datasets and their delimiter-separated text format.
//!
//! Files carry a header `x1,...,xd,y`, one observation per row, decimal
//! floats, and `#` line comments. Commas, semicolons, tabs or runs of spaces
//! separate fields.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::Domain;
use crate::error::{domain, FmmtError, Result};

/// Observations `(x_i, y_i)` inside a domain box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub responses: Vec<f64>,
    pub source: Option<String>,
}

impl Dataset {
    /// Validates finiteness, shape and domain membership.
    pub fn new(points: Vec<Vec<f64>>, responses: Vec<f64>, bx: &Domain) -> Result<Self> {
        if points.is_empty() {
            return domain("dataset is empty");
        }
        if points.len() != responses.len() {
            return domain(format!(
                "{} input rows but {} responses",
                points.len(),
                responses.len()
            ));
        }
        for (i, (p, y)) in points.iter().zip(&responses).enumerate() {
            if p.iter().any(|v| !v.is_finite()) || !y.is_finite() {
                return domain(format!("row {} contains a non-finite value", i + 1));
            }
            bx.check_contains(p)
                .map_err(|e| FmmtError::Domain(format!("row {}: {e}", i + 1)))?;
        }
        Ok(Self {
            points,
            responses,
            source: None,
        })
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }

    /// Serializes in the same text format [`parse_dataset`] reads.
    pub fn to_text(&self) -> String {
        let d = self.dim();
        let mut out = String::new();
        let header: Vec<String> = (1..=d)
            .map(|m| format!("x{m}"))
            .chain(["y".into()])
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (p, y) in self.points.iter().zip(&self.responses) {
            for v in p {
                let _ = write!(out, "{v:?},");
            }
            let _ = writeln!(out, "{y:?}");
        }
        out
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c == ';' || c == '\t' || c == ' ')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

/// Parses dataset text. Line numbers in errors are 1-based file lines.
pub fn parse_dataset(text: &str, bx: &Domain) -> Result<Dataset> {
    let d = bx.dim();
    let mut header_seen = false;
    let mut points = Vec::new();
    let mut responses = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields = split_fields(line);
        if !header_seen {
            header_seen = true;
            if fields.iter().any(|f| f.parse::<f64>().is_err()) {
                let expected: Vec<String> = (1..=d)
                    .map(|m| format!("x{m}"))
                    .chain(["y".into()])
                    .collect();
                if fields.len() != d + 1 {
                    return Err(FmmtError::Parse {
                        line: line_no,
                        message: format!(
                            "header has {} columns, expected {} ({})",
                            fields.len(),
                            d + 1,
                            expected.join(",")
                        ),
                    });
                }
                continue;
            }
        }
        if fields.len() != d + 1 {
            return Err(FmmtError::Parse {
                line: line_no,
                message: format!("expected {} fields, found {}", d + 1, fields.len()),
            });
        }
        let mut values = Vec::with_capacity(d + 1);
        for f in &fields {
            let v: f64 = f.parse().map_err(|_| FmmtError::Parse {
                line: line_no,
                message: format!("cannot parse '{f}' as a number"),
            })?;
            if !v.is_finite() {
                return Err(FmmtError::Parse {
                    line: line_no,
                    message: format!("non-finite value '{f}'"),
                });
            }
            values.push(v);
        }
        let y = values.pop().unwrap_or_default();
        for (m, v) in values.iter().enumerate() {
            if *v < bx.lower()[m] || *v > bx.upper()[m] {
                return Err(FmmtError::Parse {
                    line: line_no,
                    message: format!(
                        "x{} = {v} outside domain bound [{}, {}]",
                        m + 1,
                        bx.lower()[m],
                        bx.upper()[m]
                    ),
                });
            }
        }
        points.push(values);
        responses.push(y);
    }
    if points.is_empty() {
        return Err(FmmtError::Parse {
            line: 0,
            message: "no data rows".into(),
        });
    }
    Dataset::new(points, responses, bx)
}

/// Reads and parses a dataset file.
pub fn load_dataset(path: &Path, bx: &Domain) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| FmmtError::Parse {
        line: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    Ok(parse_dataset(&text, bx)?.with_source(path.display().to_string()))
}
