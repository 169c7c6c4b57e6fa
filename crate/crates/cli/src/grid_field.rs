//! Plain-text grid fields: `key = value` header lines, a `data` line, then
//! one sample point per line in row-major order (last axis fastest).
//!
//! ```text
//! # comment
//! field = metric
//! shape = 9 9
//! spacing = 0.125 0.125
//! origin = 0 0
//! components = 4
//! data
//! -1 0 0 1
//! ...
//! ```
//!
//! Metric points list `g_{μν}` row by row (`D²` values); residual points list
//! `R^ν` (`D` values).

use std::fmt::Write as _;

use gravdeco::harmonic::{Lattice, MetricField, ResidualField};
use gravdeco::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub field: String,
    pub lattice: Lattice,
    pub components: usize,
    pub values: Vec<f64>,
}

/// Line-numbered format problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError { line, message: message.into() })
}

fn numbers<T: std::str::FromStr>(line: usize, key: &str, text: &str) -> Result<Vec<T>, FormatError> {
    text.split_whitespace()
        .map(|tok| tok.parse().or_else(|_| err(line, format!("{key}: cannot parse '{tok}'"))))
        .collect()
}

pub fn parse(text: &str) -> Result<GridField, FormatError> {
    let mut field = None;
    let mut shape: Option<Vec<usize>> = None;
    let mut spacing: Option<Vec<f64>> = None;
    let mut origin: Option<Vec<f64>> = None;
    let mut components: Option<usize> = None;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut data_line = 0;
    for (n, line) in lines.by_ref() {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "data" {
            data_line = n;
            break;
        }
        let Some((key, value)) = line.split_once('=') else {
            return err(n, format!("expected 'key = value', found '{line}'"));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "field" => field = Some(value.to_string()),
            "shape" => shape = Some(numbers(n, key, value)?),
            "spacing" => spacing = Some(numbers(n, key, value)?),
            "origin" => origin = Some(numbers(n, key, value)?),
            "components" => {
                components = Some(value.parse().or_else(|_| err(n, format!("components: cannot parse '{value}'")))?)
            }
            other => return err(n, format!("unknown header key '{other}'")),
        }
    }
    if data_line == 0 {
        return err(text.lines().count().max(1), "missing 'data' line");
    }
    let (Some(field), Some(shape), Some(spacing), Some(origin), Some(components)) =
        (field, shape, spacing, origin, components)
    else {
        return err(data_line, "header needs field, shape, spacing, origin and components");
    };
    let lattice = Lattice::new(shape, spacing, origin).or_else(|e| err(data_line, e.to_string()))?;
    let mut values = Vec::with_capacity(lattice.len() * components);
    let mut rows = 0;
    for (n, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = numbers(n, "data", line)?;
        if row.len() != components {
            return err(n, format!("expected {components} values, found {}", row.len()));
        }
        values.extend(row);
        rows += 1;
    }
    if rows != lattice.len() {
        return err(data_line, format!("expected {} data rows, found {rows}", lattice.len()));
    }
    Ok(GridField { field, lattice, components, values })
}

fn join<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

/// Shortest round-trip decimal form for every number.
pub fn write(field: &GridField) -> String {
    let mut out = String::new();
    let l = &field.lattice;
    let _ = writeln!(out, "field = {}", field.field);
    let _ = writeln!(out, "shape = {}", join(&l.shape));
    let _ = writeln!(out, "spacing = {}", join(&l.spacing));
    let _ = writeln!(out, "origin = {}", join(&l.origin));
    let _ = writeln!(out, "components = {}", field.components);
    out.push_str("data\n");
    for row in field.values.chunks(field.components) {
        out.push_str(&join(row));
        out.push('\n');
    }
    out
}

impl GridField {
    pub fn from_metric(metric: &MetricField) -> Self {
        let d = metric.lattice().dim();
        Self {
            field: "metric".into(),
            lattice: metric.lattice().clone(),
            components: d * d,
            values: metric.components().to_vec(),
        }
    }

    pub fn from_residual(residual: &ResidualField) -> Self {
        Self {
            field: "residual".into(),
            lattice: residual.lattice.clone(),
            components: residual.lattice.dim(),
            values: residual.values.clone(),
        }
    }

    /// Header mismatches are domain errors; sample points that fail the
    /// metric checks keep their own error kind.
    pub fn into_metric(self) -> gravdeco::Result<MetricField> {
        let d = self.lattice.dim();
        if self.field != "metric" {
            return Err(Error::Domain(format!("expected a metric field, found '{}'", self.field)));
        }
        if self.components != d * d {
            return Err(Error::DimensionMismatch(format!(
                "a metric on {d} axes needs {} components, found {}",
                d * d,
                self.components
            )));
        }
        MetricField::new(self.lattice, self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let lat = Lattice::new(vec![3, 4], vec![0.1, 1.0 / 3.0], vec![-1.0, 0.5]).unwrap();
        let metric =
            MetricField::from_fn(lat, |x| vec![-1.0 - 0.01 * x[0], 0.1 * x[1], 0.1 * x[1], 1.0 / 7.0]).unwrap();
        let text = write(&GridField::from_metric(&metric));
        let back = parse(&text).unwrap().into_metric().unwrap();
        assert_eq!(back, metric);
    }

    #[test]
    fn wrong_row_width_reports_line() {
        let text = "field = metric\nshape = 3 3\nspacing = 1 1\norigin = 0 0\ncomponents = 4\ndata\n-1 0 0 1\n-1 0 0\n";
        let e = parse(text).unwrap_err();
        assert_eq!(e.line, 8);
    }

    #[test]
    fn missing_header_key() {
        let e = parse("field = metric\nshape = 3 3\ndata\n").unwrap_err();
        assert!(e.message.contains("header"));
    }

    #[test]
    fn row_count_is_checked() {
        let text = "field = metric\nshape = 3 3\nspacing = 1 1\norigin = 0 0\ncomponents = 4\ndata\n-1 0 0 1\n";
        assert!(parse(text).unwrap_err().message.contains("data rows"));
    }
}
