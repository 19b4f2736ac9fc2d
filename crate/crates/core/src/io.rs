//! Covariance file formats.
//!
//! Two inputs are accepted: header-less CSV (`d` rows of `d` decimals, in
//! the graph's node order) and JSON with an explicit node order,
//! `{"nodes": ["H", "Y"], "sigma": [[..], [..]]}`, which is realigned to the
//! graph so row-order mistakes cannot slip through.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::DirectedGraph;
use crate::linalg::{LinalgError, Matrix, SymmetricMatrix};
use crate::model::{CovarianceMatrix, ModelError};

/// Relative asymmetry above which an input matrix is rejected.
pub const ASYMMETRY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("covariance CSV, line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("covariance JSON: {0}")]
    Json(String),
    #[error("covariance must be square, got {rows} rows and {cols} columns")]
    NotSquare { rows: usize, cols: usize },
    #[error("covariance is not symmetric at ({row}, {col}): |difference| = {gap:e}")]
    Asymmetric { row: usize, col: usize, gap: f64 },
    #[error("covariance nodes do not match the graph: {0}")]
    NodeMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn symmetric_from_rows(rows: Vec<Vec<f64>>) -> Result<SymmetricMatrix, IoError> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(IoError::NotSquare {
            rows: n,
            cols: bad.len(),
        });
    }
    let m = Matrix::from_rows(&rows).map_err(|e| match e {
        LinalgError::Empty => IoError::NotSquare { rows: 0, cols: 0 },
        other => IoError::Model(other.into()),
    })?;
    SymmetricMatrix::from_matrix(&m, ASYMMETRY_TOL).map_err(|e| match e {
        LinalgError::NotSymmetric { row, col, gap } => IoError::Asymmetric { row, col, gap },
        other => IoError::Model(other.into()),
    })
}

/// Parses header-less CSV rows into a positive definite covariance.
pub fn parse_covariance_csv(text: &str) -> Result<CovarianceMatrix, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| IoError::Csv {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| IoError::Csv {
                        line,
                        message: format!("`{field}` is not a finite decimal number"),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(CovarianceMatrix::new(symmetric_from_rows(rows)?)?)
}

/// A covariance matrix with the node label of every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledCovariance {
    pub nodes: Vec<String>,
    pub sigma: Vec<Vec<f64>>,
}

impl LabeledCovariance {
    pub fn new(nodes: Vec<String>, sigma: &CovarianceMatrix) -> Self {
        Self {
            nodes,
            sigma: sigma.sigma().to_matrix().to_rows(),
        }
    }

    /// Reorders rows and columns into the graph's node order.
    pub fn align_to(&self, g: &DirectedGraph) -> Result<CovarianceMatrix, IoError> {
        self.align_to_names(&g.node_names())
    }

    /// Reorders rows and columns into the order of `names`.
    pub fn align_to_names(&self, names: &[&str]) -> Result<CovarianceMatrix, IoError> {
        if self.sigma.len() != self.nodes.len() {
            return Err(IoError::NodeMismatch(format!(
                "{} node labels for {} rows",
                self.nodes.len(),
                self.sigma.len()
            )));
        }
        let sigma = CovarianceMatrix::new(symmetric_from_rows(self.sigma.clone())?)?;
        let mut order = Vec::with_capacity(names.len());
        for name in names {
            let pos = self
                .nodes
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| IoError::NodeMismatch(format!("graph node `{name}` is missing")))?;
            order.push(pos);
        }
        if let Some(extra) = self.nodes.iter().find(|n| !names.contains(&n.as_str())) {
            return Err(IoError::NodeMismatch(format!("`{extra}` is not a graph node")));
        }
        if self.nodes.len() != names.len() {
            return Err(IoError::NodeMismatch("duplicate node labels".into()));
        }
        Ok(sigma.permuted(&order))
    }
}

/// Loads either format, detected from the first non-blank character.
pub fn load_covariance(text: &str, g: &DirectedGraph) -> Result<CovarianceMatrix, IoError> {
    load_covariance_for(text, &g.node_names())
}

/// As [`load_covariance`], for rows labelled by `names` (for example the
/// observed nodes of a graph with latent ones).
pub fn load_covariance_for(text: &str, names: &[&str]) -> Result<CovarianceMatrix, IoError> {
    let sigma = if text.trim_start().starts_with('{') {
        let labeled: LabeledCovariance = serde_json::from_str(text).map_err(|e| IoError::Json(e.to_string()))?;
        labeled.align_to_names(names)?
    } else {
        parse_covariance_csv(text)?
    };
    if sigma.dim() != names.len() {
        return Err(IoError::NodeMismatch(format!(
            "covariance is {d}x{d} but {} nodes are expected",
            names.len(),
            d = sigma.dim()
        )));
    }
    Ok(sigma)
}

/// `d` lines of `d` comma-separated values, shortest round-trip formatting.
pub fn covariance_to_csv(sigma: &CovarianceMatrix) -> String {
    let n = sigma.dim();
    let mut out = String::new();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{:?}", sigma.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ce() -> DirectedGraph {
        DirectedGraph::observed(&["H", "Y"], &[("H", "Y")]).unwrap()
    }

    #[test]
    fn csv_roundtrip() {
        let s = parse_covariance_csv("0.5, 0.25\n0.25,0.75\n").unwrap();
        assert_eq!(s.get(0, 1), 0.25);
        let text = covariance_to_csv(&s);
        assert_eq!(text, "0.5,0.25\n0.25,0.75\n");
        assert_eq!(parse_covariance_csv(&text).unwrap(), s);
    }

    #[test]
    fn csv_tolerates_blank_lines_and_comments() {
        let s = parse_covariance_csv("# sigma\n1,0.1\n\n0.1,1\n").unwrap();
        assert_eq!(s.dim(), 2);
    }

    #[test]
    fn csv_symmetrizes_small_asymmetry() {
        let s = parse_covariance_csv("1,0.3\n0.3000000001,1\n").unwrap();
        assert!((s.get(0, 1) - 0.30000000005).abs() < 1e-15);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(
            parse_covariance_csv("1,0.3\n0.5,1\n"),
            Err(IoError::Asymmetric { .. })
        ));
        assert!(matches!(
            parse_covariance_csv("1,0.3\n0.3\n"),
            Err(IoError::NotSquare { .. })
        ));
        assert!(matches!(
            parse_covariance_csv("1,abc\n0.3,1\n"),
            Err(IoError::Csv { line: 1, .. })
        ));
        assert!(matches!(
            parse_covariance_csv("1,2\n2,1\n"),
            Err(IoError::Model(ModelError::NotPositiveDefinite))
        ));
        assert!(matches!(parse_covariance_csv(""), Err(IoError::NotSquare { .. })));
        assert!(matches!(parse_covariance_csv("1,nan\nnan,1"), Err(IoError::Csv { .. })));
    }

    #[test]
    fn json_is_realigned() {
        let text = r#"{"nodes":["Y","H"],"sigma":[[0.75,0.25],[0.25,0.5]]}"#;
        let s = load_covariance(text, &ce()).unwrap();
        assert_eq!(s.get(0, 0), 0.5);
        assert_eq!(s.get(1, 1), 0.75);
    }

    #[test]
    fn json_node_mismatches() {
        for text in [
            r#"{"nodes":["Y","Q"],"sigma":[[0.75,0.25],[0.25,0.5]]}"#,
            r#"{"nodes":["Y"],"sigma":[[0.75,0.25],[0.25,0.5]]}"#,
            r#"{"nodes":["Y","H","Q"],"sigma":[[1,0,0],[0,1,0],[0,0,1]]}"#,
        ] {
            assert!(
                matches!(load_covariance(text, &ce()), Err(IoError::NodeMismatch(_))),
                "{text}"
            );
        }
        assert!(matches!(load_covariance("{bad", &ce()), Err(IoError::Json(_))));
        assert!(matches!(load_covariance("1\n", &ce()), Err(IoError::NodeMismatch(_))));
    }
}
