use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use signid_core::catalog::{self, CatalogId};
use signid_core::graph::{DirectedGraph, EdgeRef};
use signid_core::io::load_covariance_for;
use signid_core::model::CovarianceMatrix;

pub struct LoadedGraph {
    pub graph: DirectedGraph,
    /// Target edge declared by the file or implied by the catalog entry.
    pub target: Option<EdgeRef>,
}

/// `spec` is a path to a graph JSON file or the name of a catalog structure.
pub fn load_graph(spec: &str) -> Result<LoadedGraph> {
    let path = Path::new(spec);
    if path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let (graph, target) =
            DirectedGraph::from_json(&text).with_context(|| format!("loading graph {}", path.display()))?;
        return Ok(LoadedGraph { graph, target });
    }
    match spec.parse::<CatalogId>() {
        Ok(id) => {
            let e = catalog::entry(id);
            Ok(LoadedGraph {
                graph: e.graph,
                target: Some(e.target),
            })
        }
        Err(_) => bail!("`{spec}` is neither a graph file nor a catalog structure"),
    }
}

pub fn resolve_edge(loaded: &LoadedGraph, edge: Option<&EdgeRef>) -> Result<EdgeRef> {
    edge.or(loaded.target.as_ref())
        .cloned()
        .ok_or_else(|| anyhow!("no target edge: pass --edge SRC->DST or set target_edge in the graph file"))
}

/// Reads a covariance whose rows follow `names`.
pub fn load_sigma(path: &Path, names: &[&str]) -> Result<CovarianceMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    load_covariance_for(&text, names).with_context(|| format!("loading covariance {}", path.display()))
}

/// Parses `lo,hi`.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{}`: {e}", v.trim()));
    Ok((parse(lo)?, parse(hi)?))
}

/// Parses `COLUMN=PATH` for a proxy-structure graph file.
pub fn parse_proxy(s: &str) -> Result<(char, String), String> {
    let (col, path) = s
        .split_once('=')
        .ok_or_else(|| format!("expected COLUMN=PATH, got `{s}`"))?;
    let mut chars = col.trim().chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok((c.to_ascii_lowercase(), path.to_string())),
        _ => Err(format!("column must be a single letter, got `{col}`")),
    }
}
