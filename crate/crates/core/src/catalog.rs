//! The six built-in structures and recognition of user graphs as one of them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph::{DirectedGraph, EdgeRef};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatalogId {
    CauseEffect,
    Chain,
    Confounding,
    ThreeCycle,
    Iv,
    CycleWithIv,
}

impl CatalogId {
    pub const ALL: [CatalogId; 6] = [
        CatalogId::CauseEffect,
        CatalogId::Chain,
        CatalogId::Confounding,
        CatalogId::ThreeCycle,
        CatalogId::Iv,
        CatalogId::CycleWithIv,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CatalogId::CauseEffect => "cause-effect",
            CatalogId::Chain => "chain",
            CatalogId::Confounding => "confounding",
            CatalogId::ThreeCycle => "three-cycle",
            CatalogId::Iv => "iv",
            CatalogId::CycleWithIv => "cycle-with-iv",
        }
    }

    /// Column letter in the published results table.
    pub fn column(self) -> char {
        match self {
            CatalogId::CauseEffect => 'a',
            CatalogId::Chain => 'b',
            CatalogId::Confounding => 'c',
            CatalogId::ThreeCycle => 'd',
            CatalogId::Iv => 'e',
            CatalogId::CycleWithIv => 'f',
        }
    }

    /// Published fraction of sampled covariances with an identifiable sign.
    pub fn reference_fraction(self) -> f64 {
        match self {
            CatalogId::Confounding => 0.44,
            CatalogId::ThreeCycle => 0.64,
            _ => 1.0,
        }
    }

    /// Whether the sign is identifiable for every covariance in the model.
    pub fn fully_identifiable(self) -> bool {
        !matches!(self, CatalogId::Confounding | CatalogId::ThreeCycle)
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for CatalogId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        let alias = match key.as_str() {
            "3-cycle" | "cycle3" | "cycle-3" => "three-cycle",
            "cycle-iv" => "cycle-with-iv",
            other => other,
        };
        CatalogId::ALL
            .into_iter()
            .find(|id| id.as_str() == alias)
            .ok_or_else(|| {
                let known: Vec<_> = CatalogId::ALL.iter().map(|id| id.as_str()).collect();
                format!("unknown catalog graph `{s}` (known: {})", known.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub id: CatalogId,
    pub graph: DirectedGraph,
    pub target: EdgeRef,
}

fn build(names: &[&str], edges: &[(&str, &str)]) -> DirectedGraph {
    DirectedGraph::observed(names, edges).expect("catalog graphs are well formed")
}

pub fn entry(id: CatalogId) -> CatalogEntry {
    let graph = match id {
        CatalogId::CauseEffect => build(&["H", "Y"], &[("H", "Y")]),
        CatalogId::Chain => build(&["H", "X", "Y"], &[("H", "X"), ("X", "Y")]),
        CatalogId::Confounding => build(&["H", "X", "Y"], &[("H", "X"), ("H", "Y"), ("X", "Y")]),
        CatalogId::ThreeCycle => build(&["H", "X", "Y"], &[("H", "X"), ("X", "Y"), ("Y", "H")]),
        CatalogId::Iv => build(&["Z", "H", "X", "Y"], &[("Z", "X"), ("H", "X"), ("H", "Y"), ("X", "Y")]),
        CatalogId::CycleWithIv => build(&["Z", "H", "X", "Y"], &[("Z", "X"), ("H", "X"), ("X", "Y"), ("Y", "H")]),
    };
    let target = match id {
        CatalogId::CauseEffect => EdgeRef::new("H", "Y"),
        _ => EdgeRef::new("X", "Y"),
    };
    CatalogEntry { id, graph, target }
}

pub fn catalog() -> Vec<CatalogEntry> {
    CatalogId::ALL.into_iter().map(entry).collect()
}

/// A user graph identified with a catalog structure. `order[k]` is the user
/// node playing the role of catalog node `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogMatch {
    pub id: CatalogId,
    pub order: Vec<usize>,
}

/// Finds the catalog structure isomorphic to `(g, target)`, ignoring node
/// names and latent flags. The target edge must map onto the catalog target.
pub fn recognize(g: &DirectedGraph, target: &EdgeRef) -> Option<CatalogMatch> {
    let user_target = g.resolve_target(target).ok()?;
    for e in catalog() {
        let cg = &e.graph;
        if cg.len() != g.len() || cg.edge_count() != g.edge_count() {
            continue;
        }
        let cat_target = cg.resolve_target(&e.target).expect("catalog target exists");
        let found = permutations(g.len()).into_iter().find(|perm| {
            (perm[cat_target.0], perm[cat_target.1]) == user_target
                && cg.edge_indices().all(|(s, t)| g.has_edge(perm[s], perm[t]))
        });
        if let Some(order) = found {
            return Some(CatalogMatch { id: e.id, order });
        }
    }
    None
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                extend(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graphical_criterion, GraphicalVerdict, Node};

    #[test]
    fn six_entries_with_expected_supports() {
        let all = catalog();
        assert_eq!(all.len(), 6);

        // Drift support of [[s_h,0,0],[γ,s_x,0],[δ,α,s_y]]: rows are targets, columns sources.
        let conf = entry(CatalogId::Confounding);
        let expected = [[true, false, false], [true, true, false], [true, true, true]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &present) in row.iter().enumerate() {
                assert_eq!(conf.graph.has_edge(j, i), present, "A[{i}][{j}]");
            }
        }

        let civ = entry(CatalogId::CycleWithIv);
        assert!(civ.graph.resolve_edge(&EdgeRef::new("Y", "H")).is_ok());
    }

    #[test]
    fn graphical_criterion_on_catalog() {
        for e in catalog() {
            let expected = if e.id.fully_identifiable() {
                GraphicalVerdict::Identifiable
            } else {
                GraphicalVerdict::Inconclusive
            };
            assert_eq!(graphical_criterion(&e.graph, &e.target), Ok(expected), "{}", e.id);
        }
    }

    #[test]
    fn ids_parse_and_display() {
        for id in CatalogId::ALL {
            assert_eq!(id.as_str().parse::<CatalogId>(), Ok(id));
        }
        assert_eq!("3-cycle".parse::<CatalogId>(), Ok(CatalogId::ThreeCycle));
        assert!("nope".parse::<CatalogId>().is_err());
    }

    #[test]
    fn recognizes_relabelled_graphs() {
        let g = DirectedGraph::with_self_loops(
            vec![
                Node::observed("y"),
                Node::observed("x"),
                Node::latent("u"),
                Node::observed("z"),
            ],
            &[
                EdgeRef::new("z", "x"),
                EdgeRef::new("u", "x"),
                EdgeRef::new("u", "y"),
                EdgeRef::new("x", "y"),
            ],
        )
        .unwrap();
        let m = recognize(&g, &EdgeRef::new("x", "y")).unwrap();
        assert_eq!(m.id, CatalogId::Iv);
        assert_eq!(m.order, vec![3, 2, 1, 0]);

        assert!(recognize(&g, &EdgeRef::new("z", "x")).is_none());
        for e in catalog() {
            let m = recognize(&e.graph, &e.target).unwrap();
            assert_eq!(m.id, e.id);
            assert_eq!(m.order, (0..e.graph.len()).collect::<Vec<_>>());
        }
    }
}
