//! Directed graphs with mandatory self-loops, ancestor sets and the
//! marginal-independence pattern they imply.
//!
//! Edge `(j → i)` corresponds to the drift entry `A[i][j]`. Node order is the
//! declaration order and is shared by every matrix in the crate.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has no nodes")]
    Empty,
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate edge {0}")]
    DuplicateEdge(EdgeRef),
    #[error("node `{0}` has no self-loop (declare it explicitly or set \"self_loops\": \"all\")")]
    MissingSelfLoop(String),
    #[error("edge {0} is not in the graph")]
    UnknownEdge(EdgeRef),
    #[error("target edge {0} is a self-loop")]
    SelfLoopTarget(EdgeRef),
    #[error("graph has latent nodes ({0}); this operation needs a fully observed graph")]
    LatentNodesPresent(String),
    #[error("malformed edge spec `{0}` (expected SRC->DST)")]
    BadEdgeSpec(String),
    #[error("graph JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub name: String,
    #[serde(default)]
    pub latent: bool,
}

impl Node {
    pub fn observed(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            latent: false,
        }
    }

    pub fn latent(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            latent: true,
        }
    }
}

/// A directed edge named by its endpoint labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[String; 2]", into = "[String; 2]")]
pub struct EdgeRef {
    pub source: String,
    pub target: String,
}

impl EdgeRef {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            target: target.into(),
        }
    }

    pub fn is_self_loop(&self) -> bool {
        self.source == self.target
    }
}

impl fmt::Display for EdgeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(&format!("{}->{}", self.source, self.target))
    }
}

impl FromStr for EdgeRef {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (src, dst) = s
            .split_once("->")
            .ok_or_else(|| GraphError::BadEdgeSpec(s.to_string()))?;
        let (src, dst) = (src.trim(), dst.trim());
        if src.is_empty() || dst.is_empty() || dst.contains("->") {
            return Err(GraphError::BadEdgeSpec(s.to_string()));
        }
        Ok(Self::new(src, dst))
    }
}

impl From<[String; 2]> for EdgeRef {
    fn from([source, target]: [String; 2]) -> Self {
        Self { source, target }
    }
}

impl From<EdgeRef> for [String; 2] {
    fn from(e: EdgeRef) -> Self {
        [e.source, e.target]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedGraph {
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    /// `(source, target)` index pairs, self-loops included.
    edges: BTreeSet<(usize, usize)>,
}

impl DirectedGraph {
    /// Builds a graph whose self-loops must appear in `edges`.
    pub fn new(nodes: Vec<Node>, edges: &[EdgeRef]) -> Result<Self, GraphError> {
        let g = Self::without_loops(nodes, edges)?;
        if let Some(v) = (0..g.len()).find(|&v| !g.edges.contains(&(v, v))) {
            return Err(GraphError::MissingSelfLoop(g.nodes[v].name.clone()));
        }
        Ok(g)
    }

    /// Builds a graph and adds a self-loop to every node. Explicit self-loops
    /// in `edges` are accepted.
    pub fn with_self_loops(nodes: Vec<Node>, edges: &[EdgeRef]) -> Result<Self, GraphError> {
        let mut g = Self::without_loops(nodes, edges)?;
        for v in 0..g.len() {
            g.edges.insert((v, v));
        }
        Ok(g)
    }

    /// Convenience constructor for fully observed graphs: self-loops added.
    pub fn observed(names: &[&str], edges: &[(&str, &str)]) -> Result<Self, GraphError> {
        let nodes = names.iter().map(|n| Node::observed(*n)).collect();
        let edges: Vec<EdgeRef> = edges.iter().map(|(s, t)| EdgeRef::new(*s, *t)).collect();
        Self::with_self_loops(nodes, &edges)
    }

    fn without_loops(nodes: Vec<Node>, edges: &[EdgeRef]) -> Result<Self, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.name.clone(), i).is_some() {
                return Err(GraphError::DuplicateNode(n.name.clone()));
            }
        }
        let mut g = Self {
            nodes,
            index,
            edges: BTreeSet::new(),
        };
        for e in edges {
            let pair = (g.require(&e.source)?, g.require(&e.target)?);
            if !g.edges.insert(pair) {
                return Err(GraphError::DuplicateEdge(e.clone()));
            }
        }
        Ok(g)
    }

    fn require(&self, name: &str) -> Result<usize, GraphError> {
        self.node_index(name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_names(&self) -> Vec<&str> {
        self.nodes.iter().map(|n| n.name.as_str()).collect()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.nodes[v].name
    }

    /// All edges as `(source, target)` indices, self-loops included, sorted.
    pub fn edge_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, source: usize, target: usize) -> bool {
        self.edges.contains(&(source, target))
    }

    pub fn edge_ref(&self, (s, t): (usize, usize)) -> EdgeRef {
        EdgeRef::new(self.name(s), self.name(t))
    }

    /// Non-loop edges by name, in index order.
    pub fn proper_edges(&self) -> Vec<EdgeRef> {
        self.edges
            .iter()
            .filter(|(s, t)| s != t)
            .map(|&p| self.edge_ref(p))
            .collect()
    }

    /// Resolves `e` to `(source, target)` indices, checking that it is an edge.
    pub fn resolve_edge(&self, e: &EdgeRef) -> Result<(usize, usize), GraphError> {
        let pair = (self.require(&e.source)?, self.require(&e.target)?);
        if !self.edges.contains(&pair) {
            return Err(GraphError::UnknownEdge(e.clone()));
        }
        Ok(pair)
    }

    /// Like [`resolve_edge`](Self::resolve_edge) but also rejects self-loops.
    pub fn resolve_target(&self, e: &EdgeRef) -> Result<(usize, usize), GraphError> {
        let pair = self.resolve_edge(e)?;
        if pair.0 == pair.1 {
            return Err(GraphError::SelfLoopTarget(e.clone()));
        }
        Ok(pair)
    }

    pub fn latent_nodes(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.latent)
            .map(|n| n.name.as_str())
            .collect()
    }

    pub fn has_latent(&self) -> bool {
        self.nodes.iter().any(|n| n.latent)
    }

    pub fn require_observed(&self) -> Result<(), GraphError> {
        if self.has_latent() {
            return Err(GraphError::LatentNodesPresent(self.latent_nodes().join(", ")));
        }
        Ok(())
    }

    /// Same graph with every node marked observed.
    pub fn fully_observed(&self) -> Self {
        let mut g = self.clone();
        for n in &mut g.nodes {
            n.latent = false;
        }
        g
    }

    /// The graph with edge `e` deleted. Self-loops cannot be removed.
    pub fn without_edge(&self, e: &EdgeRef) -> Result<Self, GraphError> {
        let pair = self.resolve_target(e)?;
        let mut g = self.clone();
        g.edges.remove(&pair);
        Ok(g)
    }

    /// Membership mask of the ancestors of `v`, including `v` itself.
    pub fn ancestor_mask(&self, v: usize) -> Vec<bool> {
        let mut parents: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        for &(s, t) in &self.edges {
            if s != t {
                parents[t].push(s);
            }
        }
        let mut seen = vec![false; self.len()];
        seen[v] = true;
        let mut queue = VecDeque::from([v]);
        while let Some(u) = queue.pop_front() {
            for &p in &parents[u] {
                if !seen[p] {
                    seen[p] = true;
                    queue.push_back(p);
                }
            }
        }
        seen
    }

    pub fn to_file(&self, target: Option<&EdgeRef>) -> GraphFile {
        GraphFile {
            nodes: self.nodes.clone(),
            edges: self.proper_edges(),
            target_edge: target.cloned(),
            self_loops: Some(SelfLoops::All),
        }
    }

    pub fn from_json(text: &str) -> Result<(Self, Option<EdgeRef>), GraphError> {
        let file: GraphFile = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        file.into_graph()
    }
}

/// Ancestors of the node called `v`, including `v`, as indices in node order.
pub fn ancestors(g: &DirectedGraph, v: &str) -> Result<BTreeSet<usize>, GraphError> {
    let v = g.require(v)?;
    Ok(g.ancestor_mask(v)
        .into_iter()
        .enumerate()
        .filter_map(|(u, inside)| inside.then_some(u))
        .collect())
}

/// Pairs `{i, j}` (stored with `i < j`) whose covariance must vanish.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndependencePattern {
    pub dim: usize,
    pub zero_set: BTreeSet<(usize, usize)>,
}

impl IndependencePattern {
    pub fn requires_zero(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.zero_set.contains(&key)
    }
}

pub fn marginal_independence_pattern(g: &DirectedGraph) -> IndependencePattern {
    let masks: Vec<Vec<bool>> = (0..g.len()).map(|v| g.ancestor_mask(v)).collect();
    let mut zero_set = BTreeSet::new();
    for i in 0..g.len() {
        for j in i + 1..g.len() {
            if !masks[i].iter().zip(&masks[j]).any(|(a, b)| *a && *b) {
                zero_set.insert((i, j));
            }
        }
    }
    IndependencePattern { dim: g.len(), zero_set }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GraphicalVerdict {
    Identifiable,
    Inconclusive,
}

/// Sufficient test: the sign of `e` is identifiable if deleting `e` changes
/// the marginal-independence pattern.
pub fn graphical_criterion(g: &DirectedGraph, e: &EdgeRef) -> Result<GraphicalVerdict, GraphError> {
    g.require_observed()?;
    let reduced = g.without_edge(e)?;
    Ok(
        if marginal_independence_pattern(&reduced) != marginal_independence_pattern(g) {
            GraphicalVerdict::Identifiable
        } else {
            GraphicalVerdict::Inconclusive
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelfLoops {
    All,
    Explicit,
}

/// On-disk graph description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub nodes: Vec<Node>,
    pub edges: Vec<EdgeRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_edge: Option<EdgeRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_loops: Option<SelfLoops>,
}

impl GraphFile {
    pub fn into_graph(self) -> Result<(DirectedGraph, Option<EdgeRef>), GraphError> {
        let g = match self.self_loops {
            Some(SelfLoops::All) => DirectedGraph::with_self_loops(self.nodes, &self.edges)?,
            Some(SelfLoops::Explicit) | None => DirectedGraph::new(self.nodes, &self.edges)?,
        };
        if let Some(t) = &self.target_edge {
            g.resolve_target(t)?;
        }
        Ok((g, self.target_edge))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(g: &DirectedGraph, set: &BTreeSet<usize>) -> Vec<String> {
        set.iter().map(|&v| g.name(v).to_string()).collect()
    }

    fn iv() -> DirectedGraph {
        DirectedGraph::observed(&["Z", "H", "X", "Y"], &[("Z", "X"), ("H", "X"), ("H", "Y"), ("X", "Y")]).unwrap()
    }

    #[test]
    fn ancestors_examples() {
        let cyc = DirectedGraph::observed(&["H", "X", "Y"], &[("H", "X"), ("X", "Y"), ("Y", "H")]).unwrap();
        assert_eq!(names(&cyc, &ancestors(&cyc, "Y").unwrap()), ["H", "X", "Y"]);

        let chain = DirectedGraph::observed(&["H", "X", "Y"], &[("H", "X"), ("X", "Y")]).unwrap();
        assert_eq!(names(&chain, &ancestors(&chain, "H").unwrap()), ["H"]);

        let g = iv();
        assert_eq!(names(&g, &ancestors(&g, "Y").unwrap()), ["Z", "H", "X", "Y"]);
        assert_eq!(ancestors(&g, "Q"), Err(GraphError::UnknownNode("Q".into())));
    }

    #[test]
    fn pattern_examples() {
        let p = marginal_independence_pattern(&iv());
        assert_eq!(p.zero_set, BTreeSet::from([(0, 1)]));
        assert!(p.requires_zero(1, 0));

        let chain = DirectedGraph::observed(&["H", "X", "Y"], &[("H", "X"), ("X", "Y")]).unwrap();
        assert!(marginal_independence_pattern(&chain).zero_set.is_empty());

        let empty = DirectedGraph::observed(&["1", "2"], &[]).unwrap();
        assert_eq!(marginal_independence_pattern(&empty).zero_set, BTreeSet::from([(0, 1)]));
    }

    #[test]
    fn criterion_examples() {
        let ce = DirectedGraph::observed(&["H", "Y"], &[("H", "Y")]).unwrap();
        assert_eq!(
            graphical_criterion(&ce, &EdgeRef::new("H", "Y")),
            Ok(GraphicalVerdict::Identifiable)
        );

        let conf = DirectedGraph::observed(&["H", "X", "Y"], &[("H", "X"), ("H", "Y"), ("X", "Y")]).unwrap();
        assert_eq!(
            graphical_criterion(&conf, &EdgeRef::new("X", "Y")),
            Ok(GraphicalVerdict::Inconclusive)
        );

        let civ =
            DirectedGraph::observed(&["Z", "H", "X", "Y"], &[("Z", "X"), ("H", "X"), ("X", "Y"), ("Y", "H")]).unwrap();
        assert_eq!(
            graphical_criterion(&civ, &EdgeRef::new("X", "Y")),
            Ok(GraphicalVerdict::Identifiable)
        );

        assert!(matches!(
            graphical_criterion(&ce, &EdgeRef::new("Y", "H")),
            Err(GraphError::UnknownEdge(_))
        ));
        assert!(matches!(
            graphical_criterion(&ce, &EdgeRef::new("H", "H")),
            Err(GraphError::SelfLoopTarget(_))
        ));
    }

    #[test]
    fn criterion_refuses_latent_graphs() {
        let g = DirectedGraph::with_self_loops(vec![Node::latent("H"), Node::observed("Y")], &[EdgeRef::new("H", "Y")])
            .unwrap();
        assert!(matches!(
            graphical_criterion(&g, &EdgeRef::new("H", "Y")),
            Err(GraphError::LatentNodesPresent(_))
        ));
    }

    #[test]
    fn loading_requires_self_loops() {
        let json = r#"{"nodes":[{"name":"H"},{"name":"Y"}],"edges":[["H","Y"],["H","H"]]}"#;
        assert_eq!(
            DirectedGraph::from_json(json).unwrap_err(),
            GraphError::MissingSelfLoop("Y".into())
        );
        let json =
            r#"{"nodes":[{"name":"H"},{"name":"Y"}],"edges":[["H","Y"],["H","H"],["Y","Y"]],"target_edge":["H","Y"]}"#;
        let (g, t) = DirectedGraph::from_json(json).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(t, Some(EdgeRef::new("H", "Y")));
    }

    #[test]
    fn json_roundtrip() {
        let g = iv();
        let t = EdgeRef::new("X", "Y");
        let text = serde_json::to_string(&g.to_file(Some(&t))).unwrap();
        assert!(text.contains(r#""self_loops":"all""#));
        let (back, target) = DirectedGraph::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(target, Some(t));
    }

    #[test]
    fn json_rejects_bad_input() {
        for bad in [
            r#"{"nodes":[{"name":"A"},{"name":"A"}],"edges":[],"self_loops":"all"}"#,
            r#"{"nodes":[{"name":"A"}],"edges":[["A","B"]],"self_loops":"all"}"#,
            r#"{"nodes":[{"name":"A"},{"name":"B"}],"edges":[["A","B"],["A","B"]],"self_loops":"all"}"#,
            r#"{"nodes":[{"name":"A"}],"edges":[],"self_loops":"all","target_edge":["A","A"]}"#,
            r#"{"nodes":[],"edges":[]}"#,
            r#"{"nodes":[{"name":"A"}],"edges":[],"extra":1}"#,
        ] {
            assert!(DirectedGraph::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn edge_spec_parsing() {
        assert_eq!("X->Y".parse::<EdgeRef>(), Ok(EdgeRef::new("X", "Y")));
        assert_eq!(" X -> Y ".parse::<EdgeRef>(), Ok(EdgeRef::new("X", "Y")));
        for bad in ["XY", "->Y", "X->", "A->B->C"] {
            assert!(bad.parse::<EdgeRef>().is_err(), "{bad}");
        }
        assert_eq!(EdgeRef::new("X", "Y").to_string(), "X->Y");
    }
}
