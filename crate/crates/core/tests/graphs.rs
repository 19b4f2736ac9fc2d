use std::collections::BTreeSet;

use proptest::prelude::*;
use signid_core::catalog::{catalog, recognize, CatalogId};
use signid_core::graph::{
    ancestors, graphical_criterion, marginal_independence_pattern, DirectedGraph, EdgeRef, GraphError,
    GraphicalVerdict, Node,
};

const NAMES: [&str; 7] = ["A", "B", "C", "D", "E", "F", "G"];

/// All ordered pairs `(s, t)` with `s != t`, in a fixed order.
fn proper_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|s| (0..n).filter(move |&t| t != s).map(move |t| (s, t)))
        .collect()
}

fn graph_from_mask(n: usize, mask: u64) -> DirectedGraph {
    let pairs = proper_pairs(n);
    let edges: Vec<(&str, &str)> = pairs
        .iter()
        .enumerate()
        .filter(|(k, _)| mask >> k & 1 == 1)
        .map(|(_, &(s, t))| (NAMES[s], NAMES[t]))
        .collect();
    DirectedGraph::observed(&NAMES[..n], &edges).unwrap()
}

/// Reflexive transitive closure by Floyd–Warshall; `reach[u][v]` means u ⇝ v.
fn closure(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for (v, row) in reach.iter_mut().enumerate() {
        row[v] = true;
    }
    for &(s, t) in edges {
        reach[s][t] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    reach
}

fn oracle_zero_set(n: usize, edges: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let reach = closure(n, edges);
    let mut zeros = BTreeSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if !(0..n).any(|u| reach[u][i] && reach[u][j]) {
                zeros.insert((i, j));
            }
        }
    }
    zeros
}

#[test]
fn criterion_matches_brute_force_on_all_graphs_up_to_four_nodes() {
    let mut checked = 0;
    let mut identifiable = 0;
    for n in 1..=4 {
        let pairs = proper_pairs(n);
        for mask in 0..1u64 << pairs.len() {
            let g = graph_from_mask(n, mask);
            let edges: Vec<(usize, usize)> = g.edge_indices().filter(|(s, t)| s != t).collect();
            let zeros = oracle_zero_set(n, &edges);
            assert_eq!(marginal_independence_pattern(&g).zero_set, zeros, "n={n} mask={mask:b}");
            for (k, &(s, t)) in edges.iter().enumerate() {
                let mut reduced = edges.clone();
                reduced.remove(k);
                let expected = if oracle_zero_set(n, &reduced) != zeros {
                    GraphicalVerdict::Identifiable
                } else {
                    GraphicalVerdict::Inconclusive
                };
                let e = EdgeRef::new(NAMES[s], NAMES[t]);
                assert_eq!(
                    graphical_criterion(&g, &e).unwrap(),
                    expected,
                    "n={n} mask={mask:b} e={e}"
                );
                identifiable += usize::from(expected == GraphicalVerdict::Identifiable);
                checked += 1;
            }
        }
    }
    // m candidate edges give m·2^(m-1) (graph, edge) pairs per node count.
    assert_eq!(checked, 2 * 2 + 6 * 32 + 12 * 2048);
    assert!(identifiable > 0 && identifiable < checked);
}

#[test]
fn catalog_criterion_verdicts() {
    for e in catalog() {
        let expected = if matches!(e.id, CatalogId::Confounding | CatalogId::ThreeCycle) {
            GraphicalVerdict::Inconclusive
        } else {
            GraphicalVerdict::Identifiable
        };
        assert_eq!(graphical_criterion(&e.graph, &e.target).unwrap(), expected, "{}", e.id);
    }
}

#[test]
fn criterion_errors() {
    let conf = signid_core::catalog::entry(CatalogId::Confounding);
    assert!(matches!(
        graphical_criterion(&conf.graph, &EdgeRef::new("Y", "X")),
        Err(GraphError::UnknownEdge(_))
    ));
    let latent = DirectedGraph::with_self_loops(
        vec![Node::observed("X"), Node::latent("H"), Node::observed("Y")],
        &[EdgeRef::new("H", "X"), EdgeRef::new("H", "Y"), EdgeRef::new("X", "Y")],
    )
    .unwrap();
    assert!(matches!(
        graphical_criterion(&latent, &EdgeRef::new("X", "Y")),
        Err(GraphError::LatentNodesPresent(_))
    ));
}

#[test]
fn recognize_is_invariant_under_renaming_and_reordering() {
    // Cycle-with-IV written with other names and a shuffled node order.
    let g = DirectedGraph::observed(
        &["out", "inst", "conf", "treat"],
        &[("inst", "treat"), ("conf", "treat"), ("treat", "out"), ("out", "conf")],
    )
    .unwrap();
    let m = recognize(&g, &EdgeRef::new("treat", "out")).unwrap();
    assert_eq!(m.id, CatalogId::CycleWithIv);
    let names: Vec<&str> = m.order.iter().map(|&v| g.name(v)).collect();
    assert_eq!(names, ["inst", "conf", "treat", "out"]);
    assert!(recognize(&g, &EdgeRef::new("inst", "treat")).is_none());
}

fn random_graph() -> impl Strategy<Value = (usize, u64)> {
    (1usize..=6).prop_flat_map(|n| (Just(n), 0u64..1 << (n * (n - 1))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn ancestors_are_monotone_under_edge_addition((n, mask) in random_graph(), extra in any::<u64>()) {
        let small = graph_from_mask(n, mask);
        let big = graph_from_mask(n, mask | (extra & ((1u64 << (n * (n - 1))) - 1)));
        for v in &NAMES[..n] {
            let a = ancestors(&small, v).unwrap();
            let b = ancestors(&big, v).unwrap();
            prop_assert!(a.is_subset(&b), "{v}: {a:?} ⊄ {b:?}");
            prop_assert!(a.contains(&small.node_index(v).unwrap()));
        }
    }

    #[test]
    fn removing_an_edge_never_shrinks_the_zero_set((n, mask) in random_graph(), pick in any::<prop::sample::Index>()) {
        let g = graph_from_mask(n, mask);
        let proper = g.proper_edges();
        prop_assume!(!proper.is_empty());
        let e = &proper[pick.index(proper.len())];
        let reduced = g.without_edge(e).unwrap();
        let before = marginal_independence_pattern(&g).zero_set;
        let after = marginal_independence_pattern(&reduced).zero_set;
        prop_assert!(before.is_subset(&after));
    }

    #[test]
    fn graph_json_round_trip((n, mask) in random_graph()) {
        let g = graph_from_mask(n, mask);
        let text = serde_json::to_string(&g.to_file(None)).unwrap();
        let (back, target) = DirectedGraph::from_json(&text).unwrap();
        prop_assert_eq!(back, g);
        prop_assert!(target.is_none());
    }
}
