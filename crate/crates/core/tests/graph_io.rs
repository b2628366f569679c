mod common;

use common::arb_graph;
use kromfac::graph::{parse_edge_list, write_edge_list};
use proptest::prelude::*;

proptest! {
    #[test]
    fn edge_list_round_trip(g in arb_graph(30)) {
        let mut buf = Vec::new();
        write_edge_list(&g, None, &mut buf).unwrap();
        let loaded = parse_edge_list(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(loaded.graph.edge_count(), g.edge_count());
        // isolated nodes are not representable, so compare non-isolated degrees
        let mut ours: Vec<usize> = g.degrees().into_iter().filter(|&d| d > 0).collect();
        let mut theirs = loaded.graph.degrees();
        ours.sort_unstable();
        theirs.sort_unstable();
        prop_assert_eq!(ours, theirs);
        for (u, v) in loaded.graph.edges() {
            let a: usize = loaded.ids.external(u).unwrap().parse().unwrap();
            let b: usize = loaded.ids.external(v).unwrap().parse().unwrap();
            prop_assert!(g.has_edge(a, b));
        }
    }

    #[test]
    fn induced_subgraph_bounds(g in arb_graph(25), mask in proptest::collection::vec(any::<bool>(), 25)) {
        let keep: Vec<usize> = (0..g.node_count()).filter(|&u| mask[u]).collect();
        let (sub, kept) = g.induced_subgraph(&keep).unwrap();
        prop_assert!(sub.edge_count() <= g.edge_count());
        let covers_all = g.edges().all(|(u, v)| mask[u] && mask[v]);
        prop_assert_eq!(sub.edge_count() == g.edge_count(), covers_all);
        for (new, &old) in kept.iter().enumerate() {
            prop_assert!(sub.degree(new) <= g.degree(old));
        }
        for (a, b) in sub.edges() {
            prop_assert!(g.has_edge(kept[a], kept[b]));
        }
    }

    #[test]
    fn adjacency_is_symmetric_and_sorted(g in arb_graph(30)) {
        let mut total = 0;
        for u in 0..g.node_count() {
            let nb = g.neighbors(u);
            prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(!nb.contains(&u));
            for &v in nb {
                prop_assert!(g.has_edge(v, u));
            }
            total += nb.len();
        }
        prop_assert_eq!(total, 2 * g.edge_count());
    }
}

#[test]
fn self_loops_and_comments_are_dropped() {
    let loaded = parse_edge_list("# header\na b\n\nb b\nb c\n").unwrap();
    assert_eq!(loaded.graph.node_count(), 3);
    assert_eq!(loaded.graph.edge_count(), 2);
    assert_eq!(loaded.dropped_self_loops, 1);
}

#[test]
fn malformed_line_is_a_parse_error() {
    assert!(parse_edge_list("1 2\n3\n").is_err());
    assert!(parse_edge_list("1 2 3\n").is_err());
}
