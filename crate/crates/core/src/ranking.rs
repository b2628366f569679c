//! Centrality ranking of recovered nodes and selection of influential ones.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::completion::RecoveredGraph;
use crate::error::{arg_err, Result};
use crate::graph::Graph;

/// Node centrality measure used for ranking.
pub trait Centrality {
    fn score(&self, g: &Graph, u: usize) -> f64;
}

/// Number of incident edges.
#[derive(Debug, Clone, Copy, Default)]
pub struct DegreeCentrality;

impl Centrality for DegreeCentrality {
    fn score(&self, g: &Graph, u: usize) -> f64 {
        g.degree(u) as f64
    }
}

pub fn degree_centrality(g: &Graph, u: usize) -> Result<usize> {
    if u >= g.node_count() {
        return arg_err(format!("node {u} out of range for {} nodes", g.node_count()));
    }
    Ok(g.degree(u))
}

/// Influential recovered nodes in descending centrality order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub epsilon: f64,
    pub h: usize,
    pub order: Vec<usize>,
    /// Centrality of every recovered node in the full realization.
    pub centrality: BTreeMap<usize, f64>,
}

impl Ranking {
    pub fn h(&self) -> usize {
        self.order.len()
    }
}

/// Ranks recovered nodes by degree in the full realization and keeps those
/// with degree at least `epsilon`. Ties go to the smaller id.
pub fn select_influential(rg: &RecoveredGraph, epsilon: f64) -> Result<Ranking> {
    select_influential_with(rg, epsilon, &DegreeCentrality)
}

pub fn select_influential_with<C: Centrality>(rg: &RecoveredGraph, epsilon: f64, centrality: &C) -> Result<Ranking> {
    if !(epsilon > 0.0) {
        return arg_err(format!("epsilon must be positive, got {epsilon}"));
    }
    let full = rg.full_graph();
    let scores: BTreeMap<usize, f64> = rg
        .recovered_nodes()
        .into_iter()
        .map(|u| (u, centrality.score(&full, u)))
        .collect();
    let mut order: Vec<usize> = scores
        .iter()
        .filter(|(_, &s)| s >= epsilon)
        .map(|(&u, _)| u)
        .collect();
    order.sort_by(|a, b| scores[b].total_cmp(&scores[a]).then(a.cmp(b)));
    Ok(Ranking {
        epsilon,
        h: order.len(),
        order,
        centrality: scores,
    })
}

/// Half the maximum degree over all nodes of the full realization.
pub fn default_epsilon(rg: &RecoveredGraph) -> Result<f64> {
    let full = rg.full_graph();
    if full.node_count() == 0 {
        return arg_err("recovered graph is empty");
    }
    Ok(full.max_degree() as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star_with_recovered() -> RecoveredGraph {
        // star centre 0 with leaves 1..=5; recovered 6 (deg 2) and 7 (deg 1)
        let base = Graph::from_edges_unchecked(6, (1..=5).map(|v| (0, v)));
        RecoveredGraph::from_blocks(base, 2, vec![(1, 6), (2, 6), (3, 7)], vec![]).unwrap()
    }

    #[test]
    fn degree_counts() {
        let path = Graph::from_edges_unchecked(3, [(0, 1), (1, 2)]);
        assert_eq!(degree_centrality(&path, 1).unwrap(), 2);
        assert_eq!(degree_centrality(&Graph::empty(1), 0).unwrap(), 0);
        let star = Graph::from_edges_unchecked(6, (1..=5).map(|v| (0, v)));
        assert_eq!(degree_centrality(&star, 0).unwrap(), 5);
        assert!(degree_centrality(&star, 6).is_err());
    }

    #[test]
    fn selects_nodes_at_threshold() {
        let rg = star_with_recovered();
        let r = select_influential(&rg, 2.0).unwrap();
        assert_eq!(r.order, vec![6]);
        assert_eq!(r.h(), 1);
        assert_eq!(r.centrality[&7], 1.0);
    }

    #[test]
    fn high_threshold_selects_nothing() {
        let r = select_influential(&star_with_recovered(), 3.0).unwrap();
        assert!(r.order.is_empty());
        assert!(select_influential(&star_with_recovered(), 0.0).is_err());
    }

    #[test]
    fn sorted_descending_with_id_ties() {
        let base = Graph::empty(5);
        // 5: deg 3, 6: deg 4, 7: deg 3
        let z1 = vec![(0, 5), (1, 5), (2, 5), (0, 6), (1, 6), (2, 6), (3, 6), (0, 7), (1, 7), (4, 7)];
        let rg = RecoveredGraph::from_blocks(base, 3, z1, vec![]).unwrap();
        let r = select_influential(&rg, 3.0).unwrap();
        assert_eq!(r.order, vec![6, 5, 7]);
        let r = select_influential(&rg, 4.0).unwrap();
        assert_eq!(r.order, vec![6]);
    }

    #[test]
    fn epsilon_from_max_degree() {
        assert_eq!(default_epsilon(&star_with_recovered()).unwrap(), 2.5);
        let cycle = Graph::from_edges_unchecked(4, [(0, 1), (1, 2), (2, 3), (0, 3)]);
        let rg = RecoveredGraph::from_blocks(cycle, 0, vec![], vec![]).unwrap();
        assert_eq!(default_epsilon(&rg).unwrap(), 1.0);
        let empty = RecoveredGraph::from_blocks(Graph::empty(0), 0, vec![], vec![]).unwrap();
        assert!(default_epsilon(&empty).is_err());
    }

    #[test]
    fn ranking_json_fields() {
        let r = select_influential(&star_with_recovered(), 2.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["h"], 1);
        assert_eq!(v["order"], serde_json::json!([6]));
        assert_eq!(v["centrality"]["6"], 2.0);
    }
}
