#![allow(dead_code)]

use kromfac::community::AffiliationMatrix;
use kromfac::kron::KroneckerModel;
use kromfac::{Cover, Graph};
use proptest::prelude::*;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use std::collections::HashSet;

/// Random simple graph on `n` nodes with edge density `p`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = kromfac::rng::seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap().0
}

pub fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |edges| Graph::from_edges(n, edges).unwrap().0)
    })
}

/// Dense row-major `n0^k x n0^k` Kronecker power, built by repeated products.
pub fn materialize(theta: &[Vec<f64>], k: u32) -> Vec<Vec<f64>> {
    let mut acc = vec![vec![1.0]];
    for _ in 0..k {
        let n = acc.len();
        let n0 = theta.len();
        let mut next = vec![vec![0.0; n * n0]; n * n0];
        for (i, row) in acc.iter().enumerate() {
            for (j, &a) in row.iter().enumerate() {
                for (p, trow) in theta.iter().enumerate() {
                    for (q, &t) in trow.iter().enumerate() {
                        next[i * n0 + p][j * n0 + q] = a * t;
                    }
                }
            }
        }
        acc = next;
    }
    acc
}

/// Kronecker log-likelihood by direct summation over unordered pairs of
/// positions under `sigma`.
pub fn direct_kron_loglik(g: &Graph, sigma: &[usize], model: &KroneckerModel) -> f64 {
    let n = g.node_count();
    let mut total = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            let p = model.entry(sigma[u] as u64, sigma[v] as u64);
            total += if g.has_edge(u, v) { p.ln() } else { (1.0 - p).ln() };
        }
    }
    total
}

/// AGM log-likelihood by direct summation over unordered pairs.
pub fn direct_agm_loglik(g: &Graph, f: &AffiliationMatrix) -> f64 {
    let n = g.node_count();
    let mut total = 0.0;
    for u in 0..n {
        for v in u + 1..n {
            let dot: f64 = f.row(u).iter().zip(f.row(v)).map(|(a, b)| a * b).sum();
            total += if g.has_edge(u, v) {
                (-(-dot.max(1e-10)).exp_m1()).ln()
            } else {
                -dot
            };
        }
    }
    total
}

pub fn random_affiliation(n: usize, c: usize, lo: f64, hi: f64, seed: u64) -> AffiliationMatrix {
    let mut rng = kromfac::rng::seeded(seed);
    let rows = (0..n)
        .map(|_| (0..c).map(|_| rng.random_range(lo..hi)).collect())
        .collect();
    AffiliationMatrix::from_rows(rows).unwrap()
}

/// Random cover of `0..n`: each of `c` communities keeps every node with
/// probability `p`.
pub fn random_cover(n: usize, c: usize, p: f64, seed: u64) -> Cover {
    let mut rng = kromfac::rng::seeded(seed);
    let coms = (0..c)
        .map(|_| (0..n).filter(|_| rng.random::<f64>() < p).collect())
        .collect();
    Cover::new(coms, n).unwrap()
}

/// Two disjoint 4-cliques on nodes 0..4 and 4..8.
pub fn two_cliques() -> (Graph, Cover) {
    let mut edges = Vec::new();
    for base in [0, 4] {
        for u in base..base + 4 {
            for v in u + 1..base + 4 {
                edges.push((u, v));
            }
        }
    }
    let g = Graph::from_edges(8, edges).unwrap().0;
    let truth = Cover::new(vec![(0..4).collect(), (4..8).collect()], 8).unwrap();
    (g, truth)
}

/// Heavy-tailed community graph with exactly `e` distinct edges on `e / 5`
/// nodes. Node weights follow a power law with degree exponent 2.5, `c`
/// communities are assigned round-robin, and 90% of edges stay inside a
/// community.
pub fn heavy_tailed(e: usize, c: usize, seed: u64) -> Graph {
    let n = (e / 5).max(2 * c);
    let mut rng = kromfac::rng::seeded(seed);
    let w: Vec<f64> = (0..n).map(|u| ((u / c + 1) as f64).powf(-1.0 / 1.5)).collect();
    let all = WeightedIndex::new(&w).unwrap();
    let within: Vec<WeightedIndex<f64>> = (0..c)
        .map(|k| WeightedIndex::new((0..n).map(|u| if u % c == k { w[u] } else { 0.0 })).unwrap())
        .collect();
    let mut seen = HashSet::new();
    while seen.len() < e {
        let u = all.sample(&mut rng);
        let v = if rng.random::<f64>() < 0.9 {
            within[u % c].sample(&mut rng)
        } else {
            all.sample(&mut rng)
        };
        if u != v {
            seen.insert((u.min(v), u.max(v)));
        }
    }
    let mut edges: Vec<_> = seen.into_iter().collect();
    edges.sort_unstable();
    Graph::from_edges(n, edges).unwrap().0
}

/// Maximum-likelihood power-law exponent of the degree tail `d >= d_min`.
pub fn tail_exponent(g: &Graph, d_min: usize) -> f64 {
    let tail: Vec<f64> = g.degrees().into_iter().filter(|&d| d >= d_min).map(|d| d as f64).collect();
    let x0 = d_min as f64 - 0.5;
    1.0 + tail.len() as f64 / tail.iter().map(|d| (d / x0).ln()).sum::<f64>()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
