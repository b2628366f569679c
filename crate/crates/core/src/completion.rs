//! Completion of the missing adjacency blocks and selective assembly of the
//! recovered graph.
//!
//! Positions `0..N` are observed nodes and `N..N+M` are recovered slots. `z1`
//! holds observed-to-recovered edges, `z2` recovered-to-recovered edges.

use std::io::{BufRead, Write};

use crate::error::{arg_err, Error, Result};
use crate::graph::{ext_token, Graph, NodeIdMap};
use crate::kron::{sample_missing_edges, KroneckerModel, NodeMapping};
use crate::rng::seeded;

/// Observed graph plus one realization of the missing blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecoveredGraph {
    base: Graph,
    missing: usize,
    z1: Vec<(usize, usize)>,
    z2: Vec<(usize, usize)>,
}

impl RecoveredGraph {
    /// Assembles a recovered graph from explicit blocks. `z1` pairs are
    /// `(observed, recovered)`, `z2` pairs hold two recovered ids; ids use the
    /// full `0..N+M` numbering.
    pub fn from_blocks(base: Graph, missing: usize, z1: Vec<(usize, usize)>, z2: Vec<(usize, usize)>) -> Result<Self> {
        let n = base.node_count();
        let total = n + missing;
        let mut z1: Vec<(usize, usize)> = z1
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        let mut z2: Vec<(usize, usize)> = z2
            .into_iter()
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        if z1.iter().any(|&(u, v)| u >= n || v < n || v >= total) {
            return arg_err("z1 edges must join one observed and one recovered node");
        }
        if z2.iter().any(|&(u, v)| u < n || v >= total || u == v) {
            return arg_err("z2 edges must join two distinct recovered nodes");
        }
        z1.sort_unstable();
        z1.dedup();
        z2.sort_unstable();
        z2.dedup();
        Ok(RecoveredGraph { base, missing, z1, z2 })
    }

    pub fn base(&self) -> &Graph {
        &self.base
    }

    pub fn observed_count(&self) -> usize {
        self.base.node_count()
    }

    pub fn missing_count(&self) -> usize {
        self.missing
    }

    pub fn z1(&self) -> &[(usize, usize)] {
        &self.z1
    }

    pub fn z2(&self) -> &[(usize, usize)] {
        &self.z2
    }

    /// Recovered node ids in their fixed internal order.
    pub fn recovered_nodes(&self) -> Vec<usize> {
        let n = self.observed_count();
        (n..n + self.missing).collect()
    }

    /// Every recovered node attached: the full realization.
    pub fn full_graph(&self) -> Graph {
        self.as_graph(self.missing, &self.recovered_nodes())
            .expect("natural order is valid")
    }

    /// Graph with the first `i` nodes of `order` attached to the observed
    /// graph, renumbered `N, N+1, ...` in that order.
    pub fn as_graph(&self, i: usize, order: &[usize]) -> Result<Graph> {
        if i > order.len() {
            return arg_err(format!("cannot attach {i} nodes from an order of length {}", order.len()));
        }
        let n = self.observed_count();
        let total = n + self.missing;
        let mut slot = vec![usize::MAX; total];
        for (rank, &node) in order.iter().enumerate() {
            if node < n || node >= total {
                return arg_err(format!("{node} is not a recovered node id"));
            }
            if slot[node] != usize::MAX {
                return arg_err(format!("recovered node {node} listed twice"));
            }
            slot[node] = rank;
        }
        let attached = |v: usize| slot[v] < i;
        let relabel = |v: usize| if v < n { v } else { n + slot[v] };
        let edges = self
            .base
            .edges()
            .chain(
                self.z1
                    .iter()
                    .chain(&self.z2)
                    .copied()
                    .filter(|&(u, v)| (u < n || attached(u)) && attached(v))
                    .map(|(u, v)| (relabel(u), relabel(v))),
            )
            .collect::<Vec<_>>();
        Ok(Graph::from_edges_unchecked(n + i, edges))
    }

    /// Writes the `#BASE` / `#Z1` / `#Z2` sectioned edge list. Observed nodes
    /// are written through `ids`; recovered node `N + j` is `recovered:j`.
    pub fn write<W: Write>(&self, ids: &NodeIdMap, mut out: W) -> Result<()> {
        let n = self.observed_count();
        let token = |v: usize| {
            if v < n {
                ext_token(ids, v)
            } else {
                format!("recovered:{}", v - n)
            }
        };
        write!(out, "#NODES")?;
        for u in 0..n {
            write!(out, " {}", token(u))?;
        }
        writeln!(out)?;
        writeln!(out, "#MISSING {}", self.missing)?;
        writeln!(out, "#BASE")?;
        for (u, v) in self.base.edges() {
            writeln!(out, "{} {}", token(u), token(v))?;
        }
        for (name, block) in [("#Z1", &self.z1), ("#Z2", &self.z2)] {
            writeln!(out, "{name}")?;
            for &(u, v) in block {
                writeln!(out, "{} {}", token(u), token(v))?;
            }
        }
        Ok(())
    }

    /// Parses the format produced by [`RecoveredGraph::write`].
    pub fn read<R: BufRead>(reader: R) -> Result<(RecoveredGraph, NodeIdMap)> {
        let mut ids = NodeIdMap::new();
        let mut missing = 0usize;
        let mut section = "";
        let mut base = Vec::new();
        let mut z1 = Vec::new();
        let mut z2 = Vec::new();
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("#NODES") {
                for tok in rest.split_whitespace() {
                    ids.intern(tok);
                }
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix("#MISSING") {
                missing = rest
                    .trim()
                    .parse()
                    .map_err(|_| parse_err(idx + 1, "bad #MISSING count".into()))?;
                continue;
            }
            match trimmed {
                "#BASE" | "#Z1" | "#Z2" => {
                    section = match trimmed {
                        "#BASE" => "base",
                        "#Z1" => "z1",
                        _ => "z2",
                    };
                    continue;
                }
                _ if trimmed.starts_with('#') => continue,
                _ => {}
            }
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            if toks.len() != 2 {
                return Err(parse_err(idx + 1, format!("expected two tokens, got {trimmed:?}")));
            }
            let n = ids.len();
            let resolve = |tok: &str| -> Result<usize> {
                if let Some(j) = tok.strip_prefix("recovered:") {
                    let j: usize = j
                        .parse()
                        .map_err(|_| parse_err(idx + 1, format!("bad recovered id {tok:?}")))?;
                    Ok(n + j)
                } else {
                    ids.internal(tok)
                        .ok_or_else(|| parse_err(idx + 1, format!("unknown node {tok:?}")))
                }
            };
            let pair = (resolve(toks[0])?, resolve(toks[1])?);
            match section {
                "base" => base.push(pair),
                "z1" => z1.push(pair),
                "z2" => z2.push(pair),
                _ => return Err(parse_err(idx + 1, "edge outside a section".into())),
            }
        }
        let (base, _) = Graph::from_edges(ids.len(), base)?;
        Ok((RecoveredGraph::from_blocks(base, missing, z1, z2)?, ids))
    }
}

/// Realizes the missing blocks by one Bernoulli trial per unordered pair that
/// touches a recovered slot, with success probability taken from the mapped
/// power-matrix entry. Trials run row by row in ascending position order; the
/// observed block is copied unchanged.
pub fn realize_missing(
    g_obs: &Graph,
    model: &KroneckerModel,
    mapping: &NodeMapping,
    m: usize,
    seed: u64,
) -> Result<RecoveredGraph> {
    let n = g_obs.node_count();
    if mapping.len() != n + m || mapping.observed_count() != n {
        return arg_err(format!(
            "mapping has {} positions ({} observed); expected {} ({n} observed)",
            mapping.len(),
            mapping.observed_count(),
            n + m
        ));
    }
    if (n + m) as u64 > model.size() {
        return arg_err("model index space is smaller than N + M");
    }
    let mut rng = seeded(seed);
    let edges = sample_missing_edges(model, mapping.sigma(), n, &mut rng);
    let (z1, z2): (Vec<_>, Vec<_>) = edges.into_iter().partition(|&(u, _)| u < n);
    RecoveredGraph::from_blocks(g_obs.clone(), m, z1, z2)
}
