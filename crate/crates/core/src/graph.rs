//! Sparse undirected simple graphs over dense `0..n` node ids, plus edge-list I/O.
//!
//! Adjacency lists are kept sorted and duplicate-free, so edge membership is a
//! binary search. External node tokens from input files are mapped to dense ids
//! through [`NodeIdMap`] and restored on output.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use crate::error::{arg_err, Error, Result};

/// Immutable undirected simple graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Graph with `n` isolated nodes.
    pub fn empty(n: usize) -> Self {
        Graph {
            adjacency: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge iterator. Self-loops and duplicates are
    /// dropped. Returns the graph and the number of self-loops seen.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<(Graph, usize)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adjacency = vec![Vec::new(); n];
        let mut loops = 0;
        for (u, v) in edges {
            if u >= n || v >= n {
                return arg_err(format!("edge ({u}, {v}) out of range for {n} nodes"));
            }
            if u == v {
                loops += 1;
                continue;
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        let mut twice = 0;
        for list in adjacency.iter_mut() {
            list.sort_unstable();
            list.dedup();
            twice += list.len();
        }
        Ok((
            Graph {
                adjacency,
                edge_count: twice / 2,
            },
            loops,
        ))
    }

    /// Like [`Graph::from_edges`] for callers that guarantee valid, loop-free input.
    pub(crate) fn from_edges_unchecked<I>(n: usize, edges: I) -> Graph
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let (g, loops) = Graph::from_edges(n, edges).expect("edge ids in range");
        debug_assert_eq!(loops, 0);
        g
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.adjacency.len() && self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().copied().filter(move |&v| v > u).map(move |v| (u, v)))
    }

    /// Subgraph induced by `keep`. Kept nodes are renumbered in ascending
    /// order of their original id; the returned vector maps new id to old id.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<(Graph, Vec<usize>)> {
        let n = self.node_count();
        let mut kept: Vec<usize> = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if let Some(&bad) = kept.iter().find(|&&u| u >= n) {
            return arg_err(format!("node {bad} out of range for {n} nodes"));
        }
        let mut remap = vec![usize::MAX; n];
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new;
        }
        let remap = &remap;
        let edges = kept.iter().flat_map(|&old| {
            let ru = remap[old];
            self.adjacency[old]
                .iter()
                .filter(move |&&v| v > old && remap[v] != usize::MAX)
                .map(move |&v| (ru, remap[v]))
        });
        let g = Graph::from_edges_unchecked(kept.len(), edges.collect::<Vec<_>>());
        Ok((g, kept))
    }
}

/// Bijection between external node tokens and dense internal ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeIdMap {
    forward: HashMap<String, usize>,
    inverse: Vec<String>,
}

impl NodeIdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Identity map `"0" .. "n-1"`.
    pub fn identity(n: usize) -> Self {
        let mut map = Self::new();
        for u in 0..n {
            map.intern(&u.to_string());
        }
        map
    }

    /// Returns the id for `token`, allocating the next dense id if new.
    pub fn intern(&mut self, token: &str) -> usize {
        if let Some(&id) = self.forward.get(token) {
            return id;
        }
        let id = self.inverse.len();
        self.forward.insert(token.to_owned(), id);
        self.inverse.push(token.to_owned());
        id
    }

    pub fn internal(&self, token: &str) -> Option<usize> {
        self.forward.get(token).copied()
    }

    pub fn external(&self, id: usize) -> Option<&str> {
        self.inverse.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.inverse.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inverse.is_empty()
    }

    /// Restriction to the given internal ids, renumbered in slice order.
    pub fn restrict(&self, ids: &[usize]) -> NodeIdMap {
        let mut out = NodeIdMap::new();
        for &id in ids {
            out.intern(&self.inverse[id]);
        }
        out
    }
}

/// Result of parsing an edge-list file.
#[derive(Debug, Clone)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub ids: NodeIdMap,
    pub dropped_self_loops: usize,
}

/// Parses a whitespace-separated edge list. Lines starting with `#` and blank
/// lines are skipped; every other line must hold exactly two tokens.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<LoadedGraph> {
    let mut ids = NodeIdMap::new();
    let mut edges = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected two node tokens, got {trimmed:?}"),
            });
        };
        let u = ids.intern(a);
        let v = ids.intern(b);
        edges.push((u, v));
    }
    let (graph, loops) = Graph::from_edges(ids.len(), edges)?;
    if loops > 0 {
        log::warn!("dropped {loops} self-loop(s) while loading edge list");
    }
    Ok(LoadedGraph {
        graph,
        ids,
        dropped_self_loops: loops,
    })
}

/// Parses an edge list from a string.
pub fn parse_edge_list(text: &str) -> Result<LoadedGraph> {
    load_edge_list(text.as_bytes())
}

/// Writes `g` as an edge list sorted by `(u, v)`, `u < v`. Node ids are
/// translated through `ids` when given. Isolated nodes are not representable
/// in this format.
pub fn write_edge_list<W: Write>(g: &Graph, ids: Option<&NodeIdMap>, mut out: W) -> Result<()> {
    for (u, v) in g.edges() {
        match ids {
            Some(map) => writeln!(out, "{} {}", ext_token(map, u), ext_token(map, v))?,
            None => writeln!(out, "{u} {v}")?,
        }
    }
    Ok(())
}

pub(crate) fn ext_token(map: &NodeIdMap, id: usize) -> String {
    map.external(id)
        .map(str::to_owned)
        .unwrap_or_else(|| id.to_string())
}
