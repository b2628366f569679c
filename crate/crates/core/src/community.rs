//! Affiliation-graph community model and its NMF-style detector.
//!
//! A pair `(u, v)` is linked with probability `1 - exp(-<F_u, F_v>)`, where
//! `F` is a nonnegative node-by-community matrix. The detector maximizes the
//! log-likelihood by cycling over rows with projected gradient steps, keeping
//! the column sums of `F` cached so each row update touches only the row's
//! neighbourhood.

use std::io::{BufRead, Write};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::graph::{ext_token, Graph, NodeIdMap};
use crate::rng::seeded;

/// Floor for `<F_u, F_v>` inside `log(1 - exp(-x))`.
pub const DOT_FLOOR: f64 = 1e-10;

/// Nonnegative membership strengths, one row per node.
#[derive(Debug, Clone, PartialEq)]
pub struct AffiliationMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl AffiliationMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        AffiliationMatrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return arg_err("affiliation rows differ in length");
        }
        let values: Vec<f64> = rows.iter().flatten().copied().collect();
        if values.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return arg_err("affiliation entries must be finite and nonnegative");
        }
        Ok(AffiliationMatrix {
            rows: rows.len(),
            cols,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, u: usize) -> &[f64] {
        &self.values[u * self.cols..(u + 1) * self.cols]
    }

    pub fn get(&self, u: usize, c: usize) -> f64 {
        self.values[u * self.cols + c]
    }

    fn row_mut(&mut self, u: usize) -> &mut [f64] {
        &mut self.values[u * self.cols..(u + 1) * self.cols]
    }

    /// Multiplies every entry by `s >= 0`.
    pub fn scaled(&self, s: f64) -> Self {
        AffiliationMatrix {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|x| x * s).collect(),
        }
    }

    fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for u in 0..self.rows {
            for (s, x) in sums.iter_mut().zip(self.row(u)) {
                *s += x;
            }
        }
        sums
    }

    /// Whitespace-separated dense dump, one row per line.
    pub fn write_dense<W: Write>(&self, mut out: W) -> Result<()> {
        for u in 0..self.rows {
            let line: Vec<String> = self.row(u).iter().map(|x| format!("{x:.6}")).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log(1 - exp(-x))` with the inner product floored.
fn log_link(x: f64) -> f64 {
    (-(-x.max(DOT_FLOOR)).exp()).ln_1p()
}

/// `exp(-x) / (1 - exp(-x))` with the inner product floored.
fn link_weight(x: f64) -> f64 {
    let x = x.max(DOT_FLOOR);
    -1.0 / (-x).exp_m1() - 1.0
}

pub fn agm_edge_prob(fu: &[f64], fv: &[f64]) -> Result<f64> {
    if fu.len() != fv.len() {
        return arg_err("membership rows differ in length");
    }
    if fu.iter().chain(fv).any(|&x| x < 0.0) {
        return arg_err("membership entries must be nonnegative");
    }
    Ok(-(-dot(fu, fv)).exp_m1())
}

/// Sum over edges of `log(1 - exp(-<F_u, F_v>))` minus the sum over non-edges
/// of `<F_u, F_v>`. The non-edge sum comes from the column totals:
/// `1/2 (|sum F|^2 - sum |F_u|^2) - sum over edges <F_u, F_v>`.
pub fn agm_log_likelihood(g: &Graph, f: &AffiliationMatrix) -> Result<f64> {
    if f.rows() != g.node_count() {
        return arg_err(format!("F has {} rows, graph has {} nodes", f.rows(), g.node_count()));
    }
    let mut edge_ll = 0.0;
    let mut edge_dot = 0.0;
    for (u, v) in g.edges() {
        let x = dot(f.row(u), f.row(v));
        edge_ll += log_link(x);
        edge_dot += x;
    }
    let sums = f.column_sums();
    let total_sq = dot(&sums, &sums);
    let self_sq: f64 = (0..f.rows()).map(|u| dot(f.row(u), f.row(u))).sum();
    let non_edge = 0.5 * (total_sq - self_sq) - edge_dot;
    Ok(edge_ll - non_edge)
}

/// Negative log-likelihood.
pub fn loss(g: &Graph, f: &AffiliationMatrix) -> Result<f64> {
    Ok(-agm_log_likelihood(g, f)?)
}

/// Gradient of the log-likelihood with respect to row `u` of `F`.
pub fn row_gradient(g: &Graph, f: &AffiliationMatrix, u: usize) -> Vec<f64> {
    let sums = f.column_sums();
    let mut rest: Vec<f64> = sums.iter().zip(f.row(u)).map(|(s, x)| s - x).collect();
    let mut grad = vec![0.0; f.cols()];
    let fu = f.row(u);
    for &v in g.neighbors(u) {
        let fv = f.row(v);
        let w = link_weight(dot(fu, fv));
        for c in 0..f.cols() {
            grad[c] += w * fv[c];
            rest[c] -= fv[c];
        }
    }
    for c in 0..f.cols() {
        grad[c] -= rest[c];
    }
    grad
}

/// Detector controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    /// Absolute stopping threshold on the per-pass loss decrease; `None` uses
    /// `1e-4 * (1 + |D|)`.
    pub eta_detect: Option<f64>,
    pub max_iters: usize,
    /// Largest per-coordinate move of a row update before backtracking.
    pub step_init: f64,
    pub seed: u64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            eta_detect: None,
            max_iters: 300,
            step_init: 1.0,
            seed: 0,
        }
    }
}

impl DetectConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(eta) = self.eta_detect {
            if !(eta > 0.0) {
                return Err(Error::Config("eta_detect must be positive".into()));
            }
        }
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.step_init > 0.0) {
            return Err(Error::Config("step_init must be positive".into()));
        }
        Ok(())
    }

    fn threshold(&self, loss: f64) -> f64 {
        self.eta_detect.unwrap_or(1e-4 * (1.0 + loss.abs()))
    }
}

/// Outcome of [`commun_det`].
#[derive(Debug, Clone)]
pub struct Detection {
    pub loss: f64,
    pub f: AffiliationMatrix,
    pub converged: bool,
    /// Loss after initialization and after every full pass.
    pub trace: Vec<f64>,
}

const MAX_HALVINGS: usize = 10;

/// Fits `F` with `c` communities by block coordinate gradient ascent over rows.
///
/// Rows are visited in ascending id. Each row moves along its gradient,
/// scaled so no coordinate moves more than `step_init`, projected onto the
/// nonnegative orthant, and halved up to ten times until the row objective
/// does not decrease; a row that never qualifies is left unchanged. Passes
/// stop once the loss decrease falls below the convergence threshold.
pub fn commun_det(g: &Graph, c: usize, cfg: &DetectConfig) -> Result<Detection> {
    cfg.validate()?;
    if c < 1 {
        return arg_err("community count must be at least 1");
    }
    let n = g.node_count();
    if n < 1 {
        return arg_err("graph must have at least one node");
    }

    if g.edge_count() == 0 {
        // F = 0 attains the maximum (zero) of an objective made of non-edge penalties only
        return Ok(Detection {
            loss: 0.0,
            f: AffiliationMatrix::zeros(n, c),
            converged: true,
            trace: vec![0.0],
        });
    }

    let delta = default_delta(g)?;
    let upper = delta.sqrt() / c as f64;
    let mut rng = seeded(cfg.seed);
    let mut f = AffiliationMatrix::zeros(n, c);
    for x in f.values.iter_mut() {
        *x = rng.random::<f64>() * upper;
    }

    let mut sums = f.column_sums();
    let mut current = loss(g, &f)?;
    let mut trace = vec![current];
    let mut converged = false;
    let mut rest = vec![0.0; c];
    let mut grad = vec![0.0; c];
    let mut candidate = vec![0.0; c];

    for _ in 0..cfg.max_iters {
        for u in 0..n {
            // rest = sum over non-neighbours v != u of F_v
            for k in 0..c {
                rest[k] = sums[k] - f.get(u, k);
                grad[k] = 0.0;
            }
            let fu = f.row(u).to_vec();
            let mut base = 0.0;
            for &v in g.neighbors(u) {
                let fv = f.row(v);
                let x = dot(&fu, fv);
                base += log_link(x);
                let w = link_weight(x);
                for k in 0..c {
                    grad[k] += w * fv[k];
                    rest[k] -= fv[k];
                }
            }
            base -= dot(&fu, &rest);
            for k in 0..c {
                grad[k] -= rest[k];
            }
            let scale = grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if scale == 0.0 || !scale.is_finite() {
                continue;
            }
            let mut step = cfg.step_init / scale.max(1.0);
            for _ in 0..=MAX_HALVINGS {
                for k in 0..c {
                    candidate[k] = (fu[k] + step * grad[k]).max(0.0);
                }
                let mut value = -dot(&candidate, &rest);
                for &v in g.neighbors(u) {
                    value += log_link(dot(&candidate, f.row(v)));
                }
                if value >= base {
                    for k in 0..c {
                        sums[k] += candidate[k] - fu[k];
                    }
                    f.row_mut(u).copy_from_slice(&candidate);
                    break;
                }
                step *= 0.5;
            }
        }
        sums = f.column_sums();
        let next = loss(g, &f)?;
        let improvement = current - next;
        current = next;
        trace.push(current);
        if improvement < cfg.threshold(current) {
            converged = true;
            break;
        }
    }

    Ok(Detection {
        loss: current,
        f,
        converged,
        trace,
    })
}

/// Overlapping communities over nodes `0..universe`, members sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cover {
    pub communities: Vec<Vec<usize>>,
    pub universe: usize,
}

impl Cover {
    pub fn new(communities: Vec<Vec<usize>>, universe: usize) -> Result<Self> {
        let mut communities = communities;
        for com in communities.iter_mut() {
            com.sort_unstable();
            com.dedup();
            if com.last().is_some_and(|&u| u >= universe) {
                return arg_err(format!("community member outside universe {universe}"));
            }
        }
        Ok(Cover { communities, universe })
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    /// Drops members `>= universe` and shrinks the universe.
    pub fn restrict(&self, universe: usize) -> Cover {
        Cover {
            communities: self
                .communities
                .iter()
                .map(|com| com.iter().copied().filter(|&u| u < universe).collect())
                .collect(),
            universe: universe.min(self.universe),
        }
    }

    /// One community per line. Ids below `ids.len()` are written through
    /// `ids`; higher ids are recovered nodes, written `recovered:j`.
    pub fn write<W: Write>(&self, ids: Option<&NodeIdMap>, mut out: W) -> Result<()> {
        for com in &self.communities {
            let toks: Vec<String> = com
                .iter()
                .map(|&u| match ids {
                    Some(map) if u >= map.len() => format!("recovered:{}", u - map.len()),
                    Some(map) => ext_token(map, u),
                    None => u.to_string(),
                })
                .collect();
            writeln!(out, "{}", toks.join(" "))?;
        }
        Ok(())
    }

    /// Parses a community file against known node ids. Unknown tokens are
    /// skipped; the count of skipped tokens is returned.
    pub fn read<R: BufRead>(reader: R, ids: &NodeIdMap) -> Result<(Cover, usize)> {
        let mut communities = Vec::new();
        let mut skipped = 0;
        for line in reader.lines() {
            let line = line?;
            if line.trim_start().starts_with('#') {
                continue;
            }
            let mut com = Vec::new();
            for tok in line.split_whitespace() {
                match ids.internal(tok) {
                    Some(u) => com.push(u),
                    None => skipped += 1,
                }
            }
            communities.push(com);
        }
        while communities.last().is_some_and(Vec::is_empty) {
            communities.pop();
        }
        if skipped > 0 {
            log::warn!("skipped {skipped} community member(s) not present in the graph");
        }
        Ok((Cover::new(communities, ids.len())?, skipped))
    }
}

/// Node `u` joins community `c` iff `F[u][c] >= delta`.
pub fn hard_decision(f: &AffiliationMatrix, delta: f64) -> Result<Cover> {
    if !(delta > 0.0) {
        return arg_err(format!("delta must be positive, got {delta}"));
    }
    let communities = (0..f.cols())
        .map(|c| (0..f.rows()).filter(|&u| f.get(u, c) >= delta).collect())
        .collect();
    Ok(Cover {
        communities,
        universe: f.rows(),
    })
}

/// Membership threshold at which one shared community of strength `delta`
/// yields the graph's background edge density.
pub fn default_delta(g: &Graph) -> Result<f64> {
    let n = g.node_count();
    if n < 2 {
        return arg_err("default delta needs at least two nodes");
    }
    let pairs = (n * (n - 1)) as f64 / 2.0;
    let density = (g.edge_count() as f64 / pairs).min(1.0 - 1e-9);
    Ok((-(-density).ln_1p()).sqrt().max(1e-6))
}
