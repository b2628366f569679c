//! Kronecker graph model: lazy entries of the K-th Kronecker power of a small
//! parameter matrix, the permuted log-likelihood of a graph under that model,
//! and EM fitting from a partially observed graph.
//!
//! Index `a` of the power matrix is read as `k` base-`n0` digits; the entry at
//! `(a, b)` is the product of `theta[a_d][b_d]` over digits. An unordered node
//! pair mapped to indices `{a, b}` uses the upper-triangle entry
//! `(min(a, b), max(a, b))`, which coincides with either orientation whenever
//! `theta` is symmetric.
//!
//! Every likelihood term depends on a pair only through its digit-pair count
//! vector (how many digits take each `(i, j)` combination), so both the edge
//! sum and the all-pairs sum are evaluated over grouped count vectors. The
//! all-pairs grouping is computed once by a digit DP over the index prefix
//! `0..n`; its cost does not depend on `n`.

use std::collections::{BTreeMap, HashMap};

use rand::Rng as _;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::graph::Graph;
use crate::rng::{seeded, Rng};

/// Lower clamp applied to every parameter entry.
pub const THETA_FLOOR: f64 = 1e-4;
/// Upper clamp applied to every parameter entry.
pub const THETA_CEIL: f64 = 1.0 - 1e-4;
/// Largest index space for which the all-pairs term defaults to exact evaluation.
pub const EXACT_ZERO_SUM_LIMIT: u64 = 4096;

/// Parameter matrix `theta` (`n0 x n0`) together with the Kronecker power `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelJson", into = "ModelJson")]
pub struct KroneckerModel {
    n0: usize,
    k: u32,
    theta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    n0: usize,
    k: u32,
    theta: Vec<Vec<f64>>,
}

impl TryFrom<ModelJson> for KroneckerModel {
    type Error = Error;

    fn try_from(j: ModelJson) -> Result<Self> {
        if j.theta.len() != j.n0 {
            return arg_err(format!("theta has {} rows, n0 is {}", j.theta.len(), j.n0));
        }
        KroneckerModel::new(j.theta, j.k)
    }
}

impl From<KroneckerModel> for ModelJson {
    fn from(m: KroneckerModel) -> Self {
        ModelJson {
            n0: m.n0,
            k: m.k,
            theta: m.theta_rows(),
        }
    }
}

impl KroneckerModel {
    /// Builds a model from a square matrix. Entries must lie in `[0, 1]` and are
    /// clamped into `[THETA_FLOOR, THETA_CEIL]`.
    pub fn new(theta: Vec<Vec<f64>>, k: u32) -> Result<Self> {
        let n0 = theta.len();
        if n0 < 1 {
            return arg_err("theta must be non-empty");
        }
        if theta.iter().any(|row| row.len() != n0) {
            return arg_err("theta must be square");
        }
        Self::from_flat(n0, theta.into_iter().flatten().collect(), k)
    }

    pub fn from_flat(n0: usize, theta: Vec<f64>, k: u32) -> Result<Self> {
        if n0 < 1 || theta.len() != n0 * n0 {
            return arg_err("theta must hold n0 * n0 entries");
        }
        if k < 1 {
            return arg_err("Kronecker power must be positive");
        }
        if n0 > 1 && (n0 as u128).checked_pow(k).is_none_or(|s| s > u64::MAX as u128) {
            return arg_err(format!("{n0}^{k} overflows the index space"));
        }
        if let Some(bad) = theta.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return arg_err(format!("theta entry {bad} outside [0, 1]"));
        }
        Ok(KroneckerModel {
            n0,
            k,
            theta: theta.into_iter().map(clamp_theta).collect(),
        })
    }

    /// Smallest positive `k` with `n0^k >= nodes`.
    pub fn power_for(n0: usize, nodes: usize) -> u32 {
        let mut k = 1u32;
        let mut size = n0 as u128;
        while size < nodes as u128 {
            if n0 < 2 {
                break;
            }
            size *= n0 as u128;
            k += 1;
        }
        k
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn theta(&self, i: usize, j: usize) -> f64 {
        self.theta[i * self.n0 + j]
    }

    /// Row-major parameter entries.
    pub fn theta_flat(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_rows(&self) -> Vec<Vec<f64>> {
        self.theta.chunks(self.n0).map(<[f64]>::to_vec).collect()
    }

    /// Dimension `n0^k` of the power matrix.
    pub fn size(&self) -> u64 {
        (self.n0 as u64).pow(self.k)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n0).all(|i| (0..i).all(|j| self.theta(i, j) == self.theta(j, i)))
    }

    /// Entry `(a, b)` of the power matrix without bounds checks.
    pub fn entry(&self, mut a: u64, mut b: u64) -> f64 {
        let n0 = self.n0 as u64;
        let mut p = 1.0;
        if n0.is_power_of_two() {
            let (bits, mask) = (n0.trailing_zeros(), n0 - 1);
            for _ in 0..self.k {
                p *= self.theta[(a & mask) as usize * self.n0 + (b & mask) as usize];
                a >>= bits;
                b >>= bits;
            }
            return p;
        }
        for _ in 0..self.k {
            p *= self.theta[(a % n0) as usize * self.n0 + (b % n0) as usize];
            a /= n0;
            b /= n0;
        }
        p
    }

    /// Edge probability for the unordered index pair `{a, b}`.
    pub fn pair_prob(&self, a: u64, b: u64) -> f64 {
        if a <= b {
            self.entry(a, b)
        } else {
            self.entry(b, a)
        }
    }

    fn with_theta(&self, theta: Vec<f64>) -> Self {
        KroneckerModel {
            n0: self.n0,
            k: self.k,
            theta,
        }
    }

    fn digit_counts(&self, a: u64, b: u64) -> Vec<u16> {
        let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
        let n0 = self.n0 as u64;
        let mut counts = vec![0u16; self.n0 * self.n0];
        for _ in 0..self.k {
            counts[(a % n0) as usize * self.n0 + (b % n0) as usize] += 1;
            a /= n0;
            b /= n0;
        }
        counts
    }
}

fn clamp_theta(t: f64) -> f64 {
    t.clamp(THETA_FLOOR, THETA_CEIL)
}

/// Entry `(a, b)` of `theta^{(x)k}`, checked against the index space.
pub fn kron_entry(model: &KroneckerModel, a: u64, b: u64) -> Result<f64> {
    let size = model.size();
    if a >= size || b >= size {
        return arg_err(format!("index ({a}, {b}) outside 0..{size}"));
    }
    Ok(model.entry(a, b))
}

/// Placement of graph positions into the power-matrix index space.
///
/// `sigma` is a permutation of `0..n`: the mapped index set is always the
/// prefix `0..n` and indices `n..n0^k` are phantom rows outside the model's
/// pair universe. Positions `0..observed` are observed nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeMapping {
    sigma: Vec<usize>,
    observed: usize,
}

impl NodeMapping {
    pub fn new(sigma: Vec<usize>, observed: usize) -> Result<Self> {
        let n = sigma.len();
        if observed > n {
            return arg_err("observed count exceeds mapping length");
        }
        let mut seen = vec![false; n];
        for &s in &sigma {
            if s >= n || std::mem::replace(&mut seen[s], true) {
                return arg_err("sigma must be a permutation of 0..n");
            }
        }
        Ok(NodeMapping { sigma, observed })
    }

    pub fn identity(n: usize, observed: usize) -> Self {
        NodeMapping {
            sigma: (0..n).collect(),
            observed: observed.min(n),
        }
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn observed_count(&self) -> usize {
        self.observed
    }

    pub fn missing_count(&self) -> usize {
        self.sigma.len() - self.observed
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn index_of(&self, position: usize) -> usize {
        self.sigma[position]
    }
}

/// How the sum of `log(1 - p)` over all unordered pairs is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroSum {
    /// Exact up to `EXACT_ZERO_SUM_LIMIT` indices, Taylor beyond.
    #[default]
    Auto,
    Exact,
    /// Second-order expansion `log(1 - p) ~ -p - p^2 / 2`.
    Taylor,
}

impl ZeroSum {
    pub fn resolve(self, size: u64) -> ZeroSum {
        match self {
            ZeroSum::Auto if size <= EXACT_ZERO_SUM_LIMIT => ZeroSum::Exact,
            ZeroSum::Auto => ZeroSum::Taylor,
            other => other,
        }
    }
}

/// Multiset of digit-pair count vectors with multiplicities.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairClasses {
    classes: Vec<(Vec<u16>, f64)>,
}

impl PairClasses {
    /// All unordered pairs `a < b` with `a, b < n`, grouped by count vector.
    pub fn all_pairs(n0: usize, k: u32, n: u64) -> Self {
        if n < 2 {
            return PairClasses::default();
        }
        let width = n0 * n0;
        let n0u = n0 as u64;
        // most significant digit first
        let mut bound = Vec::with_capacity(k as usize);
        let mut rest = n - 1;
        for _ in 0..k {
            bound.push((rest % n0u) as usize);
            rest /= n0u;
        }
        bound.reverse();

        // state: (a tight, b tight, a < b decided)
        type State = (bool, bool, bool);
        let mut layer: HashMap<State, BTreeMap<Vec<u16>, u64>> = HashMap::new();
        layer
            .entry((true, true, false))
            .or_default()
            .insert(vec![0u16; width], 1);
        for &limit in &bound {
            let mut next: HashMap<State, BTreeMap<Vec<u16>, u64>> = HashMap::new();
            for ((ta, tb, lt), counts) in layer {
                let max_x = if ta { limit } else { n0 - 1 };
                let max_y = if tb { limit } else { n0 - 1 };
                for x in 0..=max_x {
                    for y in 0..=max_y {
                        if !lt && x > y {
                            continue;
                        }
                        let key = (ta && x == limit, tb && y == limit, lt || x < y);
                        let slot = next.entry(key).or_default();
                        for (cv, &mult) in &counts {
                            let mut cv = cv.clone();
                            cv[x * n0 + y] += 1;
                            *slot.entry(cv).or_insert(0) += mult;
                        }
                    }
                }
            }
            layer = next;
        }
        let mut merged: BTreeMap<Vec<u16>, u64> = BTreeMap::new();
        for ((_, _, lt), counts) in layer {
            if lt {
                for (cv, mult) in counts {
                    *merged.entry(cv).or_insert(0) += mult;
                }
            }
        }
        PairClasses {
            classes: merged.into_iter().map(|(cv, m)| (cv, m as f64)).collect(),
        }
    }

    /// Groups explicit index pairs (order within a pair is irrelevant).
    pub fn from_index_pairs<I>(model: &KroneckerModel, pairs: I) -> Self
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        let mut merged: BTreeMap<Vec<u16>, u64> = BTreeMap::new();
        for (a, b) in pairs {
            *merged.entry(model.digit_counts(a, b)).or_insert(0) += 1;
        }
        PairClasses {
            classes: merged.into_iter().map(|(cv, m)| (cv, m as f64)).collect(),
        }
    }

    /// Total number of pairs represented.
    pub fn pair_count(&self) -> f64 {
        self.classes.iter().map(|(_, m)| m).sum()
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

fn class_prob(counts: &[u16], theta: &[f64]) -> f64 {
    counts
        .iter()
        .zip(theta)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &t)| t.powi(i32::from(c)))
        .product()
}

/// Log-likelihood of a fixed full graph and placement as a function of `theta`.
#[derive(Debug, Clone)]
pub struct KronObjective {
    edges: PairClasses,
    pairs: PairClasses,
    mode: ZeroSum,
}

impl KronObjective {
    pub fn new(a_full: &Graph, mapping: &NodeMapping, model: &KroneckerModel, mode: ZeroSum) -> Result<Self> {
        let n = a_full.node_count();
        if mapping.len() != n {
            return arg_err(format!("mapping covers {} positions, graph has {n} nodes", mapping.len()));
        }
        if (n as u64) > model.size() {
            return arg_err(format!("{n} nodes exceed the {}-index model", model.size()));
        }
        let sigma = mapping.sigma();
        let edges = PairClasses::from_index_pairs(
            model,
            a_full.edges().map(|(u, v)| (sigma[u] as u64, sigma[v] as u64)),
        );
        Ok(Self::from_parts(edges, PairClasses::all_pairs(model.n0(), model.k(), n as u64), mode.resolve(model.size())))
    }

    pub(crate) fn from_parts(edges: PairClasses, pairs: PairClasses, mode: ZeroSum) -> Self {
        KronObjective { edges, pairs, mode }
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        self.evaluate(theta, None)
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; theta.len()];
        let v = self.evaluate(theta, Some(&mut grad));
        (v, grad)
    }

    fn evaluate(&self, theta: &[f64], mut grad: Option<&mut Vec<f64>>) -> f64 {
        let mut total = 0.0;
        // observed-edge correction: log p - log(1 - p)
        for (cv, mult) in &self.edges.classes {
            let p = class_prob(cv, theta);
            total += mult * (p.ln() - (-p).ln_1p());
            if let Some(g) = grad.as_deref_mut() {
                let w = mult / (1.0 - p);
                for (t, &c) in cv.iter().enumerate() {
                    if c > 0 {
                        g[t] += w * f64::from(c) / theta[t];
                    }
                }
            }
        }
        for (cv, mult) in &self.pairs.classes {
            let p = class_prob(cv, theta);
            let (value, dp) = match self.mode {
                ZeroSum::Taylor => (-p - 0.5 * p * p, -(1.0 + p)),
                _ => ((-p).ln_1p(), -1.0 / (1.0 - p)),
            };
            total += mult * value;
            if let Some(g) = grad.as_deref_mut() {
                // d p / d theta_t = c_t p / theta_t
                let w = mult * dp * p;
                for (t, &c) in cv.iter().enumerate() {
                    if c > 0 {
                        g[t] += w * f64::from(c) / theta[t];
                    }
                }
            }
        }
        total
    }
}

/// Log-likelihood of `a_full` placed by `mapping`, summed over unordered pairs.
pub fn kron_log_likelihood(a_full: &Graph, mapping: &NodeMapping, model: &KroneckerModel) -> Result<f64> {
    kron_log_likelihood_with(a_full, mapping, model, ZeroSum::Auto)
}

pub fn kron_log_likelihood_with(
    a_full: &Graph,
    mapping: &NodeMapping,
    model: &KroneckerModel,
    mode: ZeroSum,
) -> Result<f64> {
    Ok(KronObjective::new(a_full, mapping, model, mode)?.value(model.theta_flat()))
}

/// Gradient of [`kron_log_likelihood_with`] with respect to the row-major
/// parameter entries.
pub fn kron_gradient(a_full: &Graph, mapping: &NodeMapping, model: &KroneckerModel, mode: ZeroSum) -> Result<Vec<f64>> {
    Ok(KronObjective::new(a_full, mapping, model, mode)?
        .value_and_gradient(model.theta_flat())
        .1)
}

/// Number of unordered pairs touching at least one missing position.
pub fn missing_pair_count(observed: usize, missing: usize) -> usize {
    observed * missing + missing * missing.saturating_sub(1) / 2
}

/// Draws one Bernoulli trial per unordered position pair `u < v` with
/// `v >= observed`, rows in ascending `u`. Returns successful pairs sorted.
pub(crate) fn sample_missing_edges(
    model: &KroneckerModel,
    sigma: &[usize],
    observed: usize,
    rng: &mut Rng,
) -> Vec<(usize, usize)> {
    let n = sigma.len();
    if observed >= n {
        return Vec::new();
    }
    if model.is_symmetric() {
        sample_by_ball_dropping(model, sigma, observed, rng)
    } else {
        sample_exhaustive(model, sigma, observed, rng)
    }
}

fn targets(u: usize, observed: usize, n: usize) -> std::ops::Range<usize> {
    if u < observed {
        observed..n
    } else {
        u + 1..n
    }
}

fn sample_exhaustive(model: &KroneckerModel, sigma: &[usize], observed: usize, rng: &mut Rng) -> Vec<(usize, usize)> {
    let n = sigma.len();
    let mut out = Vec::new();
    for u in 0..n {
        let a = sigma[u] as u64;
        for v in targets(u, observed, n) {
            if rng.random::<f64>() < model.pair_prob(a, sigma[v] as u64) {
                out.push((u, v));
            }
        }
    }
    out
}

/// Exact per-pair Bernoulli sampling for symmetric `theta` in time
/// proportional to the expected edge count.
///
/// Each row drops a Poisson number of balls over the whole index space with
/// per-column rate `c * P(a, b)`, `c = -ln(1 - max P) / max P`, routing every
/// ball digit by digit. A target pair hit at least once is kept with
/// probability `P / (1 - exp(-c P))`, which makes the overall success
/// probability exactly `P` (the ratio is at most 1 because `-ln(1 - x) / x`
/// increases in `x`, so `c P >= -ln(1 - P)`).
/// Rows whose expected ball count exceeds their number of target pairs are
/// sampled pair by pair instead.
fn sample_by_ball_dropping(
    model: &KroneckerModel,
    sigma: &[usize],
    observed: usize,
    rng: &mut Rng,
) -> Vec<(usize, usize)> {
    let n = sigma.len();
    let n0 = model.n0();
    let k = model.k();
    let theta = model.theta_flat();
    let max_theta = theta.iter().copied().fold(0.0, f64::max);
    let p_max = max_theta.powi(k as i32);
    let boost = -(-p_max).ln_1p() / p_max;
    let row_sums: Vec<f64> = theta.chunks(n0).map(|r| r.iter().sum()).collect();

    let mut inverse = vec![usize::MAX; n];
    for (pos, &idx) in sigma.iter().enumerate() {
        inverse[idx] = pos;
    }

    let mut out = Vec::new();
    let mut hits: Vec<usize> = Vec::new();
    for u in 0..n {
        let span = targets(u, observed, n);
        if span.is_empty() {
            continue;
        }
        let a = sigma[u] as u64;
        let mut digits = Vec::with_capacity(k as usize);
        let mut rest = a;
        let mut mass = 1.0;
        for _ in 0..k {
            let d = (rest % n0 as u64) as usize;
            digits.push(d);
            mass *= row_sums[d];
            rest /= n0 as u64;
        }
        let rate = boost * mass;
        if rate > span.len() as f64 {
            // dropping would cost more draws than visiting each pair
            for v in span {
                if rng.random::<f64>() < model.pair_prob(a, sigma[v] as u64) {
                    out.push((u, v));
                }
            }
            continue;
        }
        let balls = match Poisson::new(rate) {
            Ok(dist) => dist.sample(rng) as u64,
            Err(_) => 0,
        };
        hits.clear();
        for _ in 0..balls {
            let mut b = 0u64;
            let mut place = 1u64;
            for &d in &digits {
                let row = &theta[d * n0..(d + 1) * n0];
                let mut x = rng.random::<f64>() * row_sums[d];
                let mut j = 0;
                while j + 1 < n0 && x >= row[j] {
                    x -= row[j];
                    j += 1;
                }
                b += j as u64 * place;
                place *= n0 as u64;
            }
            if (b as usize) < n {
                let v = inverse[b as usize];
                if span.contains(&v) {
                    hits.push(v);
                }
            }
        }
        hits.sort_unstable();
        hits.dedup();
        for &v in &hits {
            let p = model.pair_prob(a, sigma[v] as u64);
            let keep = p / -(-boost * p).exp_m1();
            if rng.random::<f64>() < keep {
                out.push((u, v));
            }
        }
    }
    out
}

/// Samples a graph on `n` nodes from the model with identity placement.
pub fn kron_generate(model: &KroneckerModel, n: usize, seed: u64) -> Result<Graph> {
    if n as u64 > model.size() {
        return arg_err(format!("{n} nodes exceed the {}-index model", model.size()));
    }
    let sigma: Vec<usize> = (0..n).collect();
    let mut rng = seeded(seed);
    let edges = sample_missing_edges(model, &sigma, 0, &mut rng);
    Ok(Graph::from_edges_unchecked(n, edges))
}

/// EM fitting controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub em_iters: usize,
    /// Swap proposals per E-step; `None` means `10 * (N + M)`.
    pub mcmc_samples: Option<usize>,
    pub grad_steps: usize,
    /// Initial M-step step size; adapted by backtracking.
    pub learning_rate: f64,
    pub seed: u64,
    pub zero_sum: ZeroSum,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            em_iters: 30,
            mcmc_samples: None,
            grad_steps: 50,
            learning_rate: 1e-5,
            seed: 0,
            zero_sum: ZeroSum::Auto,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.em_iters < 1 {
            return Err(Error::Config("em_iters must be at least 1".into()));
        }
        if self.mcmc_samples == Some(0) {
            return Err(Error::Config("mcmc_samples must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Result of [`kronem_fit`].
#[derive(Debug, Clone)]
pub struct KronFit {
    pub model: KroneckerModel,
    pub mapping: NodeMapping,
    /// Last sampled missing-block edges, as position pairs `u < v`.
    pub missing_edges: Vec<(usize, usize)>,
    /// Log-likelihood of the retained sample after each M-step.
    pub loglik_trace: Vec<f64>,
    /// Objective values visited by each M-step, starting point included.
    pub mstep_traces: Vec<Vec<f64>>,
    pub acceptance_rate: f64,
}

/// Random symmetric initial parameters, uniform on `[0.25, 0.75]`.
#[allow(clippy::needless_range_loop)]
pub fn default_theta_init(n0: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    let mut theta = vec![vec![0.0; n0]; n0];
    for i in 0..n0 {
        for j in i..n0 {
            let t = rng.random_range(0.25..=0.75);
            theta[i][j] = t;
            theta[j][i] = t;
        }
    }
    theta
}

/// Positions ordered by descending observed degree (ties by id); missing
/// positions follow in order. Dense nodes land on low indices.
fn degree_placement(g_obs: &Graph, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..g_obs.node_count()).collect();
    order.sort_by_key(|&u| (std::cmp::Reverse(g_obs.degree(u)), u));
    order.extend(g_obs.node_count()..n);
    let mut sigma = vec![0; n];
    for (idx, &pos) in order.iter().enumerate() {
        sigma[pos] = idx;
    }
    sigma
}

fn edge_term(model: &KroneckerModel, a: usize, b: usize) -> f64 {
    let p = model.pair_prob(a as u64, b as u64);
    p.ln() - (-p).ln_1p()
}

fn project(theta: &[f64], n0: usize) -> Vec<f64> {
    let mut out = vec![0.0; theta.len()];
    for i in 0..n0 {
        for j in 0..n0 {
            out[i * n0 + j] = clamp_theta(0.5 * (theta[i * n0 + j] + theta[j * n0 + i]));
        }
    }
    out
}

/// Fits the model to an observed graph with `m_missing` unobserved nodes.
///
/// The E-step runs a Metropolis-Hastings chain over placements with uniform
/// transposition proposals, then redraws the missing block from its
/// conditional Bernoulli law. The M-step takes projected gradient-ascent steps
/// on the sampled log-likelihood with a backtracking step size. Only the last
/// sample of each E-step is retained.
pub fn kronem_fit(
    g_obs: &Graph,
    m_missing: usize,
    n0: usize,
    theta_init: &[Vec<f64>],
    cfg: &EmConfig,
) -> Result<KronFit> {
    cfg.validate()?;
    if n0 < 2 {
        return arg_err("n0 must be at least 2");
    }
    if theta_init.len() != n0 {
        return arg_err("theta_init dimension does not match n0");
    }
    let observed = g_obs.node_count();
    let n = observed + m_missing;
    let k = KroneckerModel::power_for(n0, n);
    let start = KroneckerModel::new(theta_init.to_vec(), k)?;
    // the M-step only visits symmetric points, so start from one
    let mut model = start.with_theta(project(start.theta_flat(), n0));
    let mut sigma = degree_placement(g_obs, n);
    let mut rng = seeded(cfg.seed);

    let mut missing = sample_missing_edges(&model, &sigma, observed, &mut rng);
    let pairs = PairClasses::all_pairs(n0, k, n as u64);
    let mode = cfg.zero_sum.resolve(model.size());
    let proposals = cfg.mcmc_samples.unwrap_or(10 * n);

    let mut step = cfg.learning_rate;
    let mut loglik_trace = Vec::with_capacity(cfg.em_iters);
    let mut mstep_traces = Vec::with_capacity(cfg.em_iters);
    let mut accepted = 0usize;
    let mut proposed = 0usize;

    for _ in 0..cfg.em_iters {
        // E-step: placement chain on the current full graph
        let mut adjacency: Vec<Vec<usize>> = (0..n)
            .map(|u| if u < observed { g_obs.neighbors(u).to_vec() } else { Vec::new() })
            .collect();
        for &(u, v) in &missing {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        if n >= 2 {
            for _ in 0..proposals {
                let u = rng.random_range(0..n);
                let mut w = rng.random_range(0..n - 1);
                if w >= u {
                    w += 1;
                }
                let (su, sw) = (sigma[u], sigma[w]);
                let mut delta = 0.0;
                for &x in &adjacency[u] {
                    if x != w {
                        delta += edge_term(&model, sw, sigma[x]) - edge_term(&model, su, sigma[x]);
                    }
                }
                for &x in &adjacency[w] {
                    if x != u {
                        delta += edge_term(&model, su, sigma[x]) - edge_term(&model, sw, sigma[x]);
                    }
                }
                proposed += 1;
                if delta >= 0.0 || rng.random::<f64>().ln() < delta {
                    sigma.swap(u, w);
                    accepted += 1;
                }
            }
        }
        // E-step: missing block given placement
        if m_missing > 0 {
            missing = sample_missing_edges(&model, &sigma, observed, &mut rng);
        }

        // M-step
        let edge_pairs = g_obs
            .edges()
            .chain(missing.iter().copied())
            .map(|(u, v)| (sigma[u] as u64, sigma[v] as u64));
        let objective = KronObjective::from_parts(PairClasses::from_index_pairs(&model, edge_pairs), pairs.clone(), mode);
        let mut theta = model.theta_flat().to_vec();
        let mut current = objective.value(&theta);
        let mut trace = vec![current];
        for _ in 0..cfg.grad_steps {
            let (_, grad) = objective.value_and_gradient(&theta);
            let mut moved = false;
            for _ in 0..60 {
                let candidate: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + step * g).collect();
                let candidate = project(&candidate, n0);
                let value = objective.value(&candidate);
                if value >= current {
                    moved = candidate != theta;
                    theta = candidate;
                    current = value;
                    step *= 2.0;
                    break;
                }
                step *= 0.5;
            }
            trace.push(current);
            if !moved {
                break;
            }
        }
        model = model.with_theta(theta);
        loglik_trace.push(current);
        mstep_traces.push(trace);
    }

    Ok(KronFit {
        model,
        mapping: NodeMapping { sigma, observed },
        missing_edges: missing,
        loglik_trace,
        mstep_traces,
        acceptance_rate: if proposed == 0 { 0.0 } else { accepted as f64 / proposed as f64 },
    })
}
