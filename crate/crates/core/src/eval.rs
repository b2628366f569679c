//! Cover comparison, graph sampling, planted benchmarks and experiment reports.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::community::{agm_edge_prob, hard_decision, AffiliationMatrix, Cover};
use crate::error::{arg_err, Error, Result};
use crate::graph::Graph;
use crate::pipeline::{baseline1, baseline2_with, complete, kromfac_with, KromfacConfig, SearchTrace};
use crate::rng::{derive_seed, seeded};

/// Membership threshold used for planted ground truth.
pub const PLANTED_THRESHOLD: f64 = 0.5;

fn plogp(count: usize, n: f64) -> f64 {
    if count == 0 {
        0.0
    } else {
        let p = count as f64 / n;
        -p * p.ln()
    }
}

fn overlap(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut k) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                k += 1;
                i += 1;
                j += 1;
            }
        }
    }
    k
}

/// Mean normalized conditional entropy of `x`'s communities given `y`.
fn side_ratio(x: &Cover, y: &Cover) -> f64 {
    let n = x.universe as f64;
    let mut total = 0.0;
    let mut counted = 0usize;
    for xk in &x.communities {
        let a1 = xk.len();
        let hx = plogp(a1, n) + plogp(x.universe - a1, n);
        if hx <= 0.0 {
            continue;
        }
        let mut best = hx;
        for yl in &y.communities {
            let b1 = yl.len();
            let n11 = overlap(xk, yl);
            let n10 = a1 - n11;
            let n01 = b1 - n11;
            let n00 = x.universe - n11 - n10 - n01;
            let (h11, h10, h01, h00) = (plogp(n11, n), plogp(n10, n), plogp(n01, n), plogp(n00, n));
            if h11 + h00 <= h01 + h10 {
                continue;
            }
            let cond = h11 + h10 + h01 + h00 - (plogp(b1, n) + plogp(x.universe - b1, n));
            best = best.min(cond);
        }
        total += best / hx;
        counted += 1;
    }
    if counted == 0 {
        fn nonempty(c: &Cover) -> Vec<&Vec<usize>> {
            let mut v: Vec<&Vec<usize>> = c.communities.iter().filter(|s| !s.is_empty()).collect();
            v.sort();
            v.dedup();
            v
        }
        return if nonempty(x) == nonempty(y) { 0.0 } else { 1.0 };
    }
    total / counted as f64
}

/// Overlapping-cover NMI: `1 - (H(X|Y)/H(X) + H(Y|X)/H(Y)) / 2`, each
/// community treated as a binary membership variable and non-informative
/// matches excluded. Result lies in `[0, 1]`.
pub fn nmi(x: &Cover, y: &Cover) -> Result<f64> {
    if x.universe != y.universe {
        return arg_err(format!("cover universes differ: {} vs {}", x.universe, y.universe));
    }
    if x.universe == 0 {
        return Ok(1.0);
    }
    let score = 1.0 - 0.5 * (side_ratio(x, y) + side_ratio(y, x));
    Ok(score.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Uniform random nodes.
    Rn,
    /// Forest fire.
    Ff,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Rn => "rn",
            Strategy::Ff => "ff",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rn" => Ok(Strategy::Rn),
            "ff" => Ok(Strategy::Ff),
            _ => Err(format!("unknown sampling strategy {s:?} (expected rn or ff)")),
        }
    }
}

/// How an observable graph is drawn from a complete one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub strategy: Strategy,
    /// Retained fraction of nodes.
    pub fraction: f64,
    /// Forest-fire forward burning probability.
    pub p_forward: f64,
    pub seed: u64,
}

impl SampleSpec {
    pub fn new(strategy: Strategy, seed: u64) -> Self {
        SampleSpec {
            strategy,
            fraction: 0.7,
            p_forward: 0.7,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::Config(format!("fraction must lie in (0, 1], got {}", self.fraction)));
        }
        if !(self.p_forward > 0.0 && self.p_forward < 1.0) {
            return Err(Error::Config(format!("p_forward must lie in (0, 1), got {}", self.p_forward)));
        }
        Ok(())
    }

    /// `ceil(fraction * n)`, robust to representation error in `fraction`.
    pub fn target(&self, n: usize) -> usize {
        ((self.fraction * n as f64 - 1e-9).ceil().max(0.0) as usize).min(n)
    }
}

/// Samples with the strategy named in `spec`.
pub fn sample(g: &Graph, spec: &SampleSpec) -> Result<(Graph, Vec<usize>)> {
    match spec.strategy {
        Strategy::Rn => rn_sample(g, spec),
        Strategy::Ff => ff_sample(g, spec),
    }
}

/// Keeps a uniformly random node subset of the target size.
pub fn rn_sample(g: &Graph, spec: &SampleSpec) -> Result<(Graph, Vec<usize>)> {
    spec.validate()?;
    let n = g.node_count();
    let mut rng = seeded(spec.seed);
    let keep = index::sample(&mut rng, n, spec.target(n)).into_vec();
    g.induced_subgraph(&keep)
}

/// Forest-fire sampling. Each burning node ignites a geometric number of its
/// unburned neighbours (mean `p / (1 - p)`), chosen uniformly; a new random
/// seed is lit whenever the fire dies out. Burning stops at the target size.
pub fn ff_sample(g: &Graph, spec: &SampleSpec) -> Result<(Graph, Vec<usize>)> {
    spec.validate()?;
    let n = g.node_count();
    let target = spec.target(n);
    let mut rng = seeded(spec.seed);
    let spread = Geometric::new(1.0 - spec.p_forward).map_err(|e| Error::Config(e.to_string()))?;

    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.shuffle(&mut rng);
    let mut burned = vec![false; n];
    let mut kept = Vec::with_capacity(target);
    let mut next_seed = seeds.into_iter();
    let mut queue = VecDeque::new();

    while kept.len() < target {
        if queue.is_empty() {
            let s = next_seed.by_ref().find(|&u| !burned[u]).expect("unburned node remains");
            burned[s] = true;
            kept.push(s);
            queue.push_back(s);
            continue;
        }
        let x = queue.pop_front().expect("nonempty frontier");
        let fresh: Vec<usize> = g.neighbors(x).iter().copied().filter(|&v| !burned[v]).collect();
        if fresh.is_empty() {
            continue;
        }
        let count = (spread.sample(&mut rng) as usize).min(fresh.len());
        for pick in index::sample(&mut rng, fresh.len(), count) {
            if kept.len() == target {
                break;
            }
            let v = fresh[pick];
            burned[v] = true;
            kept.push(v);
            queue.push_back(v);
        }
    }
    g.induced_subgraph(&kept)
}

/// Layout of a planted affiliation benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub nodes: usize,
    pub communities: usize,
    /// Fraction of nodes that belong to two communities.
    pub overlap: f64,
    /// Membership strength of every affiliation.
    pub strength: f64,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            nodes: 100,
            communities: 3,
            overlap: 0.1,
            strength: 0.8,
        }
    }
}

/// Random balanced memberships: every node joins one community, an `overlap`
/// fraction joins a second one.
pub fn planted_affiliation(spec: &PlantedSpec, seed: u64) -> Result<AffiliationMatrix> {
    if spec.communities < 1 || spec.nodes < 1 {
        return arg_err("planted benchmark needs nodes and communities");
    }
    if !(0.0..=1.0).contains(&spec.overlap) || !(spec.strength > 0.0) {
        return arg_err("overlap must lie in [0, 1] and strength be positive");
    }
    let mut rng = seeded(seed);
    let mut order: Vec<usize> = (0..spec.nodes).collect();
    order.shuffle(&mut rng);
    let mut rows = vec![vec![0.0; spec.communities]; spec.nodes];
    for (slot, &u) in order.iter().enumerate() {
        rows[u][slot % spec.communities] = spec.strength;
    }
    if spec.communities > 1 {
        let extra = (spec.overlap * spec.nodes as f64).round() as usize;
        for &u in order.iter().take(extra) {
            let home = rows[u].iter().position(|&w| w > 0.0).expect("assigned");
            let other = (home + rng.random_range(1..spec.communities)) % spec.communities;
            rows[u][other] = spec.strength;
        }
    }
    AffiliationMatrix::from_rows(rows)
}

/// Draws each pair independently with its affiliation-model probability;
/// ground truth thresholds `f_true` at [`PLANTED_THRESHOLD`].
pub fn agm_generate(f_true: &AffiliationMatrix, seed: u64) -> Result<(Graph, Cover)> {
    let n = f_true.rows();
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = agm_edge_prob(f_true.row(u), f_true.row(v))?;
            if p > 0.0 && rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let g = Graph::from_edges_unchecked(n, edges);
    Ok((g, hard_decision(f_true, PLANTED_THRESHOLD)?))
}

/// Node and edge counts plus a SHA-256 of the sorted edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub nodes: usize,
    pub edges: usize,
    pub sha256: String,
}

impl Fingerprint {
    pub fn of(g: &Graph) -> Self {
        let mut h = Sha256::new();
        h.update(format!("{}\n", g.node_count()).as_bytes());
        for (u, v) in g.edges() {
            h.update(format!("{u} {v}\n").as_bytes());
        }
        let sha256 = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
        Fingerprint {
            nodes: g.node_count(),
            edges: g.edge_count(),
            sha256,
        }
    }
}

/// One point of the NMI-versus-size curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub i: usize,
    pub loss: f64,
    pub reg_loss: f64,
    pub nmi: f64,
}

/// Run-dependent fields excluded from reproducibility comparisons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub timestamp: u64,
    pub timing_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// NMI per method: `kromfac`, `baseline1`, `baseline2`.
    pub methods: BTreeMap<String, f64>,
    pub trace: SearchTrace,
    pub curve: Vec<CurvePoint>,
    pub config: KromfacConfig,
    pub sample: SampleSpec,
    pub dataset: Fingerprint,
    pub observed: Fingerprint,
    pub missing: usize,
    pub dropped_truth_communities: usize,
    pub metadata: Metadata,
}

impl ExperimentReport {
    pub fn nmi(&self, method: &str) -> f64 {
        self.methods[method]
    }

    /// Size with the best NMI on the curve; ties go to the smaller size.
    pub fn best_point(&self) -> &CurvePoint {
        self.curve
            .iter()
            .reduce(|best, p| if p.nmi > best.nmi { p } else { best })
            .expect("curve has at least one point")
    }

    /// CSV with header `i,loss,reg_loss,nmi`.
    pub fn write_curve_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,loss,reg_loss,nmi")?;
        for p in &self.curve {
            writeln!(out, "{},{},{},{}", p.i, p.loss, p.reg_loss, p.nmi)?;
        }
        Ok(())
    }
}

/// Ground truth on the sampled nodes, renumbered like the sample. Communities
/// left empty are dropped; their count is returned.
pub fn restrict_truth(truth: &Cover, kept: &[usize]) -> Result<(Cover, usize)> {
    let mut remap = vec![usize::MAX; truth.universe];
    for (new, &old) in kept.iter().enumerate() {
        if old >= truth.universe {
            return arg_err(format!("kept node {old} outside ground-truth universe"));
        }
        remap[old] = new;
    }
    let mut dropped = 0;
    let mut communities = Vec::new();
    for com in &truth.communities {
        let c: Vec<usize> = com.iter().map(|&u| remap[u]).filter(|&u| u != usize::MAX).collect();
        if c.is_empty() {
            dropped += 1;
        } else {
            communities.push(c);
        }
    }
    if dropped > 0 {
        log::info!("dropped {dropped} ground-truth communit(ies) with no sampled member");
    }
    Ok((Cover::new(communities, kept.len())?, dropped))
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Samples the observable graph, runs the pipeline and both baselines, and
/// scores each against the ground truth over the observed nodes. `cfg.m` is
/// replaced by the number of deleted nodes.
pub fn run_experiment(graph: &Graph, truth: &Cover, spec: &SampleSpec, cfg: &KromfacConfig) -> Result<ExperimentReport> {
    if truth.universe != graph.node_count() {
        return arg_err("ground-truth universe must match the dataset");
    }
    let mut cfg = cfg.clone();
    let mut timing = BTreeMap::new();

    let t = Instant::now();
    let (g_obs, kept) = sample(graph, spec)?;
    timing.insert("sample".to_owned(), ms_since(t));
    let n = g_obs.node_count();
    cfg.m = graph.node_count() - n;
    let (truth_obs, dropped) = restrict_truth(truth, &kept)?;

    let t = Instant::now();
    let completion = complete(&g_obs, &cfg)?;
    timing.insert("complete".to_owned(), ms_since(t));

    let t = Instant::now();
    let b2 = baseline2_with(&cfg, &completion)?;
    timing.insert("baseline2".to_owned(), ms_since(t));

    let t = Instant::now();
    let run = kromfac_with(&g_obs, &cfg, completion)?;
    timing.insert("search".to_owned(), ms_since(t));

    let t = Instant::now();
    let b1 = baseline1(&g_obs, cfg.c, cfg.delta, &cfg.detect)?;
    timing.insert("baseline1".to_owned(), ms_since(t));

    let score = |c: &Cover| nmi(&c.restrict(n), &truth_obs);
    let mut methods = BTreeMap::new();
    methods.insert("kromfac".to_owned(), score(&run.cover)?);
    methods.insert("baseline1".to_owned(), score(&b1)?);
    methods.insert("baseline2".to_owned(), score(&b2)?);

    let curve = run
        .candidates
        .iter()
        .map(|c| {
            Ok(CurvePoint {
                i: c.i,
                loss: c.loss,
                reg_loss: c.reg_loss,
                nmi: score(&c.cover)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    Ok(ExperimentReport {
        methods,
        trace: run.trace,
        curve,
        sample: *spec,
        dataset: Fingerprint::of(graph),
        observed: Fingerprint::of(&g_obs),
        missing: cfg.m,
        dropped_truth_communities: dropped,
        config: cfg,
        metadata: Metadata { timestamp, timing_ms: timing },
    })
}

/// Runs one experiment per seed in parallel; results are ordered by seed.
/// Each seed re-derives the sampling and pipeline streams.
pub fn run_sweep(
    graph: &Graph,
    truth: &Cover,
    spec: &SampleSpec,
    cfg: &KromfacConfig,
    seeds: &[u64],
) -> Result<Vec<ExperimentReport>> {
    seeds
        .par_iter()
        .map(|&s| {
            let spec = SampleSpec {
                seed: derive_seed(s, "sample", 0),
                ..*spec
            };
            let mut cfg = cfg.clone();
            cfg.reseed(s);
            run_experiment(graph, truth, &spec, &cfg)
        })
        .collect()
}
