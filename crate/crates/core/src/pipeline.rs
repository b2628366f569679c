//! The full detection pipeline and its two baselines.
//!
//! `kromfac` fits the Kronecker model, realizes the missing part once, ranks
//! recovered nodes, and then re-runs detection for every prefix size `i` of the
//! ranking, keeping the `i` with the smallest `D - lambda * ln(i + 1)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::community::{commun_det, default_delta, hard_decision, AffiliationMatrix, Cover, DetectConfig};
use crate::completion::{realize_missing, RecoveredGraph};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kron::{default_theta_init, kronem_fit, EmConfig, KronFit};
use crate::ranking::{default_epsilon, select_influential, Ranking};
use crate::rng::derive_seed;

/// A threshold that is either given or derived from the graph.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Threshold {
    #[default]
    Auto,
    Value(f64),
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Auto => f.write_str("auto"),
            Threshold::Value(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threshold::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(Threshold::Value(v)),
            _ => Err(format!("expected \"auto\" or a positive number, got {s:?}")),
        }
    }
}

impl Serialize for Threshold {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Threshold::Auto => s.serialize_str("auto"),
            Threshold::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Threshold::Value(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Pipeline inputs besides the observed graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KromfacConfig {
    /// Number of missing nodes `M`.
    pub m: usize,
    /// Number of communities `C`.
    pub c: usize,
    pub n0: usize,
    /// `lambda = lambda_coef * N` unless `lambda` is set.
    pub lambda_coef: f64,
    pub lambda: Option<f64>,
    pub epsilon: Threshold,
    pub delta: Threshold,
    pub em: EmConfig,
    pub detect: DetectConfig,
    pub include_i0: bool,
    pub seed: u64,
    /// Initial Kronecker parameters; random when absent.
    pub theta_init: Option<Vec<Vec<f64>>>,
    /// Worker threads for the per-`i` search; `None` uses the global pool.
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl Default for KromfacConfig {
    fn default() -> Self {
        KromfacConfig::new(0, 1, 0)
    }
}

impl KromfacConfig {
    /// Defaults with all random streams derived from `seed`.
    pub fn new(m: usize, c: usize, seed: u64) -> Self {
        KromfacConfig {
            m,
            c,
            n0: 2,
            lambda_coef: 10.0,
            lambda: None,
            epsilon: Threshold::Auto,
            delta: Threshold::Auto,
            em: EmConfig {
                seed: derive_seed(seed, "em", 0),
                ..EmConfig::default()
            },
            detect: DetectConfig {
                seed: derive_seed(seed, "detect", 0),
                ..DetectConfig::default()
            },
            include_i0: true,
            seed,
            theta_init: None,
            threads: None,
        }
    }

    /// Re-derives every random stream from a new master seed.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.em.seed = derive_seed(seed, "em", 0);
        self.detect.seed = derive_seed(seed, "detect", 0);
    }

    pub fn validate(&self) -> Result<()> {
        if self.c < 1 {
            return Err(Error::Config("community count must be at least 1".into()));
        }
        if self.n0 < 2 {
            return Err(Error::Config("n0 must be at least 2".into()));
        }
        if !(self.lambda_coef > 0.0) {
            return Err(Error::Config("lambda_coef must be positive".into()));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) {
                return Err(Error::Config("lambda must be nonnegative".into()));
            }
        }
        self.em.validate()?;
        self.detect.validate()
    }

    /// Regularization weight for an observed graph of `n` nodes.
    pub fn resolve_lambda(&self, n: usize) -> f64 {
        self.lambda.unwrap_or(self.lambda_coef * n as f64)
    }
}

/// `d - lambda * ln(i + 1)`.
pub fn regularized_loss(d: f64, i: usize, lambda: f64) -> f64 {
    d - lambda * ((i + 1) as f64).ln()
}

/// One evaluated candidate size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchRecord {
    pub i: usize,
    pub loss: f64,
    pub reg_loss: f64,
    pub converged: bool,
}

/// Record of the search over the number of attached nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub lambda: f64,
    pub h: usize,
    pub trace: Vec<SearchRecord>,
    pub i_hat: usize,
    /// Set when no influential node exists and the search fell back to `i = 0`.
    #[serde(default)]
    pub degenerate: bool,
    pub f_rows: usize,
    pub f_cols: usize,
}

impl SearchTrace {
    /// Size with the smallest regularized loss; ties go to the smaller size.
    pub fn argmin(&self) -> Option<usize> {
        self.trace
            .iter()
            .min_by(|a, b| a.reg_loss.total_cmp(&b.reg_loss).then(a.i.cmp(&b.i)))
            .map(|r| r.i)
    }
}

/// Detection outcome for one candidate size.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub i: usize,
    pub loss: f64,
    pub reg_loss: f64,
    pub converged: bool,
    pub delta: f64,
    pub f: AffiliationMatrix,
    pub cover: Cover,
}

/// Kronecker fit plus one realization of the missing part.
#[derive(Debug, Clone)]
pub struct Completion {
    pub fit: Option<KronFit>,
    pub recovered: RecoveredGraph,
}

/// Everything `kromfac` produces.
#[derive(Debug, Clone)]
pub struct KromfacRun {
    pub cover: Cover,
    pub trace: SearchTrace,
    pub ranking: Ranking,
    pub completion: Completion,
    pub candidates: Vec<Candidate>,
}

impl KromfacRun {
    pub fn chosen(&self) -> &Candidate {
        self.candidates
            .iter()
            .find(|c| c.i == self.trace.i_hat)
            .expect("chosen candidate is recorded")
    }
}

pub(crate) fn detect_seed(base: u64, i: usize) -> u64 {
    if i == 0 {
        base
    } else {
        derive_seed(base, "detect-i", i as u64)
    }
}

fn resolve_delta(delta: Threshold, g: &Graph) -> f64 {
    match delta {
        Threshold::Value(v) => v,
        Threshold::Auto => default_delta(g).unwrap_or(1e-6),
    }
}

/// Fits the Kronecker model and realizes the missing part once.
pub fn complete(g_obs: &Graph, cfg: &KromfacConfig) -> Result<Completion> {
    cfg.validate()?;
    if cfg.m == 0 {
        return Ok(Completion {
            fit: None,
            recovered: RecoveredGraph::from_blocks(g_obs.clone(), 0, Vec::new(), Vec::new())?,
        });
    }
    let theta_init = cfg
        .theta_init
        .clone()
        .unwrap_or_else(|| default_theta_init(cfg.n0, derive_seed(cfg.seed, "theta-init", 0)));
    let fit = kronem_fit(g_obs, cfg.m, cfg.n0, &theta_init, &cfg.em)?;
    let recovered = realize_missing(g_obs, &fit.model, &fit.mapping, cfg.m, derive_seed(cfg.seed, "realize", 0))?;
    Ok(Completion {
        fit: Some(fit),
        recovered,
    })
}

/// Influential nodes of a completion under the configured threshold.
pub fn rank(completion: &Completion, cfg: &KromfacConfig) -> Result<Ranking> {
    let rg = &completion.recovered;
    let epsilon = match cfg.epsilon {
        Threshold::Value(v) => v,
        Threshold::Auto if rg.full_graph().node_count() == 0 => 0.0,
        Threshold::Auto => default_epsilon(rg)?,
    };
    if epsilon > 0.0 {
        select_influential(rg, epsilon)
    } else {
        // edgeless realization: nothing is influential
        Ok(Ranking {
            epsilon,
            h: 0,
            order: Vec::new(),
            centrality: rg.recovered_nodes().into_iter().map(|u| (u, 0.0)).collect(),
        })
    }
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

/// Runs the search over `i` on an existing completion.
pub fn kromfac_with(g_obs: &Graph, cfg: &KromfacConfig, completion: Completion) -> Result<KromfacRun> {
    cfg.validate()?;
    let n = g_obs.node_count();
    let ranking = rank(&completion, cfg)?;
    let h = ranking.h();
    if h == 0 && !cfg.include_i0 {
        return Err(Error::Config("no influential nodes and i = 0 excluded from the search".into()));
    }
    let lambda = cfg.resolve_lambda(n);
    let sizes: Vec<usize> = if cfg.include_i0 { (0..=h).collect() } else { (1..=h).collect() };
    let rg = &completion.recovered;

    let results: Vec<Result<Candidate>> = in_pool(cfg.threads, || {
        sizes
            .par_iter()
            .map(|&i| {
                let g_i = rg.as_graph(i, &ranking.order)?;
                let detect = DetectConfig {
                    seed: detect_seed(cfg.detect.seed, i),
                    ..cfg.detect.clone()
                };
                let det = commun_det(&g_i, cfg.c, &detect)?;
                let delta = resolve_delta(cfg.delta, &g_i);
                let cover = hard_decision(&det.f, delta)?;
                Ok(Candidate {
                    i,
                    loss: det.loss,
                    reg_loss: regularized_loss(det.loss, i, lambda),
                    converged: det.converged,
                    delta,
                    f: det.f,
                    cover,
                })
            })
            .collect()
    })?;
    let candidates = results.into_iter().collect::<Result<Vec<_>>>()?;

    let mut trace = SearchTrace {
        lambda,
        h,
        trace: candidates
            .iter()
            .map(|c| SearchRecord {
                i: c.i,
                loss: c.loss,
                reg_loss: c.reg_loss,
                converged: c.converged,
            })
            .collect(),
        i_hat: 0,
        degenerate: h == 0,
        f_rows: 0,
        f_cols: cfg.c,
    };
    trace.i_hat = trace.argmin().expect("at least one candidate");
    let chosen = candidates.iter().find(|c| c.i == trace.i_hat).expect("argmin is a candidate");
    trace.f_rows = chosen.f.rows();
    let cover = chosen.cover.clone();
    Ok(KromfacRun {
        cover,
        trace,
        ranking,
        completion,
        candidates,
    })
}

/// Full pipeline on an observed graph.
pub fn kromfac(g_obs: &Graph, cfg: &KromfacConfig) -> Result<KromfacRun> {
    let completion = complete(g_obs, cfg)?;
    kromfac_with(g_obs, cfg, completion)
}

/// Detection on the observed graph alone.
pub fn baseline1(g_obs: &Graph, c: usize, delta: Threshold, detect: &DetectConfig) -> Result<Cover> {
    let det = commun_det(g_obs, c, detect)?;
    hard_decision(&det.f, resolve_delta(delta, g_obs))
}

/// Detection on the fully completed graph of an existing completion.
pub fn baseline2_with(cfg: &KromfacConfig, completion: &Completion) -> Result<Cover> {
    let rg = &completion.recovered;
    if rg.missing_count() == 0 {
        return baseline1(rg.base(), cfg.c, cfg.delta, &cfg.detect);
    }
    let full = rg.full_graph();
    let detect = DetectConfig {
        seed: detect_seed(cfg.detect.seed, rg.missing_count()),
        ..cfg.detect.clone()
    };
    let det = commun_det(&full, cfg.c, &detect)?;
    hard_decision(&det.f, resolve_delta(cfg.delta, &full))
}

/// Detection on the fully completed graph, all recovered nodes attached.
pub fn baseline2(g_obs: &Graph, cfg: &KromfacConfig) -> Result<Cover> {
    baseline2_with(cfg, &complete(g_obs, cfg)?)
}
