//! Command-line front end.
//!
//! Every subcommand reads an edge list, writes its artifacts into `--out`
//! and prints a one-line summary. All randomness derives from `--seed`; when
//! it is omitted a random seed is drawn and printed on standard error.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::community::Cover;
use crate::completion::RecoveredGraph;
use crate::error::{Error, Result};
use crate::eval::{nmi, run_experiment, sample, SampleSpec, Strategy};
use crate::graph::{load_edge_list, write_edge_list, LoadedGraph, NodeIdMap};
use crate::kron::ZeroSum;
use crate::pipeline::{baseline1, baseline2_with, complete, kromfac_with, rank, KromfacConfig, Threshold};
use crate::rng::derive_seed;

#[derive(Debug, Parser)]
#[command(name = "kromfac", version, about = "Overlapping community detection in partially observed networks")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Full pipeline: completion, ranking, regularized search, hard decision.
    Detect(PipelineCmd),
    /// Detection on the observed graph only.
    Baseline1(PipelineCmd),
    /// Detection on the fully completed graph.
    Baseline2(PipelineCmd),
    /// Fit the Kronecker model and realize the missing part.
    Complete(PipelineCmd),
    /// Draw an observable sample from a complete graph.
    Sample(SampleCmd),
    /// Score a predicted cover against a ground-truth cover.
    Eval(EvalCmd),
    /// Sample, run all three methods and report NMI per method.
    Experiment(ExperimentCmd),
}

#[derive(Debug, Args)]
struct Common {
    /// Edge list, one whitespace-separated pair per line.
    #[arg(long)]
    edges: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Master seed; a random one is chosen and printed when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the per-size search [default: all cores].
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct ModelFlags {
    /// JSON file with pipeline settings; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of communities C.
    #[arg(long, short = 'c')]
    communities: Option<usize>,
    /// Kronecker base dimension [default: 2].
    #[arg(long)]
    n0: Option<usize>,
    /// lambda = lambda_coef * N [default: 10].
    #[arg(long)]
    lambda_coef: Option<f64>,
    /// Absolute lambda, overriding lambda_coef.
    #[arg(long)]
    lambda: Option<f64>,
    /// Influence threshold or "auto" (half the maximum degree) [default: auto].
    #[arg(long)]
    epsilon: Option<Threshold>,
    /// Membership threshold or "auto" (from edge density) [default: auto].
    #[arg(long)]
    delta: Option<Threshold>,
    /// Leave i = 0 out of the search.
    #[arg(long)]
    exclude_i0: bool,
    /// EM iterations [default: 30].
    #[arg(long)]
    em_iters: Option<usize>,
    /// Placement proposals per E-step [default: 10 * (N + M)].
    #[arg(long)]
    mcmc_samples: Option<usize>,
    /// Gradient steps per M-step [default: 50].
    #[arg(long)]
    grad_steps: Option<usize>,
    /// Initial M-step step size [default: 1e-5].
    #[arg(long)]
    learning_rate: Option<f64>,
    /// All-pairs term evaluation: auto, exact or taylor [default: auto].
    #[arg(long, value_parser = parse_zero_sum)]
    zero_sum: Option<ZeroSum>,
    /// Detector stopping threshold [default: 1e-4 * (1 + |D|)].
    #[arg(long)]
    eta_detect: Option<f64>,
    /// Detector pass limit [default: 300].
    #[arg(long)]
    max_iters: Option<usize>,
    /// Detector initial row step [default: 1].
    #[arg(long)]
    step_init: Option<f64>,
}

#[derive(Debug, Args)]
struct PipelineCmd {
    #[command(flatten)]
    common: Common,
    /// Number of missing nodes M [default: 0].
    #[arg(long)]
    missing: Option<usize>,
    /// Ground-truth communities; when given the summary reports NMI.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[command(flatten)]
    model: ModelFlags,
}

#[derive(Debug, Args)]
struct SampleFlags {
    /// Sampling strategy: rn (random node) or ff (forest fire).
    #[arg(long, default_value = "rn")]
    strategy: Strategy,
    /// Retained node fraction.
    #[arg(long, default_value_t = 0.7)]
    fraction: f64,
    /// Forest-fire forward burning probability.
    #[arg(long, default_value_t = 0.7)]
    p_forward: f64,
}

#[derive(Debug, Args)]
struct SampleCmd {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    sample: SampleFlags,
}

#[derive(Debug, Args)]
struct EvalCmd {
    /// Edge list defining the node universe.
    #[arg(long)]
    edges: PathBuf,
    /// Ground-truth communities.
    #[arg(long)]
    truth: PathBuf,
    /// Predicted communities.
    #[arg(long)]
    predicted: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentCmd {
    #[command(flatten)]
    common: Common,
    /// Ground-truth communities of the complete graph.
    #[arg(long)]
    truth: PathBuf,
    #[command(flatten)]
    sample: SampleFlags,
    #[command(flatten)]
    model: ModelFlags,
}

fn parse_zero_sum(s: &str) -> std::result::Result<ZeroSum, String> {
    match s.to_ascii_lowercase().as_str() {
        "auto" => Ok(ZeroSum::Auto),
        "exact" => Ok(ZeroSum::Exact),
        "taylor" => Ok(ZeroSum::Taylor),
        _ => Err(format!("expected auto, exact or taylor, got {s:?}")),
    }
}

/// Failure classes mapped to exit codes.
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

fn require_file(path: &Path, flag: &str) -> Outcome<()> {
    if path.is_file() {
        Ok(())
    } else {
        usage(format!("{flag}: no such file {}", path.display()))
    }
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    })
}

fn load_graph(path: &Path) -> Result<LoadedGraph> {
    load_edge_list(BufReader::new(File::open(path)?))
}

fn load_cover(path: &Path, ids: &NodeIdMap) -> Result<Cover> {
    Ok(Cover::read(BufReader::new(File::open(path)?), ids)?.0)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_cover(dir: &Path, cover: &Cover, ids: &NodeIdMap) -> Result<()> {
    let mut w = create(dir, "cover.txt")?;
    cover.write(Some(ids), &mut w)?;
    w.flush()?;
    Ok(())
}

fn build_config(flags: &ModelFlags, missing: usize, seed: u64, threads: Option<usize>) -> Outcome<KromfacConfig> {
    let mut cfg = match &flags.config {
        Some(path) => {
            require_file(path, "--config")?;
            let text = fs::read_to_string(path).map_err(Error::from)?;
            serde_json::from_str::<KromfacConfig>(&text).map_err(Error::from)?
        }
        None => match flags.communities {
            Some(_) => KromfacConfig::default(),
            None => return usage("--communities is required"),
        },
    };
    cfg.reseed(seed);
    cfg.m = missing;
    cfg.threads = threads;
    if let Some(c) = flags.communities {
        cfg.c = c;
    }
    if let Some(v) = flags.n0 {
        cfg.n0 = v;
    }
    if let Some(v) = flags.lambda_coef {
        cfg.lambda_coef = v;
    }
    if flags.lambda.is_some() {
        cfg.lambda = flags.lambda;
    }
    if let Some(v) = flags.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = flags.delta {
        cfg.delta = v;
    }
    if flags.exclude_i0 {
        cfg.include_i0 = false;
    }
    if let Some(v) = flags.em_iters {
        cfg.em.em_iters = v;
    }
    if flags.mcmc_samples.is_some() {
        cfg.em.mcmc_samples = flags.mcmc_samples;
    }
    if let Some(v) = flags.grad_steps {
        cfg.em.grad_steps = v;
    }
    if let Some(v) = flags.learning_rate {
        cfg.em.learning_rate = v;
    }
    if let Some(v) = flags.zero_sum {
        cfg.em.zero_sum = v;
    }
    if flags.eta_detect.is_some() {
        cfg.detect.eta_detect = flags.eta_detect;
    }
    if let Some(v) = flags.max_iters {
        cfg.detect.max_iters = v;
    }
    if let Some(v) = flags.step_init {
        cfg.detect.step_init = v;
    }
    if let Err(Error::Config(msg)) = cfg.validate() {
        return usage(msg);
    }
    Ok(cfg)
}

fn sample_spec(flags: &SampleFlags, seed: u64) -> Outcome<SampleSpec> {
    let spec = SampleSpec {
        strategy: flags.strategy,
        fraction: flags.fraction,
        p_forward: flags.p_forward,
        seed: derive_seed(seed, "sample", 0),
    };
    if let Err(Error::Config(msg)) = spec.validate() {
        return usage(msg);
    }
    Ok(spec)
}

fn nmi_suffix(truth: Option<&Path>, cover: &Cover, ids: &NodeIdMap) -> Result<String> {
    match truth {
        Some(path) => {
            let truth = load_cover(path, ids)?;
            Ok(format!(" nmi={:.4}", nmi(&cover.restrict(ids.len()), &truth)?))
        }
        None => Ok(String::new()),
    }
}

#[derive(Clone, Copy)]
enum Method {
    Kromfac,
    Baseline1,
    Baseline2,
    Complete,
}

fn run_pipeline(cmd: &PipelineCmd, method: Method) -> Outcome<String> {
    require_file(&cmd.common.edges, "--edges")?;
    if let Some(t) = &cmd.truth {
        require_file(t, "--truth")?;
    }
    let seed = resolve_seed(cmd.common.seed);
    let cfg = build_config(&cmd.model, cmd.missing.unwrap_or(0), seed, cmd.common.threads)?;
    let loaded = load_graph(&cmd.common.edges)?;
    let (g, ids, out) = (&loaded.graph, &loaded.ids, &cmd.common.out);
    let truth = cmd.truth.as_deref();

    let line = match method {
        Method::Baseline1 => {
            let cover = baseline1(g, cfg.c, cfg.delta, &cfg.detect)?;
            write_cover(out, &cover, ids)?;
            format!("baseline1: communities={}{}", cover.len(), nmi_suffix(truth, &cover, ids)?)
        }
        Method::Baseline2 => {
            let completion = complete(g, &cfg)?;
            let cover = baseline2_with(&cfg, &completion)?;
            write_cover(out, &cover, ids)?;
            if let Some(fit) = &completion.fit {
                write_json(out, "model.json", &fit.model)?;
            }
            format!("baseline2: communities={}{}", cover.len(), nmi_suffix(truth, &cover, ids)?)
        }
        Method::Kromfac => {
            let completion = complete(g, &cfg)?;
            let run = kromfac_with(g, &cfg, completion)?;
            write_cover(out, &run.cover, ids)?;
            write_json(out, "trace.json", &run.trace)?;
            write_json(out, "ranking.json", &run.ranking)?;
            if let Some(fit) = &run.completion.fit {
                write_json(out, "model.json", &fit.model)?;
            }
            format!(
                "detect: communities={} h={} i_hat={}{}",
                run.cover.len(),
                run.trace.h,
                run.trace.i_hat,
                nmi_suffix(truth, &run.cover, ids)?
            )
        }
        Method::Complete => {
            let completion = complete(g, &cfg)?;
            let ranking = rank(&completion, &cfg)?;
            let rg: &RecoveredGraph = &completion.recovered;
            let mut w = create(out, "recovered.txt")?;
            rg.write(ids, &mut w)?;
            w.flush()?;
            write_json(out, "ranking.json", &ranking)?;
            if let Some(fit) = &completion.fit {
                write_json(out, "model.json", &fit.model)?;
            }
            format!(
                "complete: missing={} z1_edges={} z2_edges={} h={}",
                rg.missing_count(),
                rg.z1().len(),
                rg.z2().len(),
                ranking.h()
            )
        }
    };
    Ok(line)
}

fn run_sample(cmd: &SampleCmd) -> Outcome<String> {
    require_file(&cmd.common.edges, "--edges")?;
    let seed = resolve_seed(cmd.common.seed);
    let spec = sample_spec(&cmd.sample, seed)?;
    let loaded = load_graph(&cmd.common.edges)?;
    let (sub, kept) = sample(&loaded.graph, &spec)?;
    let ids = loaded.ids.restrict(&kept);
    let out = &cmd.common.out;
    let mut w = create(out, "observed.txt")?;
    write_edge_list(&sub, Some(&ids), &mut w)?;
    w.flush()?;
    let mut w = create(out, "kept.txt")?;
    for u in 0..ids.len() {
        writeln!(w, "{}", ids.external(u).expect("restricted id"))?;
    }
    w.flush()?;
    Ok(format!(
        "sample: strategy={} kept={} deleted={} edges={}",
        spec.strategy,
        kept.len(),
        loaded.graph.node_count() - kept.len(),
        sub.edge_count()
    ))
}

#[derive(Serialize)]
struct EvalReport {
    nmi: f64,
    universe: usize,
    truth_communities: usize,
    predicted_communities: usize,
}

fn run_eval(cmd: &EvalCmd) -> Outcome<String> {
    require_file(&cmd.edges, "--edges")?;
    require_file(&cmd.truth, "--truth")?;
    require_file(&cmd.predicted, "--predicted")?;
    let loaded = load_graph(&cmd.edges)?;
    let truth = load_cover(&cmd.truth, &loaded.ids)?;
    let predicted = load_cover(&cmd.predicted, &loaded.ids)?;
    let score = nmi(&predicted, &truth)?;
    write_json(
        &cmd.out,
        "eval.json",
        &EvalReport {
            nmi: score,
            universe: truth.universe,
            truth_communities: truth.len(),
            predicted_communities: predicted.len(),
        },
    )?;
    Ok(format!("eval: nmi={score:.4}"))
}

fn run_experiment_cmd(cmd: &ExperimentCmd) -> Outcome<String> {
    require_file(&cmd.common.edges, "--edges")?;
    require_file(&cmd.truth, "--truth")?;
    let seed = resolve_seed(cmd.common.seed);
    let spec = sample_spec(&cmd.sample, seed)?;
    let cfg = build_config(&cmd.model, 0, seed, cmd.common.threads)?;
    let loaded = load_graph(&cmd.common.edges)?;
    let truth = load_cover(&cmd.truth, &loaded.ids)?;
    let report = run_experiment(&loaded.graph, &truth, &spec, &cfg)?;
    let out = &cmd.common.out;
    write_json(out, "report.json", &report)?;
    let mut w = create(out, "curve.csv")?;
    report.write_curve_csv(&mut w)?;
    w.flush()?;
    Ok(format!(
        "experiment: kromfac={:.4} baseline1={:.4} baseline2={:.4} i_hat={}",
        report.nmi("kromfac"),
        report.nmi("baseline1"),
        report.nmi("baseline2"),
        report.trace.i_hat
    ))
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).format_timestamp(None).try_init();
}

/// Runs the command line `argv` (program name first). Returns the process
/// exit status: 0 on success, 1 on runtime failure, 2 on usage errors.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    let outcome = match &cli.command {
        Command::Detect(c) => run_pipeline(c, Method::Kromfac),
        Command::Baseline1(c) => run_pipeline(c, Method::Baseline1),
        Command::Baseline2(c) => run_pipeline(c, Method::Baseline2),
        Command::Complete(c) => run_pipeline(c, Method::Complete),
        Command::Sample(c) => run_sample(c),
        Command::Eval(c) => run_eval(c),
        Command::Experiment(c) => run_experiment_cmd(c),
    };
    match outcome {
        Ok(line) => {
            println!("{line}");
            0
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}
