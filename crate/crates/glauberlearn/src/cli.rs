//! Experiment harness: generate models, run dynamics, learn, evaluate,
//! sweep parameter grids, and run diagnostic probes.
//!
//! Every command is reproducible: all randomness flows from one 64-bit
//! master seed through labeled stream derivation (see `derive_seed`), so
//! a (config, seed) pair determines every output byte. Exit codes:
//! 0 success, 2 configuration error, 3 guard violation, 4 numerical
//! non-convergence.

use crate::dynamics::{
    adversarial_run, extract_node_samples, good_event_probe, iid_node_samples,
    m_regime_samples, m_regime_samples_per_node, read_trajectory, run, write_trajectory,
    AdversaryPolicy, BlockSchedule, NodeSampleSet, SymmetricQ, Trajectory,
};
use crate::generators::{
    curie_weiss, random_bounded_degree, rs_fixed_point, sk_model, FieldSpec,
};
use crate::ising::{
    exact_distribution, likelihood_ratio_excess, load_model, read_model_or_estimate,
    write_estimate_model, write_model, ExactSampler, IsingModel, SpinConfiguration,
};
use crate::learner::{
    evaluate, learn, learn_honest, metatheorem_condition2_probe, sk_condition_check,
    tap_reference_level, tap_residual, Estimate, Provenance, RecoveryReport,
    REPORT_CSV_HEADER,
};
use crate::regression::{true_coefficients, SolverOptions};
use crate::{derive_seed, Error, Result};
use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Parser, Debug)]
#[command(name = "glauberlearn", version, about = "Ising model simulation and learning")]
pub struct Cli {
    /// Flat key-value config file; command-line flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Concurrency limit for sweeps and per-node solves
    /// (default: GLAUBERLEARN_JOBS, then all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a model file for a generated family.
    Generate(GenerateArgs),
    /// Run dynamics on a model and write trajectories or sample files.
    Sample(SampleArgs),
    /// Fit an estimate from trajectory or sample files.
    Learn(LearnArgs),
    /// Compare an estimate file against a truth model file.
    Evaluate(EvaluateArgs),
    /// Run a (T, beta, dynamics, seed) grid and collect a long-form CSV.
    Sweep(SweepArgs),
    /// Run statement-level diagnostic probes.
    Diagnose(DiagnoseArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct ModelArgs {
    /// Existing model file (alternative to a generated family).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Model family: curie-weiss | sk | regular | zero.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Degree for the regular family.
    #[arg(long)]
    pub d: Option<usize>,
    /// Edge strength for the regular family.
    #[arg(long)]
    pub strength: Option<f64>,
    /// Field kind: zero | constant | gaussian.
    #[arg(long)]
    pub field: Option<String>,
    #[arg(long = "field-mu")]
    pub field_mu: Option<f64>,
    #[arg(long = "field-sigma2")]
    pub field_sigma2: Option<f64>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output model file (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Model file to sample from.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// glauber | round-robin | block:<l> | symmetric:<p> | full-resample |
    /// iid | m-regime | adversarial.
    #[arg(long)]
    pub dynamics: Option<String>,
    /// Total step (or sample) count.
    #[arg(long)]
    pub steps: Option<usize>,
    /// For m-regime: exact per-node sample count instead of --steps.
    #[arg(long = "per-node")]
    pub per_node: Option<usize>,
    /// Round-robin permutation, comma-separated (default identity).
    #[arg(long)]
    pub permutation: Option<String>,
    /// Initial configuration: uniform | plus | minus.
    #[arg(long)]
    pub init: Option<String>,
    /// Adversarial smoothness parameter.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Adversary policy: stubborn+ | stubborn- | contrarian | uniform-noise.
    #[arg(long)]
    pub policy: Option<String>,
    /// Corrupt nodes, comma-separated.
    #[arg(long)]
    pub corrupt: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trajectory file, or file prefix for m-regime per-node samples.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    /// Trajectory file to learn from.
    #[arg(long)]
    pub traj: Option<PathBuf>,
    /// Per-node sample file prefix (as written by `sample --dynamics m-regime`).
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// l1 budget for each node's (weights, intercept) vector
    /// (default: 2 sqrt(n)).
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    /// Known corrupt nodes: fit honest rows only.
    #[arg(long)]
    pub corrupt: Option<String>,
    /// Truth model file; enables error metrics in the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Estimate file output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report CSV output (stdout when omitted).
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub estimate: Option<PathBuf>,
    /// Dynamics label for the report row.
    #[arg(long)]
    pub dynamics: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Long-form CSV output (overrides output.csv from the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DiagnoseArgs {
    /// ratios | good-event | tap | sk-conditions | condition2.
    #[arg(long)]
    pub probe: Option<String>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Dynamics for the good-event probe (glauber or block:<l>).
    #[arg(long)]
    pub dynamics: Option<String>,
    /// Sample count for sk-conditions.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses the flat key-value config format: `[section]` headers, `key = value`
/// lines, `#` comments. Keys are returned as `section.key`.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    let mut section = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("config line {}: expected key = value", lineno + 1))
        })?;
        let key = if section.is_empty() {
            k.trim().to_string()
        } else {
            format!("{section}.{}", k.trim())
        };
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

struct Settings {
    cfg: BTreeMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            Some(p) => parse_config_text(&std::fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        Ok(Settings { cfg })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.cfg.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Parse(format!("config key {key}: bad value '{v}'"))),
        }
    }

    /// Flag value if present, else the config value.
    fn resolve<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.resolve(flag, key)?
            .ok_or_else(|| Error::InvalidParameter(format!("missing required setting {key}")))
    }
}

fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad {what} entry '{tok}'")))
        })
        .collect()
}

fn field_spec(kind: Option<&str>, mu: Option<f64>, sigma2: Option<f64>) -> Result<FieldSpec> {
    match kind.unwrap_or("zero") {
        "zero" => Ok(FieldSpec::Zero),
        "constant" => Ok(FieldSpec::Constant(mu.ok_or_else(|| {
            Error::InvalidParameter("constant field needs --field-mu".into())
        })?)),
        "gaussian" => Ok(FieldSpec::Gaussian {
            mu: mu.unwrap_or(0.0),
            sigma2: sigma2.unwrap_or(0.0),
        }),
        other => Err(Error::InvalidParameter(format!(
            "unknown field kind '{other}'"
        ))),
    }
}

/// Builds a model from family flags; disorder comes from the "model"
/// stream of the master seed.
fn build_model(args: &ModelArgs, settings: &Settings, seed: u64) -> Result<IsingModel> {
    if let Some(path) = &args.model {
        return load_model(path);
    }
    let family: String = settings.require(args.family.clone(), "model.family")?;
    let n: usize = settings.require(args.n, "model.n")?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "model", 0));
    match family.as_str() {
        "zero" => Ok(IsingModel::zero(n)),
        "curie-weiss" => {
            let beta = settings.require(args.beta, "model.beta")?;
            curie_weiss(n, beta)
        }
        "sk" => {
            let beta = settings.require(args.beta, "model.beta")?;
            let kind: Option<String> = settings.resolve(args.field.clone(), "model.field")?;
            let mu = settings.resolve(args.field_mu, "model.field-mu")?;
            let sigma2 = settings.resolve(args.field_sigma2, "model.field-sigma2")?;
            sk_model(n, beta, field_spec(kind.as_deref(), mu, sigma2)?, &mut rng)
        }
        "regular" => {
            let d = settings.require(args.d, "model.d")?;
            let strength = settings.require(args.strength, "model.strength")?;
            random_bounded_degree(n, d, strength, &mut rng)
        }
        other => Err(Error::InvalidParameter(format!(
            "unknown model family '{other}'"
        ))),
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_generate(args: &GenerateArgs, settings: &Settings) -> Result<()> {
    let seed = settings.resolve(args.seed, "model.seed")?.unwrap_or(0);
    let model = build_model(&args.model, settings, seed)?;
    let mut out = open_out(args.out.as_deref())?;
    write_model(&model, &mut out)
}

fn parse_schedule(kind: &str, args: &SampleArgs, n: usize) -> Result<BlockSchedule> {
    match kind {
        "glauber" => Ok(BlockSchedule::Glauber),
        "round-robin" => {
            let perm = match &args.permutation {
                Some(s) => parse_list(s, "permutation")?,
                None => (0..n).collect(),
            };
            Ok(BlockSchedule::RoundRobin(perm))
        }
        "full-resample" => Ok(BlockSchedule::FullResample),
        k if k.starts_with("block:") => {
            let l: usize = k[6..]
                .parse()
                .map_err(|_| Error::InvalidSchedule(format!("bad block size in '{k}'")))?;
            Ok(BlockSchedule::EllBlock(l))
        }
        k if k.starts_with("symmetric:") => {
            let p: f64 = k[10..]
                .parse()
                .map_err(|_| Error::InvalidSchedule(format!("bad probability in '{k}'")))?;
            Ok(BlockSchedule::Symmetric(SymmetricQ::InclusionProb(p)))
        }
        other => Err(Error::InvalidSchedule(format!(
            "unknown dynamics '{other}'"
        ))),
    }
}

fn initial_configuration(kind: Option<&str>, n: usize, seed: u64) -> Result<SpinConfiguration> {
    match kind.unwrap_or("uniform") {
        "uniform" => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "init", 0));
            Ok(SpinConfiguration::uniform(n, &mut rng))
        }
        "plus" => Ok(SpinConfiguration::all_plus(n)),
        "minus" => Ok(SpinConfiguration::all_minus(n)),
        other => Err(Error::InvalidParameter(format!(
            "unknown initial configuration '{other}'"
        ))),
    }
}

/// Per-node sample file body: header
/// `samples <n> <node> <count> <source> <seed>`, then one
/// `<context +/- string> <label>` line per example.
pub fn write_node_samples<W: Write>(set: &NodeSampleSet, seed: u64, out: &mut W) -> Result<()> {
    writeln!(
        out,
        "samples {} {} {} {} {seed}",
        set.dim + 1,
        set.node,
        set.len(),
        set.source
    )?;
    for k in 0..set.len() {
        let ctx: String = set
            .context(k)
            .iter()
            .map(|&s| if s == 1 { '+' } else { '-' })
            .collect();
        writeln!(out, "{ctx} {}", if set.label(k) == 1 { '+' } else { '-' })?;
    }
    Ok(())
}

pub fn read_node_samples<R: BufRead>(input: &mut R) -> Result<(NodeSampleSet, u64)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty sample file".into()))??;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 6 || toks[0] != "samples" {
        return Err(Error::Parse("bad sample file header".into()));
    }
    let n: usize = toks[1]
        .parse()
        .map_err(|_| Error::Parse("bad n in sample header".into()))?;
    let node: usize = toks[2]
        .parse()
        .map_err(|_| Error::Parse("bad node in sample header".into()))?;
    let count: usize = toks[3]
        .parse()
        .map_err(|_| Error::Parse("bad count in sample header".into()))?;
    let source = toks[4].to_string();
    let seed: u64 = toks[5]
        .parse()
        .map_err(|_| Error::Parse("bad seed in sample header".into()))?;
    let mut set = NodeSampleSet::new(node, n - 1, source);
    for line in lines {
        let line = line?;
        let body = line.trim();
        if body.is_empty() {
            continue;
        }
        let (ctx, label) = body
            .rsplit_once(' ')
            .ok_or_else(|| Error::Parse("bad sample line".into()))?;
        let ctx = SpinConfiguration::from_pm_string(ctx.trim())?;
        if ctx.len() != n - 1 {
            return Err(Error::Parse("sample context length mismatch".into()));
        }
        let label = match label.trim() {
            "+" => 1,
            "-" => -1,
            other => return Err(Error::Parse(format!("bad label '{other}'"))),
        };
        set.push(ctx.spins(), label);
    }
    if set.len() != count {
        return Err(Error::Parse(format!(
            "expected {count} samples, found {}",
            set.len()
        )));
    }
    Ok((set, seed))
}

fn node_sample_path(prefix: &Path, node: usize) -> PathBuf {
    let mut name = prefix.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".node{node}"));
    prefix.with_file_name(name)
}

fn write_per_node_files(sets: &[NodeSampleSet], seed: u64, prefix: &Path) -> Result<()> {
    for set in sets {
        let path = node_sample_path(prefix, set.node);
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_node_samples(set, seed, &mut out)?;
    }
    Ok(())
}

/// i.i.d. sampling presented as a trajectory of full-system blocks.
fn iid_trajectory(model: &IsingModel, t: usize, seed: u64) -> Result<Trajectory> {
    let n = model.n();
    let dist = exact_distribution(model)?;
    let sampler = ExactSampler::new(&dist);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "iid", 0));
    let block: Vec<usize> = (0..n).collect();
    let initial = sampler.sample(&mut rng);
    let steps = (0..t)
        .map(|_| (block.clone(), sampler.sample(&mut rng)))
        .collect();
    Ok(Trajectory {
        n,
        initial,
        steps,
        descriptor: "iid".into(),
        seed,
    })
}

fn cmd_sample(args: &SampleArgs, settings: &Settings) -> Result<()> {
    let model_path: PathBuf = settings.require(args.model.clone(), "sample.model")?;
    let model = load_model(&model_path)?;
    let n = model.n();
    let dynamics: String = settings.require(args.dynamics.clone(), "sample.dynamics")?;
    let seed = settings.resolve(args.seed, "sample.seed")?.unwrap_or(0);

    if dynamics == "m-regime" {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "m-regime", 0));
        let sets = match settings.resolve(args.per_node, "sample.per-node")? {
            Some(k) => m_regime_samples_per_node(&model, k, &mut rng)?,
            None => {
                let t = settings.require(args.steps, "sample.steps")?;
                m_regime_samples(&model, t, &mut rng)?
            }
        };
        let prefix = args.out.clone().ok_or_else(|| {
            Error::InvalidParameter("m-regime sampling needs --out as a file prefix".into())
        })?;
        return write_per_node_files(&sets, seed, &prefix);
    }

    let t: usize = settings.require(args.steps, "sample.steps")?;
    let traj = if dynamics == "iid" {
        iid_trajectory(&model, t, seed)?
    } else if dynamics == "adversarial" {
        let gamma: f64 = settings.require(args.gamma, "sample.gamma")?;
        let policy_name: String = settings
            .resolve(args.policy.clone(), "sample.policy")?
            .unwrap_or_else(|| "stubborn+".into());
        let policy = AdversaryPolicy::parse(&policy_name)?;
        let corrupt: Vec<usize> = match settings.resolve(args.corrupt.clone(), "sample.corrupt")? {
            Some(s) => parse_list(&s, "corrupt set")?,
            None => Vec::new(),
        };
        let x0 = initial_configuration(args.init.as_deref(), n, seed)?;
        adversarial_run(&model, &corrupt, gamma, policy, &x0, t, seed)?
    } else {
        let schedule = parse_schedule(&dynamics, args, n)?;
        let x0 = initial_configuration(args.init.as_deref(), n, seed)?;
        run(&model, &schedule, &x0, t, seed)?
    };
    let mut out = open_out(args.out.as_deref())?;
    write_trajectory(&traj, &mut out)
}

fn load_sample_sets(args: &LearnArgs) -> Result<(Vec<NodeSampleSet>, String, usize, u64)> {
    if let Some(traj_path) = &args.traj {
        let mut f = std::io::BufReader::new(std::fs::File::open(traj_path)?);
        let traj = read_trajectory(&mut f)?;
        let sets: Vec<NodeSampleSet> = (0..traj.n)
            .map(|i| extract_node_samples(&traj, i))
            .collect::<Result<_>>()?;
        for set in &sets {
            if set.is_empty() {
                return Err(Error::EmptySampleSet(set.node));
            }
        }
        Ok((sets, traj.descriptor.clone(), traj.steps.len(), traj.seed))
    } else if let Some(prefix) = &args.samples {
        let first = node_sample_path(prefix, 0);
        let mut f = std::io::BufReader::new(std::fs::File::open(&first)?);
        let (set0, seed) = read_node_samples(&mut f)?;
        let n = set0.dim + 1;
        let mut sets = vec![set0];
        for node in 1..n {
            let path = node_sample_path(prefix, node);
            let mut f = std::io::BufReader::new(std::fs::File::open(&path)?);
            let (set, _) = read_node_samples(&mut f)?;
            if set.node != node {
                return Err(Error::Parse(format!(
                    "file {} holds node {}",
                    path.display(),
                    set.node
                )));
            }
            sets.push(set);
        }
        let t = sets.iter().map(|s| s.len()).sum();
        let source = sets[0].source.clone();
        Ok((sets, source, t, seed))
    } else {
        Err(Error::InvalidParameter(
            "learn needs --traj or --samples".into(),
        ))
    }
}

fn report_csv(report: &RecoveryReport) -> String {
    format!("{REPORT_CSV_HEADER}\n{}\n", report.csv_row())
}

fn cmd_learn(args: &LearnArgs, settings: &Settings) -> Result<()> {
    let (sets, dynamics, t, seed) = load_sample_sets(args)?;
    let n = sets.len();
    let radius = settings
        .resolve(args.radius, "learn.radius")?
        .unwrap_or(2.0 * (n as f64).sqrt());
    let mut options = SolverOptions::default();
    if let Some(tol) = settings.resolve(args.tol, "learn.tol")? {
        options.tol = tol;
    }
    if let Some(cap) = settings.resolve(args.max_iters, "learn.max-iters")? {
        options.max_iters = cap;
    }
    let estimate = match settings.resolve(args.corrupt.clone(), "learn.corrupt")? {
        Some(s) => {
            let corrupt: Vec<usize> = parse_list(&s, "corrupt set")?;
            learn_honest(&sets, &corrupt, radius, options, seed)?
        }
        None => learn(&sets, radius, options, seed)?,
    };
    if let Some(path) = &args.out {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write_estimate_model(&estimate.to_model()?, &mut f)?;
    }
    let mut report_out = open_out(args.report.as_deref())?;
    match &args.truth {
        Some(truth_path) => {
            let truth = load_model(truth_path)?;
            let report = evaluate(&truth, &estimate)?;
            write!(report_out, "{}", report_csv(&report))?;
        }
        None => {
            // no truth: keep the schema, leave the metric columns empty
            writeln!(report_out, "{REPORT_CSV_HEADER}")?;
            writeln!(report_out, "{n},{dynamics},{t},{radius},,,,,,,{seed}")?;
        }
    }
    Ok(())
}

fn estimate_from_file(path: &Path, dynamics: &str) -> Result<Estimate> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let model = read_model_or_estimate(&mut f)?;
    Ok(Estimate {
        n: model.n(),
        couplings_hat: model.couplings().to_vec(),
        fields_hat: model.fields().to_vec(),
        raw_couplings: model.couplings().to_vec(),
        per_node: vec![None; model.n()],
        provenance: Provenance {
            dynamics: dynamics.to_string(),
            t: 0,
            seed: 0,
            radius: 0.0,
        },
    })
}

fn cmd_evaluate(args: &EvaluateArgs, settings: &Settings) -> Result<()> {
    let truth_path: PathBuf = settings.require(args.truth.clone(), "evaluate.truth")?;
    let estimate_path: PathBuf = settings.require(args.estimate.clone(), "evaluate.estimate")?;
    let truth = load_model(&truth_path)?;
    let dynamics = args.dynamics.clone().unwrap_or_else(|| "file".into());
    let estimate = estimate_from_file(&estimate_path, &dynamics)?;
    let report = evaluate(&truth, &estimate)?;
    let mut out = open_out(args.out.as_deref())?;
    write!(out, "{}", report_csv(&report))?;
    Ok(())
}

/// One sweep cell: build the model for this (beta, seed), generate data
/// for this (dynamics, T), learn, and evaluate against the truth.
fn sweep_cell(
    model_args: &ModelArgs,
    settings: &Settings,
    t: usize,
    beta: Option<f64>,
    dynamics: &str,
    seed: u64,
    radius: Option<f64>,
    options: SolverOptions,
) -> Result<RecoveryReport> {
    let mut margs = model_args.clone();
    if beta.is_some() {
        margs.beta = beta;
    }
    let model = build_model(&margs, settings, seed)?;
    let n = model.n();
    let sets: Vec<NodeSampleSet> = match dynamics {
        "iid" => {
            let dist = exact_distribution(&model)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "data", 0));
            iid_node_samples(&dist, t, &mut rng)
        }
        "m-regime" => {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "data", 0));
            m_regime_samples(&model, t, &mut rng)?
        }
        other => {
            let sample_args = SampleArgs {
                model: None,
                dynamics: None,
                steps: None,
                per_node: None,
                permutation: None,
                init: None,
                gamma: None,
                policy: None,
                corrupt: None,
                seed: None,
                out: None,
            };
            let schedule = parse_schedule(other, &sample_args, n)?;
            let x0 = initial_configuration(None, n, seed)?;
            let traj = run(&model, &schedule, &x0, t, derive_seed(seed, "chain", 0))?;
            let sets: Vec<NodeSampleSet> = (0..n)
                .map(|i| extract_node_samples(&traj, i))
                .collect::<Result<_>>()?;
            sets
        }
    };
    for set in &sets {
        if set.is_empty() {
            return Err(Error::EmptySampleSet(set.node));
        }
    }
    let radius = radius.unwrap_or(2.0 * (n as f64).sqrt());
    let estimate = learn(&sets, radius, options, seed)?;
    let mut report = evaluate(&model, &estimate)?;
    report.dynamics = dynamics.to_string();
    report.t = t;
    report.seed = seed;
    Ok(report)
}

/// Header of the sweep CSV: a cell key column followed by the report
/// columns.
pub const SWEEP_CSV_HEADER: &str =
    "cell,n,dynamics,T,radius,linf_A,linf_h,precision,recall,tv_exact,kl_bound,seed";

fn cmd_sweep(args: &SweepArgs, settings: &Settings, model_args: &ModelArgs) -> Result<()> {
    let csv_path: PathBuf = settings.require(args.out.clone(), "output.csv")?;
    let seeds: Vec<u64> = parse_list(
        &settings.require::<String>(None, "sweep.seeds")?,
        "sweep.seeds",
    )?;
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("sweep.seeds is empty".into()));
    }
    let ts: Vec<usize> = match settings.get::<String>("sweep.T")? {
        Some(s) => parse_list(&s, "sweep.T")?,
        None => vec![settings.require(None, "dynamics.steps")?],
    };
    let betas: Vec<Option<f64>> = match settings.get::<String>("sweep.beta")? {
        Some(s) => parse_list::<f64>(&s, "sweep.beta")?
            .into_iter()
            .map(Some)
            .collect(),
        None => vec![None],
    };
    let dynamics: Vec<String> = match settings.get::<String>("sweep.dynamics")? {
        Some(s) => s.split(',').map(|v| v.trim().to_string()).collect(),
        None => vec![settings.require(None, "dynamics.kind")?],
    };
    let radius: Option<f64> = settings.get("learn.radius")?;
    let mut options = SolverOptions::default();
    if let Some(tol) = settings.get("learn.tol")? {
        options.tol = tol;
    }
    if let Some(cap) = settings.get("learn.max-iters")? {
        options.max_iters = cap;
    }

    // resume: keep rows whose cell key already exists
    let mut rows: BTreeMap<String, String> = BTreeMap::new();
    if csv_path.exists() {
        for line in std::fs::read_to_string(&csv_path)?.lines().skip(1) {
            if let Some((key, _)) = line.split_once(',') {
                rows.insert(key.to_string(), line.to_string());
            }
        }
    }

    let mut cells = Vec::new();
    for t in &ts {
        for beta in &betas {
            for dyn_kind in &dynamics {
                for seed in &seeds {
                    let key = match beta {
                        Some(b) => format!("T={t};beta={b};dynamics={dyn_kind};seed={seed}"),
                        None => format!("T={t};dynamics={dyn_kind};seed={seed}"),
                    };
                    if !rows.contains_key(&key) {
                        cells.push((key, *t, *beta, dyn_kind.clone(), *seed));
                    }
                }
            }
        }
    }

    let computed: Vec<(String, String)> = cells
        .par_iter()
        .map(|(key, t, beta, dyn_kind, seed)| {
            sweep_cell(
                model_args, settings, *t, *beta, dyn_kind, *seed, radius, options,
            )
            .map(|report| (key.clone(), format!("{key},{}", report.csv_row())))
        })
        .collect::<Result<_>>()?;
    for (key, row) in computed {
        rows.insert(key, row);
    }

    let mut out = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows.values() {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

fn cmd_diagnose(args: &DiagnoseArgs, settings: &Settings) -> Result<()> {
    let probe: String = settings.require(args.probe.clone(), "diagnose.probe")?;
    let seed = settings.resolve(args.seed, "diagnose.seed")?.unwrap_or(0);
    let mut rows = vec!["probe,detail,value,reference".to_string()];
    match probe.as_str() {
        "ratios" => {
            let model = build_model(&args.model, settings, seed)?;
            let excess = likelihood_ratio_excess(&model)?;
            rows.push(format!("ratios,max_ratio_over_bound,{excess:.12},1"));
        }
        "good-event" => {
            let model = build_model(&args.model, settings, seed)?;
            let n = model.n();
            let dynamics = args.dynamics.clone().unwrap_or_else(|| "glauber".into());
            let sample_args = SampleArgs {
                model: None,
                dynamics: None,
                steps: None,
                per_node: None,
                permutation: None,
                init: None,
                gamma: None,
                policy: None,
                corrupt: None,
                seed: None,
                out: None,
            };
            let schedule = parse_schedule(&dynamics, &sample_args, n)?;
            let intervals = settings.resolve(args.t, "diagnose.intervals")?.unwrap_or(10_000);
            let probes = good_event_probe(
                &model,
                &schedule,
                n - 1,
                intervals,
                derive_seed(seed, "good-event", 0),
            )?;
            for (j, (p, sigma)) in probes.iter().enumerate() {
                rows.push(format!(
                    "good-event,j={j},{p:.6},{:.6}",
                    0.25 - 3.0 * sigma
                ));
            }
        }
        "tap" => {
            let model = build_model(&args.model, settings, seed)?;
            let n = model.n();
            let beta: f64 = settings.require(args.model.beta, "model.beta")?;
            let mu = settings
                .resolve(args.model.field_mu, "model.field-mu")?
                .unwrap_or(0.0);
            let sigma2 = settings
                .resolve(args.model.field_sigma2, "model.field-sigma2")?
                .unwrap_or(0.0);
            let q = if beta == 0.0 && mu == 0.0 && sigma2 == 0.0 {
                0.0
            } else {
                rs_fixed_point(beta, mu, sigma2, 1e-10)?.q
            };
            let means = exact_distribution(&model)?.means();
            let (t, max) = tap_residual(&model, beta, q, &means)?;
            let reference = tap_reference_level(beta, n, 0.1);
            for (i, ti) in t.iter().enumerate() {
                rows.push(format!("tap,site={i},{ti:.9},{reference:.9}"));
            }
            rows.push(format!("tap,max_abs,{max:.9},{reference:.9}"));
        }
        "sk-conditions" => {
            let model = build_model(&args.model, settings, seed)?;
            let t = settings.resolve(args.t, "diagnose.samples")?.unwrap_or(10_000);
            let dist = exact_distribution(&model)?;
            let sampler = ExactSampler::new(&dist);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "data", 0));
            let samples: Vec<SpinConfiguration> =
                (0..t).map(|_| sampler.sample(&mut rng)).collect();
            let report = sk_condition_check(&model, &samples)?;
            rows.push(format!(
                "sk-conditions,max_row_l2,{:.9},",
                report.max_row_l2
            ));
            rows.push(format!(
                "sk-conditions,covariance_opnorm,{:.9},",
                report.covariance_opnorm
            ));
            rows.push(format!("sk-conditions,level,{:.9},", report.level));
            for (j, f) in report.fractions.iter().enumerate() {
                rows.push(format!("sk-conditions,fraction_node={j},{f:.6},0.75"));
            }
        }
        "condition2" => {
            let model = build_model(&args.model, settings, seed)?;
            let n = model.n();
            let node = n - 1;
            let (wstar, hstar) = true_coefficients(&model, node);
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "grid", 0));
            let grid: Vec<(Vec<f64>, f64)> = (0..10)
                .map(|_| {
                    let w: Vec<f64> = wstar
                        .iter()
                        .map(|v| v + rng.random_range(-1.0..1.0))
                        .collect();
                    (w, hstar + rng.random_range(-0.3..0.3))
                })
                .collect();
            let (table, c) = metatheorem_condition2_probe(&model, node, &grid, None)?;
            for (k, row) in table.iter().enumerate() {
                rows.push(format!(
                    "condition2,point={k},{:.9},{:.9}",
                    row.gap, row.bound
                ));
            }
            rows.push(format!("condition2,constant_c,{c:.9},0"));
        }
        other => {
            return Err(Error::InvalidParameter(format!("unknown probe '{other}'")));
        }
    }
    let mut out = open_out(args.out.as_deref())?;
    for row in rows {
        writeln!(out, "{row}")?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    let settings = Settings::load(cli.config.as_deref())?;
    let jobs = match cli.jobs {
        Some(j) => Some(j),
        None => match std::env::var("GLAUBERLEARN_JOBS") {
            Ok(v) => Some(v.parse().map_err(|_| {
                Error::InvalidParameter(format!("bad GLAUBERLEARN_JOBS value '{v}'"))
            })?),
            Err(_) => settings.get("jobs")?,
        },
    };
    let dispatch = || -> Result<()> {
        match &cli.command {
            Command::Generate(args) => cmd_generate(args, &settings),
            Command::Sample(args) => cmd_sample(args, &settings),
            Command::Learn(args) => cmd_learn(args, &settings),
            Command::Evaluate(args) => cmd_evaluate(args, &settings),
            Command::Sweep(args) => {
                cmd_sweep(args, &settings, &ModelArgs::default())
            }
            Command::Diagnose(args) => cmd_diagnose(args, &settings),
        }
    };
    match jobs {
        Some(j) if j >= 1 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            pool.install(dispatch)
        }
        Some(_) => Err(Error::InvalidParameter("--jobs must be >= 1".into())),
        None => dispatch(),
    }
}

/// Binary entry point: parse, run, map errors to exit codes.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        let text = "# comment\njobs = 2\n[model]\nfamily = sk\nn = 20 # inline\n[sweep]\nseeds = 1,2,3\n";
        let cfg = parse_config_text(text).unwrap();
        assert_eq!(cfg.get("jobs").unwrap(), "2");
        assert_eq!(cfg.get("model.family").unwrap(), "sk");
        assert_eq!(cfg.get("model.n").unwrap(), "20");
        assert_eq!(cfg.get("sweep.seeds").unwrap(), "1,2,3");
        assert!(parse_config_text("key_without_value\n").is_err());
    }

    #[test]
    fn list_parsing() {
        let v: Vec<usize> = parse_list("1, 2,3", "test").unwrap();
        assert_eq!(v, vec![1, 2, 3]);
        assert!(parse_list::<usize>("1,x", "test").is_err());
    }

    #[test]
    fn schedule_parsing() {
        let args = SampleArgs {
            model: None,
            dynamics: None,
            steps: None,
            per_node: None,
            permutation: None,
            init: None,
            gamma: None,
            policy: None,
            corrupt: None,
            seed: None,
            out: None,
        };
        assert!(matches!(
            parse_schedule("glauber", &args, 4).unwrap(),
            BlockSchedule::Glauber
        ));
        assert!(matches!(
            parse_schedule("block:2", &args, 4).unwrap(),
            BlockSchedule::EllBlock(2)
        ));
        assert!(matches!(
            parse_schedule("symmetric:0.3", &args, 4).unwrap(),
            BlockSchedule::Symmetric(SymmetricQ::InclusionProb(_))
        ));
        assert!(parse_schedule("warp", &args, 4).is_err());
    }

    #[test]
    fn node_samples_round_trip() {
        let mut set = NodeSampleSet::new(1, 3, "m-regime");
        set.push(&[1, -1, 1], -1);
        set.push(&[-1, -1, 1], 1);
        let mut buf = Vec::new();
        write_node_samples(&set, 9, &mut buf).unwrap();
        let (back, seed) = read_node_samples(&mut &buf[..]).unwrap();
        assert_eq!(seed, 9);
        assert_eq!(back.node, 1);
        assert_eq!(back.len(), 2);
        assert_eq!(back.context(0), &[1, -1, 1]);
        assert_eq!(back.label(0), -1);
        assert_eq!(back.label(1), 1);
    }

    #[test]
    fn field_spec_parsing() {
        assert_eq!(field_spec(None, None, None).unwrap(), FieldSpec::Zero);
        assert_eq!(
            field_spec(Some("constant"), Some(0.3), None).unwrap(),
            FieldSpec::Constant(0.3)
        );
        assert!(field_spec(Some("constant"), None, None).is_err());
        assert!(field_spec(Some("weird"), None, None).is_err());
    }
}
