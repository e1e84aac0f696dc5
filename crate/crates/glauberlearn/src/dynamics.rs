//! Sequential block dynamics engine: every sampling process that learning
//! data is extracted from.
//!
//! Each trajectory draws from two named ChaCha streams split from its
//! seed — one for block selection, one for spin updates — so schedules
//! that pick the same blocks produce identical spin randomness. In
//! particular an adversarial run with an empty corrupt set is
//! byte-identical to a plain Glauber run at the same seed.

use crate::ising::{IsingModel, SpinConfiguration, BLOCK_GUARD};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::{BufRead, Write};

/// Block-selection distribution for symmetric dynamics.
#[derive(Debug, Clone)]
pub enum SymmetricQ {
    /// Explicit weighted list of nonempty subsets; weights positive,
    /// normalized at validation.
    Weighted(Vec<(Vec<usize>, f64)>),
    /// Each site included independently with probability p, conditioned
    /// on the block being nonempty (realized by rejection).
    InclusionProb(f64),
}

/// How blocks are chosen at each step.
#[derive(Debug, Clone)]
pub enum BlockSchedule {
    /// One uniformly random site per step.
    Glauber,
    /// A uniformly random subset of exactly ell sites per step.
    EllBlock(usize),
    /// Blocks drawn i.i.d. from Q.
    Symmetric(SymmetricQ),
    /// Deterministic single-site schedule perm[t mod n].
    RoundRobin(Vec<usize>),
    /// The whole system every step: independent samples from the measure.
    FullResample,
}

impl BlockSchedule {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            BlockSchedule::Glauber => Ok(()),
            BlockSchedule::EllBlock(l) => {
                if *l < 1 || *l > n {
                    return Err(Error::InvalidSchedule(format!(
                        "block size {l} outside [1, {n}]"
                    )));
                }
                if *l > BLOCK_GUARD {
                    return Err(Error::BlockTooLarge(*l, BLOCK_GUARD));
                }
                Ok(())
            }
            BlockSchedule::Symmetric(SymmetricQ::Weighted(list)) => {
                if list.is_empty() {
                    return Err(Error::InvalidSchedule("empty subset list".into()));
                }
                let mut total = 0.0;
                for (block, w) in list {
                    if block.is_empty() {
                        return Err(Error::EmptyBlock);
                    }
                    if block.len() > BLOCK_GUARD {
                        return Err(Error::BlockTooLarge(block.len(), BLOCK_GUARD));
                    }
                    if block.iter().any(|&i| i >= n) {
                        return Err(Error::InvalidSchedule("block site out of range".into()));
                    }
                    if !(*w > 0.0) || !w.is_finite() {
                        return Err(Error::InvalidSchedule("weights must be positive".into()));
                    }
                    total += w;
                }
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidSchedule(format!(
                        "weights sum to {total}, expected 1"
                    )));
                }
                Ok(())
            }
            BlockSchedule::Symmetric(SymmetricQ::InclusionProb(p)) => {
                if !(*p > 0.0 && *p <= 1.0) {
                    return Err(Error::InvalidSchedule(format!(
                        "inclusion probability {p} outside (0, 1]"
                    )));
                }
                Ok(())
            }
            BlockSchedule::RoundRobin(perm) => {
                if perm.len() != n {
                    return Err(Error::InvalidSchedule(format!(
                        "permutation length {} vs n={n}",
                        perm.len()
                    )));
                }
                let mut seen = vec![false; n];
                for &i in perm {
                    if i >= n || seen[i] {
                        return Err(Error::InvalidSchedule(
                            "not a permutation of the sites".into(),
                        ));
                    }
                    seen[i] = true;
                }
                Ok(())
            }
            BlockSchedule::FullResample => {
                if n > BLOCK_GUARD {
                    return Err(Error::BlockTooLarge(n, BLOCK_GUARD));
                }
                Ok(())
            }
        }
    }

    /// One-token descriptor used in trajectory headers.
    pub fn descriptor(&self) -> String {
        match self {
            BlockSchedule::Glauber => "glauber".into(),
            BlockSchedule::EllBlock(l) => format!("block:{l}"),
            BlockSchedule::Symmetric(SymmetricQ::Weighted(_)) => "symmetric:weighted".into(),
            BlockSchedule::Symmetric(SymmetricQ::InclusionProb(p)) => {
                format!("symmetric:p={p}")
            }
            BlockSchedule::RoundRobin(perm) => {
                let body: Vec<String> = perm.iter().map(|i| i.to_string()).collect();
                format!("round-robin:{}", body.join(","))
            }
            BlockSchedule::FullResample => "full-resample".into(),
        }
    }

    fn select_block<R: Rng + ?Sized>(&self, n: usize, t: usize, rng: &mut R) -> Vec<usize> {
        match self {
            BlockSchedule::Glauber => vec![rng.random_range(0..n)],
            BlockSchedule::EllBlock(l) => {
                let mut block: Vec<usize> =
                    rand::seq::index::sample(rng, n, *l).into_iter().collect();
                block.sort_unstable();
                block
            }
            BlockSchedule::Symmetric(SymmetricQ::Weighted(list)) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (block, w) in list {
                    acc += w;
                    if u < acc {
                        return block.clone();
                    }
                }
                list.last().unwrap().0.clone()
            }
            BlockSchedule::Symmetric(SymmetricQ::InclusionProb(p)) => loop {
                let block: Vec<usize> =
                    (0..n).filter(|_| rng.random::<f64>() < *p).collect();
                if !block.is_empty() {
                    break block;
                }
            },
            BlockSchedule::RoundRobin(perm) => vec![perm[t % n]],
            BlockSchedule::FullResample => (0..n).collect(),
        }
    }
}

/// Initial configuration plus the ordered (block, configuration) steps.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub n: usize,
    pub initial: SpinConfiguration,
    pub steps: Vec<(Vec<usize>, SpinConfiguration)>,
    pub descriptor: String,
    pub seed: u64,
}

/// Jointly resamples the block coordinates from their conditional law,
/// leaving all other coordinates unchanged. Consumes exactly one uniform.
pub fn step<R: Rng + ?Sized>(
    model: &IsingModel,
    config: &SpinConfiguration,
    block: &[usize],
    rng: &mut R,
) -> Result<SpinConfiguration> {
    let dist = model.conditional_block_distribution(config, block)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut idx = dist.len() - 1;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            idx = i;
            break;
        }
    }
    let k = block.len();
    let mut out = config.clone();
    for (b, &site) in block.iter().enumerate() {
        out.set(site, if idx >> (k - 1 - b) & 1 == 1 { 1 } else { -1 });
    }
    Ok(out)
}

fn streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut blocks = ChaCha8Rng::seed_from_u64(seed);
    blocks.set_stream(0);
    let mut updates = ChaCha8Rng::seed_from_u64(seed);
    updates.set_stream(1);
    (blocks, updates)
}

/// Runs T steps of sequential block dynamics from X0.
pub fn run(
    model: &IsingModel,
    schedule: &BlockSchedule,
    x0: &SpinConfiguration,
    t: usize,
    seed: u64,
) -> Result<Trajectory> {
    let n = model.n();
    schedule.validate(n)?;
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial config length {} vs n={n}",
            x0.len()
        )));
    }
    let (mut rng_b, mut rng_u) = streams(seed);
    let mut config = x0.clone();
    let mut steps = Vec::with_capacity(t);
    for step_idx in 0..t {
        let block = schedule.select_block(n, step_idx, &mut rng_b);
        config = step(model, &config, &block, &mut rng_u)?;
        steps.push((block, config.clone()));
    }
    Ok(Trajectory {
        n,
        initial: x0.clone(),
        steps,
        descriptor: schedule.descriptor(),
        seed,
    })
}

/// Per-node regression examples (context = all other spins, label = the
/// node's spin), stored flat.
#[derive(Debug, Clone)]
pub struct NodeSampleSet {
    pub node: usize,
    /// Context dimension, n - 1.
    pub dim: usize,
    contexts: Vec<i8>,
    labels: Vec<i8>,
    pub source: String,
}

impl NodeSampleSet {
    pub fn new(node: usize, dim: usize, source: impl Into<String>) -> Self {
        NodeSampleSet {
            node,
            dim,
            contexts: Vec::new(),
            labels: Vec::new(),
            source: source.into(),
        }
    }

    pub fn push(&mut self, context: &[i8], label: i8) {
        debug_assert_eq!(context.len(), self.dim);
        debug_assert!(label == 1 || label == -1);
        self.contexts.extend_from_slice(context);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn context(&self, k: usize) -> &[i8] {
        &self.contexts[k * self.dim..(k + 1) * self.dim]
    }

    pub fn label(&self, k: usize) -> i8 {
        self.labels[k]
    }

    pub fn labels(&self) -> &[i8] {
        &self.labels
    }
}

/// Collects the regression examples for one node from a trajectory: one
/// example per step whose block contains the node, in order.
pub fn extract_node_samples(traj: &Trajectory, node: usize) -> Result<NodeSampleSet> {
    if node >= traj.n {
        return Err(Error::IndexOutOfRange(node, traj.n));
    }
    let mut set = NodeSampleSet::new(node, traj.n - 1, traj.descriptor.clone());
    for (block, config) in &traj.steps {
        if block.contains(&node) {
            set.push(&config.context(node), config.get(node));
        }
    }
    Ok(set)
}

/// Per-node sample sets from i.i.d. draws of a distribution sampler.
pub fn iid_node_samples<R: Rng + ?Sized>(
    dist: &crate::ising::ExactDistribution,
    t: usize,
    rng: &mut R,
) -> Vec<NodeSampleSet> {
    let n = dist.n;
    let sampler = crate::ising::ExactSampler::new(dist);
    let mut sets: Vec<NodeSampleSet> = (0..n)
        .map(|i| NodeSampleSet::new(i, n - 1, "iid"))
        .collect();
    for _ in 0..t {
        let x = sampler.sample(rng);
        for (i, set) in sets.iter_mut().enumerate() {
            set.push(&x.context(i), x.get(i));
        }
    }
    sets
}

/// M-regime sampling: for each of T rounds, draw a uniform configuration,
/// pick a uniform site, apply one Glauber update at that site, and record
/// the example for that site.
pub fn m_regime_samples<R: Rng + ?Sized>(
    model: &IsingModel,
    t: usize,
    rng: &mut R,
) -> Result<Vec<NodeSampleSet>> {
    if t == 0 {
        return Err(Error::InvalidParameter("T must be >= 1".into()));
    }
    let n = model.n();
    let mut sets: Vec<NodeSampleSet> = (0..n)
        .map(|i| NodeSampleSet::new(i, n - 1, "m-regime"))
        .collect();
    for _ in 0..t {
        let x = SpinConfiguration::uniform(n, rng);
        let site = rng.random_range(0..n);
        let x2 = step(model, &x, &[site], rng)?;
        sets[site].push(&x.context(site), x2.get(site));
    }
    Ok(sets)
}

/// M-regime sampling with exactly `per_node` examples for every node.
/// Same law per example as `m_regime_samples` (contexts are i.i.d.
/// uniform either way); the budget is just allocated deterministically.
pub fn m_regime_samples_per_node<R: Rng + ?Sized>(
    model: &IsingModel,
    per_node: usize,
    rng: &mut R,
) -> Result<Vec<NodeSampleSet>> {
    if per_node == 0 {
        return Err(Error::InvalidParameter("per_node must be >= 1".into()));
    }
    let n = model.n();
    let mut sets: Vec<NodeSampleSet> = (0..n)
        .map(|i| NodeSampleSet::new(i, n - 1, "m-regime"))
        .collect();
    for site in 0..n {
        for _ in 0..per_node {
            let x = SpinConfiguration::uniform(n, rng);
            let x2 = step(model, &x, &[site], rng)?;
            sets[site].push(&x.context(site), x2.get(site));
        }
    }
    Ok(sets)
}

/// Corrupt-node update rule; sees only the current spins of the node's
/// neighborhood, which enforces locality by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryPolicy {
    /// Always pushes toward the given spin.
    Stubborn(i8),
    /// Opposes the majority of the neighborhood.
    Contrarian,
    /// Fair coin.
    UniformNoise,
}

impl AdversaryPolicy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "stubborn" | "stubborn+" => Ok(AdversaryPolicy::Stubborn(1)),
            "stubborn-" => Ok(AdversaryPolicy::Stubborn(-1)),
            "contrarian" => Ok(AdversaryPolicy::Contrarian),
            "uniform-noise" => Ok(AdversaryPolicy::UniformNoise),
            _ => Err(Error::InvalidParameter(format!("unknown policy '{s}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AdversaryPolicy::Stubborn(1) => "stubborn+",
            AdversaryPolicy::Stubborn(_) => "stubborn-",
            AdversaryPolicy::Contrarian => "contrarian",
            AdversaryPolicy::UniformNoise => "uniform-noise",
        }
    }

    /// Raw probability of updating to +1, before smoothness clamping.
    fn raw_p_plus(&self, neighbor_spins: &[i8]) -> f64 {
        match self {
            AdversaryPolicy::Stubborn(s) => {
                if *s == 1 {
                    1.0
                } else {
                    0.0
                }
            }
            AdversaryPolicy::Contrarian => {
                let m: i64 = neighbor_spins.iter().map(|&s| s as i64).sum();
                match m.cmp(&0) {
                    std::cmp::Ordering::Greater => 0.0,
                    std::cmp::Ordering::Less => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                }
            }
            AdversaryPolicy::UniformNoise => 0.5,
        }
    }
}

/// Glauber dynamics where the corrupt sites update from the policy's
/// distribution, clamped so every outcome keeps mass at least gamma.
/// Honest sites update exactly as in `run` with the glauber schedule,
/// from the same two streams, so corrupt = {} reproduces that run.
pub fn adversarial_run(
    model: &IsingModel,
    corrupt: &[usize],
    gamma: f64,
    policy: AdversaryPolicy,
    x0: &SpinConfiguration,
    t: usize,
    seed: u64,
) -> Result<Trajectory> {
    let n = model.n();
    if !(gamma > 0.0 && gamma <= 0.5) {
        return Err(Error::InvalidParameter(format!(
            "gamma {gamma} outside (0, 1/2]"
        )));
    }
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial config length {} vs n={n}",
            x0.len()
        )));
    }
    let mut is_corrupt = vec![false; n];
    for &c in corrupt {
        if c >= n {
            return Err(Error::IndexOutOfRange(c, n));
        }
        is_corrupt[c] = true;
    }
    let descriptor = format!(
        "adversarial:gamma={gamma},policy={},corrupt={}",
        policy.name(),
        corrupt
            .iter()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let (mut rng_b, mut rng_u) = streams(seed);
    let mut config = x0.clone();
    let mut steps = Vec::with_capacity(t);
    for _ in 0..t {
        let site = rng_b.random_range(0..n);
        if is_corrupt[site] {
            let neighbors = model.neighbors(site);
            let spins: Vec<i8> = neighbors.iter().map(|&j| config.get(j)).collect();
            let p_plus = policy.raw_p_plus(&spins).clamp(gamma, 1.0 - gamma);
            // same inverse-CDF convention as `step`: low mass goes to -1
            let u: f64 = rng_u.random();
            config.set(site, if u < 1.0 - p_plus { -1 } else { 1 });
        } else {
            config = step(model, &config, &[site], &mut rng_u)?;
        }
        steps.push((vec![site], config.clone()));
    }
    Ok(Trajectory {
        n,
        initial: x0.clone(),
        steps,
        descriptor,
        seed,
    })
}

/// Exact single-site Glauber transition kernel, row-major 2^n x 2^n.
/// Row = current configuration index, column = next.
pub fn glauber_kernel(model: &IsingModel) -> Result<Vec<f64>> {
    let n = model.n();
    if n > 12 {
        return Err(Error::TooManySites(n, 12));
    }
    let size = 1usize << n;
    let mut kernel = vec![0.0; size * size];
    for from in 0..size {
        let x = SpinConfiguration::from_index(from, n);
        for site in 0..n {
            let p_plus = model.conditional_probability(&x, site)?;
            let mut plus = x.clone();
            plus.set(site, 1);
            let mut minus = x.clone();
            minus.set(site, -1);
            kernel[from * size + plus.index()] += p_plus / n as f64;
            kernel[from * size + minus.index()] += (1.0 - p_plus) / n as f64;
        }
    }
    Ok(kernel)
}

/// Monte-Carlo estimate of the good-event probability for one probe node
/// under a dynamics schedule.
///
/// An interval runs from just after one update of the probe node to its
/// next update, inclusive of the closing block. For each other site j the
/// joint event is: (a) j appeared in some block in the interval, and
/// (b) sum_k |A_jk| N_k <= 8 lambda, with N_k the number of interval
/// blocks containing k. Returns per-j (estimate, Monte-Carlo sigma).
pub fn good_event_probe(
    model: &IsingModel,
    schedule: &BlockSchedule,
    probe_node: usize,
    intervals: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let n = model.n();
    schedule.validate(n)?;
    if probe_node >= n {
        return Err(Error::IndexOutOfRange(probe_node, n));
    }
    if intervals == 0 {
        return Err(Error::InvalidParameter("intervals must be >= 1".into()));
    }
    let lambda = model.width();
    let threshold = 8.0 * lambda;
    let (mut rng_b, mut rng_u) = streams(seed);
    let mut config = SpinConfiguration::uniform(n, &mut rng_u);
    let mut hits = vec![0usize; n];
    let mut done = 0usize;
    let mut counts = vec![0usize; n];
    let mut started = false; // only count intervals that open with an update of the probe node
    let mut t = 0usize;
    while done < intervals {
        let block = schedule.select_block(n, t, &mut rng_b);
        t += 1;
        config = step(model, &config, &block, &mut rng_u)?;
        if started {
            for &k in &block {
                counts[k] += 1;
            }
        }
        if block.contains(&probe_node) {
            if started {
                for j in 0..n {
                    if j == probe_node {
                        continue;
                    }
                    let seen = counts[j] > 0;
                    let weighted: f64 = (0..n)
                        .filter(|&k| k != j)
                        .map(|k| model.coupling(j, k).abs() * counts[k] as f64)
                        .sum();
                    if seen && weighted <= threshold {
                        hits[j] += 1;
                    }
                }
                done += 1;
            }
            counts.iter_mut().for_each(|c| *c = 0);
            started = true;
        }
    }
    let m = intervals as f64;
    Ok((0..n)
        .filter(|&j| j != probe_node)
        .map(|j| {
            let p = hits[j] as f64 / m;
            (p, (p * (1.0 - p) / m).sqrt())
        })
        .collect())
}

/// Writes the trajectory dump format: header
/// `traj <n> <T> <schedule-descriptor> <seed>`, then the initial config
/// as a +/- string, then one `<t> <block members> | <config>` line per step.
pub fn write_trajectory<W: Write>(traj: &Trajectory, out: &mut W) -> Result<()> {
    writeln!(
        out,
        "traj {} {} {} {}",
        traj.n,
        traj.steps.len(),
        traj.descriptor,
        traj.seed
    )?;
    writeln!(out, "{}", traj.initial.to_pm_string())?;
    for (t, (block, config)) in traj.steps.iter().enumerate() {
        let members: Vec<String> = block.iter().map(|i| i.to_string()).collect();
        writeln!(out, "{t} {} | {}", members.join(" "), config.to_pm_string())?;
    }
    Ok(())
}

pub fn read_trajectory<R: BufRead>(input: &mut R) -> Result<Trajectory> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty trajectory file".into()))??;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 5 || toks[0] != "traj" {
        return Err(Error::Parse("bad trajectory header".into()));
    }
    let n: usize = toks[1]
        .parse()
        .map_err(|_| Error::Parse(format!("bad n '{}'", toks[1])))?;
    let t: usize = toks[2]
        .parse()
        .map_err(|_| Error::Parse(format!("bad T '{}'", toks[2])))?;
    let descriptor = toks[3].to_string();
    let seed: u64 = toks[4]
        .parse()
        .map_err(|_| Error::Parse(format!("bad seed '{}'", toks[4])))?;
    let initial_line = lines
        .next()
        .ok_or_else(|| Error::Parse("missing initial configuration".into()))??;
    let initial = SpinConfiguration::from_pm_string(initial_line.trim())?;
    if initial.len() != n {
        return Err(Error::Parse("initial configuration length mismatch".into()));
    }
    let mut steps = Vec::with_capacity(t);
    for (k, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (head, tail) = line
            .split_once('|')
            .ok_or_else(|| Error::Parse(format!("step {k}: missing '|'")))?;
        let mut head_toks = head.split_whitespace();
        let idx: usize = head_toks
            .next()
            .ok_or_else(|| Error::Parse(format!("step {k}: missing index")))?
            .parse()
            .map_err(|_| Error::Parse(format!("step {k}: bad index")))?;
        if idx != steps.len() {
            return Err(Error::Parse(format!(
                "step index {idx} out of order (expected {})",
                steps.len()
            )));
        }
        let block: Vec<usize> = head_toks
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("step {k}: bad block member '{s}'")))
            })
            .collect::<Result<_>>()?;
        if block.is_empty() {
            return Err(Error::EmptyBlock);
        }
        let config = SpinConfiguration::from_pm_string(tail.trim())?;
        if config.len() != n {
            return Err(Error::Parse(format!("step {k}: config length mismatch")));
        }
        steps.push((block, config));
    }
    if steps.len() != t {
        return Err(Error::Parse(format!(
            "expected {t} steps, found {}",
            steps.len()
        )));
    }
    Ok(Trajectory {
        n,
        initial,
        steps,
        descriptor,
        seed,
    })
}
