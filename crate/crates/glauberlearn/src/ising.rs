//! Ising measure representation, conditional laws, exact inference for
//! small systems, and distances between models.
//!
//! The measure is mu(x) ∝ exp(0.5 x'Ax + h'x) on {-1,+1}^n with A symmetric
//! and zero on the diagonal. Exact enumeration is guarded at n <= 25.

use crate::{Error, Result};
use rand::Rng;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

/// Largest n for which full enumeration of {-1,+1}^n is permitted.
pub const ENUMERATION_GUARD: usize = 25;
/// Largest block size for which joint conditional enumeration is permitted.
pub const BLOCK_GUARD: usize = 20;

/// Logistic sigmoid, stable for large |z|.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Symmetric coupling matrix plus external field vector.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n: usize,
    couplings: Vec<f64>, // row-major n x n
    fields: Vec<f64>,
}

impl IsingModel {
    /// Builds a model, validating symmetry, zero diagonal, and finiteness.
    pub fn new(n: usize, couplings: Vec<f64>, fields: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidModel("n must be positive".into()));
        }
        if couplings.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "couplings has {} entries, expected {}",
                couplings.len(),
                n * n
            )));
        }
        if fields.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "fields has {} entries, expected {}",
                fields.len(),
                n
            )));
        }
        for i in 0..n {
            if couplings[i * n + i] != 0.0 {
                return Err(Error::InvalidModel(format!("nonzero diagonal at {i}")));
            }
            if !fields[i].is_finite() {
                return Err(Error::InvalidModel(format!("non-finite field at {i}")));
            }
            for j in 0..n {
                let a = couplings[i * n + j];
                if !a.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "non-finite coupling at ({i},{j})"
                    )));
                }
                if a != couplings[j * n + i] {
                    return Err(Error::InvalidModel(format!(
                        "asymmetric couplings at ({i},{j})"
                    )));
                }
            }
        }
        Ok(IsingModel {
            n,
            couplings,
            fields,
        })
    }

    /// Model with all couplings and fields zero.
    pub fn zero(n: usize) -> Self {
        IsingModel {
            n,
            couplings: vec![0.0; n * n],
            fields: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    /// Sets A_ij = A_ji = v (i != j).
    pub fn set_coupling(&mut self, i: usize, j: usize, v: f64) {
        assert!(i != j, "diagonal must stay zero");
        self.couplings[i * self.n + j] = v;
        self.couplings[j * self.n + i] = v;
    }

    pub fn field(&self, i: usize) -> f64 {
        self.fields[i]
    }

    pub fn set_field(&mut self, i: usize, v: f64) {
        self.fields[i] = v;
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    /// Row i of the coupling matrix.
    pub fn coupling_row(&self, i: usize) -> &[f64] {
        &self.couplings[i * self.n..(i + 1) * self.n]
    }

    /// l1-width: max_i sum_{j != i} |A_ij| + |h_i|.
    pub fn width(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let row: f64 = self.coupling_row(i).iter().map(|a| a.abs()).sum();
                row + self.fields[i].abs()
            })
            .fold(0.0, f64::max)
    }

    /// Max number of nonzero off-diagonal entries in a row.
    pub fn degree(&self) -> usize {
        (0..self.n)
            .map(|i| self.coupling_row(i).iter().filter(|a| **a != 0.0).count())
            .max()
            .unwrap_or(0)
    }

    /// Neighbors of site i: the j with A_ij != 0.
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.coupling_row(i)
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    /// Unordered support edges (i, j) with i < j and A_ij != 0.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.coupling(i, j) != 0.0 {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    /// 0.5 x'Ax + h'x, the log of the unnormalized mass.
    pub fn log_weight(&self, config: &SpinConfiguration) -> f64 {
        let x = config.spins();
        let mut s = 0.0;
        for i in 0..self.n {
            let xi = x[i] as f64;
            let row = self.coupling_row(i);
            let mut local = 0.0;
            for j in i + 1..self.n {
                local += row[j] * x[j] as f64;
            }
            s += xi * (local + self.fields[i]);
        }
        s
    }

    /// <A_i, x_{-i}> + h_i.
    pub fn local_field(&self, config: &SpinConfiguration, site: usize) -> f64 {
        let row = self.coupling_row(site);
        let mut s = self.fields[site];
        for (j, &xj) in config.spins().iter().enumerate() {
            if j != site {
                s += row[j] * xj as f64;
            }
        }
        s
    }

    /// Pr(X_site = +1 | X_{-site}) = sigma(2(<A_site, x_{-site}> + h_site)).
    pub fn conditional_probability(
        &self,
        config: &SpinConfiguration,
        site: usize,
    ) -> Result<f64> {
        if site >= self.n {
            return Err(Error::IndexOutOfRange(site, self.n));
        }
        if config.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "config length {} vs n={}",
                config.len(),
                self.n
            )));
        }
        Ok(sigmoid(2.0 * self.local_field(config, site)))
    }

    /// Joint conditional distribution of the block given the rest.
    ///
    /// Outcomes are indexed lexicographically over the block in its given
    /// order: the first block element is the most significant bit, with
    /// bit 1 meaning spin +1. Proportional to
    /// exp(0.5 x_S' A_SS x_S + x_S' A_{S,-S} x_{-S} + sum_{i in S} h_i x_i).
    pub fn conditional_block_distribution(
        &self,
        config: &SpinConfiguration,
        block: &[usize],
    ) -> Result<Vec<f64>> {
        if block.is_empty() {
            return Err(Error::EmptyBlock);
        }
        if block.len() > BLOCK_GUARD {
            return Err(Error::BlockTooLarge(block.len(), BLOCK_GUARD));
        }
        for &i in block {
            if i >= self.n {
                return Err(Error::IndexOutOfRange(i, self.n));
            }
        }
        let k = block.len();
        let in_block = {
            let mut m = vec![false; self.n];
            for &i in block {
                m[i] = true;
            }
            m
        };
        // External field on each block site from fixed spins plus h.
        let ext: Vec<f64> = block
            .iter()
            .map(|&i| {
                let row = self.coupling_row(i);
                let mut s = self.fields[i];
                for (j, &xj) in config.spins().iter().enumerate() {
                    if !in_block[j] {
                        s += row[j] * xj as f64;
                    }
                }
                s
            })
            .collect();
        let mut logw = vec![0.0f64; 1 << k];
        let mut spins = vec![0i8; k];
        for (idx, lw) in logw.iter_mut().enumerate() {
            for (b, s) in spins.iter_mut().enumerate() {
                *s = if idx >> (k - 1 - b) & 1 == 1 { 1 } else { -1 };
            }
            let mut e = 0.0;
            for a in 0..k {
                let xa = spins[a] as f64;
                e += xa * ext[a];
                let row = self.coupling_row(block[a]);
                for b in a + 1..k {
                    e += xa * row[block[b]] * spins[b] as f64;
                }
            }
            *lw = e;
        }
        Ok(normalize_log_weights(&mut logw).0)
    }
}

/// Length-n vector of spins, each exactly -1 or +1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfiguration {
    spins: Vec<i8>,
}

impl SpinConfiguration {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("spins must be +/-1".into()));
        }
        Ok(SpinConfiguration { spins })
    }

    /// All spins -1.
    pub fn all_minus(n: usize) -> Self {
        SpinConfiguration { spins: vec![-1; n] }
    }

    /// All spins +1.
    pub fn all_plus(n: usize) -> Self {
        SpinConfiguration { spins: vec![1; n] }
    }

    /// Uniform random configuration.
    pub fn uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        SpinConfiguration {
            spins: (0..n)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect(),
        }
    }

    /// Configuration from its lexicographic index: site 0 is the most
    /// significant bit, bit 1 means spin +1.
    pub fn from_index(index: usize, n: usize) -> Self {
        let spins = (0..n)
            .map(|i| if index >> (n - 1 - i) & 1 == 1 { 1 } else { -1 })
            .collect();
        SpinConfiguration { spins }
    }

    /// Inverse of `from_index`.
    pub fn index(&self) -> usize {
        let n = self.spins.len();
        self.spins
            .iter()
            .enumerate()
            .map(|(i, &s)| if s == 1 { 1usize << (n - 1 - i) } else { 0 })
            .sum()
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn get(&self, i: usize) -> i8 {
        self.spins[i]
    }

    pub fn set(&mut self, i: usize, s: i8) {
        assert!(s == 1 || s == -1);
        self.spins[i] = s;
    }

    /// Spins at every site except `site`, in order.
    pub fn context(&self, site: usize) -> Vec<i8> {
        self.spins
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != site)
            .map(|(_, &s)| s)
            .collect()
    }

    /// Renders as a string of '+' and '-' characters.
    pub fn to_pm_string(&self) -> String {
        self.spins
            .iter()
            .map(|&s| if s == 1 { '+' } else { '-' })
            .collect()
    }

    pub fn from_pm_string(s: &str) -> Result<Self> {
        let spins = s
            .chars()
            .map(|c| match c {
                '+' => Ok(1),
                '-' => Ok(-1),
                _ => Err(Error::Parse(format!("bad spin character '{c}'"))),
            })
            .collect::<Result<Vec<i8>>>()?;
        Ok(SpinConfiguration { spins })
    }
}

/// Full probability table over {-1,+1}^n, indexed lexicographically with
/// site 0 as the most significant bit (bit 1 = spin +1).
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    pub n: usize,
    pub probabilities: Vec<f64>,
    pub log_partition: f64,
}

/// Normalizes log-weights in place via log-sum-exp; returns the
/// probability vector and the log normalizer.
fn normalize_log_weights(logw: &mut [f64]) -> (Vec<f64>, f64) {
    let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for lw in logw.iter_mut() {
        *lw = (*lw - m).exp();
        total += *lw;
    }
    let log_z = m + total.ln();
    let probs = logw.iter().map(|w| w / total).collect();
    (probs, log_z)
}

/// Full enumeration of the measure; guarded at n <= 25.
pub fn exact_distribution(model: &IsingModel) -> Result<ExactDistribution> {
    let n = model.n();
    if n > ENUMERATION_GUARD {
        return Err(Error::TooManySites(n, ENUMERATION_GUARD));
    }
    let mut logw = vec![0.0f64; 1 << n];
    for (idx, lw) in logw.iter_mut().enumerate() {
        let config = SpinConfiguration::from_index(idx, n);
        *lw = model.log_weight(&config);
    }
    let (probabilities, log_partition) = normalize_log_weights(&mut logw);
    Ok(ExactDistribution {
        n,
        probabilities,
        log_partition,
    })
}

impl ExactDistribution {
    /// Draws one configuration by inverse CDF (linear scan).
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpinConfiguration {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (idx, p) in self.probabilities.iter().enumerate() {
            acc += p;
            if u < acc {
                return SpinConfiguration::from_index(idx, self.n);
            }
        }
        SpinConfiguration::from_index(self.probabilities.len() - 1, self.n)
    }

    /// Marginal mean of each spin.
    pub fn means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (idx, p) in self.probabilities.iter().enumerate() {
            for (i, mi) in m.iter_mut().enumerate() {
                let s = if idx >> (self.n - 1 - i) & 1 == 1 {
                    1.0
                } else {
                    -1.0
                };
                *mi += s * p;
            }
        }
        m
    }
}

/// Cumulative table for fast repeated exact sampling.
pub struct ExactSampler {
    n: usize,
    cdf: Vec<f64>,
}

impl ExactSampler {
    pub fn new(dist: &ExactDistribution) -> Self {
        let mut cdf = Vec::with_capacity(dist.probabilities.len());
        let mut acc = 0.0;
        for p in &dist.probabilities {
            acc += p;
            cdf.push(acc);
        }
        ExactSampler { n: dist.n, cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpinConfiguration {
        let u: f64 = rng.random();
        let idx = self.cdf.partition_point(|&c| c <= u);
        SpinConfiguration::from_index(idx.min(self.cdf.len() - 1), self.n)
    }
}

/// Convenience single draw; builds no table.
pub fn exact_sample<R: Rng + ?Sized>(
    dist: &ExactDistribution,
    rng: &mut R,
) -> SpinConfiguration {
    dist.sample(rng)
}

/// KL divergence E_P[log(P/Q)]; +infinity when q vanishes where p > 0.
pub fn kl_divergence(p: &ExactDistribution, q: &ExactDistribution) -> Result<f64> {
    if p.n != q.n {
        return Err(Error::DimensionMismatch(format!(
            "n mismatch: {} vs {}",
            p.n, q.n
        )));
    }
    let mut kl = 0.0;
    for (pi, qi) in p.probabilities.iter().zip(&q.probabilities) {
        if *pi > 0.0 {
            if *qi <= 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// Total variation distance, 0.5 * l1 of the tables.
pub fn tv_distance(p: &ExactDistribution, q: &ExactDistribution) -> Result<f64> {
    if p.n != q.n {
        return Err(Error::DimensionMismatch(format!(
            "n mismatch: {} vs {}",
            p.n, q.n
        )));
    }
    Ok(0.5
        * p.probabilities
            .iter()
            .zip(&q.probabilities)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Additive-perturbation KL bound: n^2 ||A-B||_inf + 2n ||h_A-h_B||_inf.
///
/// Always an upper bound on KL(mu_A || mu_B) for models on the same sites.
pub fn kl_upper_bound(a: &IsingModel, b: &IsingModel) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(format!(
            "n mismatch: {} vs {}",
            a.n(),
            b.n()
        )));
    }
    let n = a.n() as f64;
    let da = a
        .couplings()
        .iter()
        .zip(b.couplings())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let dh = a
        .fields()
        .iter()
        .zip(b.fields())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(n * n * da + 2.0 * n * dh)
}

/// TV bound from the same perturbation: n sqrt(||dA||_inf / 2) + sqrt(n ||dh||_inf).
pub fn tv_upper_bound(a: &IsingModel, b: &IsingModel) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch(format!(
            "n mismatch: {} vs {}",
            a.n(),
            b.n()
        )));
    }
    let n = a.n() as f64;
    let da = a
        .couplings()
        .iter()
        .zip(b.couplings())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let dh = a
        .fields()
        .iter()
        .zip(b.fields())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(n * (da / 2.0).sqrt() + (n * dh).sqrt())
}

fn fmt17(v: f64) -> String {
    // 17 significant digits round-trips every f64 exactly.
    let mut s = String::new();
    write!(s, "{v:.16e}").unwrap();
    s
}

/// Writes the line-oriented model format with a given header keyword.
fn write_model_with_header<W: Write>(
    model: &IsingModel,
    header: &str,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "{header} {}", model.n())?;
    for i in 0..model.n() {
        for j in i + 1..model.n() {
            let v = model.coupling(i, j);
            if v != 0.0 {
                writeln!(out, "J {} {} {}", i + 1, j + 1, fmt17(v))?;
            }
        }
    }
    for i in 0..model.n() {
        let v = model.field(i);
        if v != 0.0 {
            writeln!(out, "h {} {}", i + 1, fmt17(v))?;
        }
    }
    Ok(())
}

/// Writes the model file format: header `ising <n>`, then `J i j v` lines
/// (1-based, i < j, symmetric entry implied) and `h i v` lines. Zero
/// entries are omitted; `#` starts a comment.
pub fn write_model<W: Write>(model: &IsingModel, out: &mut W) -> Result<()> {
    write_model_with_header(model, "ising", out)
}

/// Estimate serialization: same body with header `ising-estimate <n>`.
pub fn write_estimate_model<W: Write>(model: &IsingModel, out: &mut W) -> Result<()> {
    write_model_with_header(model, "ising-estimate", out)
}

fn read_model_with_header<R: BufRead>(input: &mut R, headers: &[&str]) -> Result<IsingModel> {
    let mut n: Option<usize> = None;
    let mut couplings: Vec<f64> = Vec::new();
    let mut fields: Vec<f64> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        let err = |msg: String| Error::Parse(format!("line {}: {}", lineno + 1, msg));
        match toks[0] {
            kw if headers.contains(&kw) => {
                if n.is_some() {
                    return Err(err("duplicate header".into()));
                }
                if toks.len() != 2 {
                    return Err(err("header needs exactly one field".into()));
                }
                let nn: usize = toks[1]
                    .parse()
                    .map_err(|_| err(format!("bad site count '{}'", toks[1])))?;
                if nn == 0 {
                    return Err(err("site count must be positive".into()));
                }
                couplings = vec![0.0; nn * nn];
                fields = vec![0.0; nn];
                n = Some(nn);
            }
            "J" => {
                let nn = n.ok_or_else(|| err("J before header".into()))?;
                if toks.len() != 4 {
                    return Err(err("J needs i j value".into()));
                }
                let i: usize = toks[1]
                    .parse()
                    .map_err(|_| err(format!("bad index '{}'", toks[1])))?;
                let j: usize = toks[2]
                    .parse()
                    .map_err(|_| err(format!("bad index '{}'", toks[2])))?;
                let v: f64 = toks[3]
                    .parse()
                    .map_err(|_| err(format!("bad value '{}'", toks[3])))?;
                if i == 0 || j == 0 || i > nn || j > nn {
                    return Err(err(format!("index out of range in 'J {i} {j}'")));
                }
                if i >= j {
                    return Err(err("J requires i < j (1-based)".into()));
                }
                couplings[(i - 1) * nn + (j - 1)] = v;
                couplings[(j - 1) * nn + (i - 1)] = v;
            }
            "h" => {
                let nn = n.ok_or_else(|| err("h before header".into()))?;
                if toks.len() != 3 {
                    return Err(err("h needs i value".into()));
                }
                let i: usize = toks[1]
                    .parse()
                    .map_err(|_| err(format!("bad index '{}'", toks[1])))?;
                let v: f64 = toks[2]
                    .parse()
                    .map_err(|_| err(format!("bad value '{}'", toks[2])))?;
                if i == 0 || i > nn {
                    return Err(err(format!("index out of range in 'h {i}'")));
                }
                fields[i - 1] = v;
            }
            kw => return Err(err(format!("unknown keyword '{kw}'"))),
        }
    }
    let nn = n.ok_or_else(|| Error::Parse("missing header line".into()))?;
    IsingModel::new(nn, couplings, fields)
}

/// Parses the model file format (header `ising <n>`).
pub fn read_model<R: BufRead>(input: &mut R) -> Result<IsingModel> {
    read_model_with_header(input, &["ising"])
}

/// Parses either a model or estimate file (header `ising` or `ising-estimate`).
pub fn read_model_or_estimate<R: BufRead>(input: &mut R) -> Result<IsingModel> {
    read_model_with_header(input, &["ising", "ising-estimate"])
}

/// Worst observed conditional likelihood ratio relative to its bound.
///
/// For all disjoint nonempty S, T and outcomes s on S and t, t' on T, the
/// ratio mu(X_S = s | X_T = t) / mu(X_S = s | X_T = t') is at most
/// exp(4 sum_{i not in T, j in U} |A_ij|) where U collects the coordinates
/// of T where t and t' differ. Returns the max over all choices of
/// ratio / bound; values <= 1 mean the bound held everywhere. Exhaustive
/// enumeration, so n must be small.
pub fn likelihood_ratio_excess(model: &IsingModel) -> Result<f64> {
    let n = model.n();
    if n > 6 {
        return Err(Error::TooManySites(n, 6));
    }
    let d = exact_distribution(model)?;
    let full = (1usize << n) - 1;
    // sub-indices of a mask, i.e. all ways to set bits within it
    let subidx = |mask: usize| -> Vec<usize> {
        let mut out = vec![0usize];
        for b in 0..n {
            let bit = 1usize << b;
            if mask & bit != 0 {
                let more: Vec<usize> = out.iter().map(|v| v | bit).collect();
                out.extend(more);
            }
        }
        out
    };
    let mut worst = 0.0f64;
    for smask in 1usize..=full {
        for tmask in 1usize..=full {
            if smask & tmask != 0 {
                continue;
            }
            let cond = |s_idx: usize, t_idx: usize| -> f64 {
                let mut num = 0.0;
                let mut den = 0.0;
                for idx in 0..=full {
                    if idx & tmask != t_idx {
                        continue;
                    }
                    den += d.probabilities[idx];
                    if idx & smask == s_idx {
                        num += d.probabilities[idx];
                    }
                }
                num / den
            };
            for &t in &subidx(tmask) {
                for &t2 in &subidx(tmask) {
                    let umask = t ^ t2;
                    let mut mass = 0.0;
                    for i in 0..n {
                        if tmask >> (n - 1 - i) & 1 == 1 {
                            continue;
                        }
                        for j in 0..n {
                            if umask >> (n - 1 - j) & 1 == 1 {
                                mass += model.coupling(i, j).abs();
                            }
                        }
                    }
                    let bound = (4.0 * mass).exp();
                    for &s in &subidx(smask) {
                        let a = cond(s, t);
                        let b = cond(s, t2);
                        if b > 0.0 {
                            worst = worst.max(a / b / bound);
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

pub fn save_model(model: &IsingModel, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_model(model, &mut f)
}

pub fn load_model(path: &Path) -> Result<IsingModel> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_model_or_estimate(&mut f)
}
