//! Model families (GOE/SK, Curie-Weiss, random regular graphs, Gaussian
//! fields) and the replica-symmetric scalar solvers.

use crate::ising::{IsingModel, SpinConfiguration};
use crate::{Error, Result};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// External field law: zero, constant, or i.i.d. Gaussian per site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldSpec {
    Zero,
    Constant(f64),
    Gaussian { mu: f64, sigma2: f64 },
}

impl FieldSpec {
    pub fn validate(&self) -> Result<()> {
        if let FieldSpec::Gaussian { sigma2, .. } = self {
            if *sigma2 < 0.0 {
                return Err(Error::InvalidParameter("sigma2 must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn draw<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match *self {
            FieldSpec::Zero => vec![0.0; n],
            FieldSpec::Constant(mu) => vec![mu; n],
            FieldSpec::Gaussian { mu, sigma2 } => {
                let normal = Normal::new(mu, sigma2.sqrt())
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                (0..n).map(|_| normal.sample(rng)).collect()
            }
        })
    }
}

/// Symmetric matrix with zero diagonal and i.i.d. N(0, 1/n) entries above
/// the diagonal, mirrored below. Row-major n x n.
pub fn goe_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParameter("goe_matrix needs n >= 2".into()));
    }
    let normal = Normal::new(0.0, (1.0 / n as f64).sqrt()).unwrap();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = normal.sample(rng);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    Ok(a)
}

/// Sherrington-Kirkpatrick model: couplings beta * GOE, fields per spec.
pub fn sk_model<R: Rng + ?Sized>(
    n: usize,
    beta: f64,
    field: FieldSpec,
    rng: &mut R,
) -> Result<IsingModel> {
    if beta < 0.0 {
        return Err(Error::InvalidParameter("beta must be >= 0".into()));
    }
    let mut a = goe_matrix(n, rng)?;
    for v in &mut a {
        *v *= beta;
    }
    let h = field.draw(n, rng)?;
    IsingModel::new(n, a, h)
}

/// Complete graph with A_ij = beta / n, zero field.
pub fn curie_weiss(n: usize, beta: f64) -> Result<IsingModel> {
    if n < 2 {
        return Err(Error::InvalidParameter("curie_weiss needs n >= 2".into()));
    }
    let mut m = IsingModel::zero(n);
    for i in 0..n {
        for j in i + 1..n {
            m.set_coupling(i, j, beta / n as f64);
        }
    }
    Ok(m)
}

/// Attempts a uniform d-regular graph by the pairing model: reject draws
/// with self-loops or multi-edges, retry a bounded number of times.
fn pairing_regular<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Option<Vec<(usize, usize)>> {
    'retry: for _ in 0..1000 {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(d)).collect();
        stubs.shuffle(rng);
        let mut seen = std::collections::HashSet::new();
        let mut edges = Vec::with_capacity(n * d / 2);
        for pair in stubs.chunks(2) {
            let (u, v) = (pair[0], pair[1]);
            if u == v {
                continue 'retry;
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                continue 'retry;
            }
            edges.push(key);
        }
        return Some(edges);
    }
    None
}

/// Deterministic d-regular fallback: circulant graph linking each vertex
/// to its k nearest ring neighbors on each side, plus the antipodal
/// vertex when d is odd (n even in that case since d*n is even).
fn circulant_regular(n: usize, d: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for off in 1..=d / 2 {
        for v in 0..n {
            let u = (v + off) % n;
            edges.push((v.min(u), v.max(u)));
        }
    }
    if d % 2 == 1 {
        for v in 0..n / 2 {
            edges.push((v, v + n / 2));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

/// Random d-regular graph with each edge weight uniform on
/// {-strength, +strength}; zero field.
pub fn random_bounded_degree<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    strength: f64,
    rng: &mut R,
) -> Result<IsingModel> {
    if d >= n || (d * n) % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "no d-regular graph with n={n}, d={d}"
        )));
    }
    let mut m = IsingModel::zero(n);
    if d == 0 {
        return Ok(m);
    }
    let edges = pairing_regular(n, d, rng).unwrap_or_else(|| circulant_regular(n, d));
    for (u, v) in edges {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        m.set_coupling(u, v, sign * strength);
    }
    Ok(m)
}

/// Gauss-Hermite rule: nodes and weights for integrating against
/// exp(-x^2) dx. Newton iteration on the orthonormal Hermite recurrence.
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Default node count; the integrands here are smooth and bounded, so 41
/// nodes leaves quadrature error far below solver tolerances.
pub const GH_NODES: usize = 41;

impl GaussHermite {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let eps = 3e-14;
        let pim4 = std::f64::consts::PI.powf(-0.25);
        let m = (n + 1) / 2;
        let nf = n as f64;
        let mut z = 0.0f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                let mut p1 = pim4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= eps {
                    break;
                }
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pp * pp);
            weights[n - 1 - i] = weights[i];
        }
        GaussHermite { nodes, weights }
    }

    /// E[f(X)] for X ~ N(mu, sigma^2); collapses to f(mu) when sigma = 0.
    pub fn expect_normal(&self, mu: f64, sigma: f64, f: impl Fn(f64) -> f64) -> f64 {
        if sigma == 0.0 {
            return f(mu);
        }
        let c = std::f64::consts::PI.sqrt().recip();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mu + sigma * std::f64::consts::SQRT_2 * x))
            .sum::<f64>()
            * c
    }
}

/// Replica-symmetric overlap solution of q = E_{h,z}[tanh^2(beta z sqrt(q) + h)].
#[derive(Debug, Clone)]
pub struct RSFixedPoint {
    pub beta: f64,
    pub mu: f64,
    pub sigma2: f64,
    pub q: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn rs_map(gh: &GaussHermite, beta: f64, mu: f64, sigma2: f64, q: f64) -> f64 {
    let a = beta * q.max(0.0).sqrt();
    gh.expect_normal(mu, sigma2.sqrt(), |h| {
        gh.expect_normal(0.0, 1.0, |z| {
            let t = (a * z + h).tanh();
            t * t
        })
    })
}

/// Damped fixed-point iteration for the RS overlap q; damping 0.5,
/// iteration cap 10000, Gauss-Hermite quadrature with 41 nodes per
/// Gaussian.
pub fn rs_fixed_point(beta: f64, mu: f64, sigma2: f64, tol: f64) -> Result<RSFixedPoint> {
    if tol <= 0.0 {
        return Err(Error::InvalidParameter("tol must be > 0".into()));
    }
    if beta < 0.0 || sigma2 < 0.0 {
        return Err(Error::InvalidParameter(
            "beta and sigma2 must be >= 0".into(),
        ));
    }
    let gh = GaussHermite::new(GH_NODES);
    let damping = 0.5;
    let cap = 10_000;
    let mut q = 0.5;
    let mut residual = f64::INFINITY;
    for it in 1..=cap {
        let f = rs_map(&gh, beta, mu, sigma2, q);
        residual = (q - f).abs();
        if residual <= tol {
            return Ok(RSFixedPoint {
                beta,
                mu,
                sigma2,
                q,
                residual,
                iterations: it,
            });
        }
        q = (1.0 - damping) * q + damping * f;
        q = q.clamp(0.0, 1.0 - 1e-15);
    }
    Err(Error::NonConvergence(format!(
        "rs_fixed_point residual {residual:.3e} after {cap} iterations"
    )))
}

/// beta^2 E_{h,z}[cosh^{-4}(beta z sqrt(q) + h)]; the replica-symmetric
/// phase requires this to be below 1.
pub fn at_line_value(beta: f64, mu: f64, sigma2: f64, q: f64) -> f64 {
    let gh = GaussHermite::new(GH_NODES);
    let a = beta * q.max(0.0).sqrt();
    beta * beta
        * gh.expect_normal(mu, sigma2.sqrt(), |h| {
            gh.expect_normal(0.0, 1.0, |z| {
                let c = (a * z + h).cosh();
                (c * c * c * c).recip()
            })
        })
}

/// Dominant eigenvalue of the empirical covariance (centered) or second
/// moment (uncentered) of the samples, by power iteration run until the
/// Rayleigh quotient stabilizes.
pub fn covariance_opnorm_estimate<R: Rng + ?Sized>(
    samples: &[SpinConfiguration],
    centered: bool,
    rng: &mut R,
) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "covariance estimate needs >= 2 samples".into(),
        ));
    }
    let n = samples[0].len();
    for s in samples {
        if s.len() != n {
            return Err(Error::DimensionMismatch(
                "samples of unequal length".into(),
            ));
        }
    }
    let t = samples.len() as f64;
    let mean: Vec<f64> = if centered {
        let mut m = vec![0.0; n];
        for s in samples {
            for (mi, &x) in m.iter_mut().zip(s.spins()) {
                *mi += x as f64;
            }
        }
        m.iter().map(|v| v / t).collect()
    } else {
        vec![0.0; n]
    };

    // Explicit matrix for moderate n keeps power iteration cheap; fall
    // back to matrix-free products when the n x n table would be large.
    let explicit = if n <= 2048 {
        let mut c = vec![0.0; n * n];
        for s in samples {
            let x = s.spins();
            for i in 0..n {
                let xi = x[i] as f64;
                let row = &mut c[i * n..(i + 1) * n];
                for (j, rj) in row.iter_mut().enumerate() {
                    *rj += xi * x[j] as f64;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                c[i * n + j] = c[i * n + j] / t - mean[i] * mean[j];
            }
        }
        Some(c)
    } else {
        None
    };

    let apply = |v: &[f64], out: &mut [f64]| {
        if let Some(c) = &explicit {
            for i in 0..n {
                out[i] = c[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
            let mv: f64 = mean.iter().zip(v).map(|(a, b)| a * b).sum();
            for s in samples {
                let x = s.spins();
                let dot: f64 = x.iter().zip(v).map(|(&a, b)| a as f64 * b).sum();
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o += xi as f64 * dot;
                }
            }
            for i in 0..n {
                out[i] = out[i] / t - mean[i] * mv;
            }
        }
    };

    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let norm = |u: &[f64]| u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = norm(&v);
    if nv == 0.0 {
        v[0] = 1.0;
    } else {
        v.iter_mut().for_each(|a| *a /= nv);
    }
    let mut w = vec![0.0; n];
    let mut eig = 0.0;
    for it in 0..20_000 {
        apply(&v, &mut w);
        let nw = norm(&w);
        if nw < 1e-300 {
            return Ok(0.0);
        }
        let next = v.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let settled = it >= 200 && (next - eig).abs() <= 1e-12 * next.abs().max(1.0);
        eig = next;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if settled {
            break;
        }
    }
    Ok(eig.abs())
}
