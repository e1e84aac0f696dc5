//! l1-constrained logistic regression: loss, gradient, projection,
//! projected-gradient solver, and exact population-loss oracles for small
//! systems.

use crate::dynamics::NodeSampleSet;
use crate::ising::{exact_distribution, IsingModel, SpinConfiguration};
use crate::{Error, Result};

pub use crate::ising::sigmoid;

/// Population-loss oracles enumerate the full measure; keep n modest.
pub const POPULATION_GUARD: usize = 20;

/// log(1 + exp(-z)), stable for |z| up to 1e4 and beyond.
pub fn logistic_loss(z: f64) -> f64 {
    if z >= 0.0 {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Stop when the per-iteration loss improvement drops below this.
    pub tol: f64,
    pub max_iters: usize,
    /// When true (default) the intercept shares the l1 budget with the
    /// weights; turning it off leaves the intercept unconstrained.
    pub constrain_intercept: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_iters: 20_000,
            constrain_intercept: true,
        }
    }
}

pub struct RegressionProblem<'a> {
    pub samples: &'a NodeSampleSet,
    pub radius: f64,
    pub options: SolverOptions,
}

#[derive(Debug, Clone)]
pub struct RegressionSolution {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub loss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Empirical loss after each iteration, starting at the zero vector.
    pub loss_trace: Vec<f64>,
}

/// Empirical loss (1/T) sum_t l(2 y_t (<w, x_t> + h)) and its gradient in
/// the concatenated variable (w, h); the last gradient entry is d/dh.
pub fn empirical_loss_and_gradient(
    samples: &NodeSampleSet,
    w: &[f64],
    h: f64,
) -> Result<(f64, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet(samples.node));
    }
    let dim = samples.dim;
    if w.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "weights length {} vs context dim {dim}",
            w.len()
        )));
    }
    let t = samples.len();
    let mut loss = 0.0;
    let mut grad = vec![0.0; dim + 1];
    for k in 0..t {
        let x = samples.context(k);
        let y = samples.label(k) as f64;
        let mut z = h;
        for (wj, &xj) in w.iter().zip(x) {
            z += wj * xj as f64;
        }
        let m = 2.0 * y * z;
        // loss l(m) and sigmoid(-m) from one shared exponential
        let g = if m >= 0.0 {
            let e = (-m).exp();
            loss += e.ln_1p();
            -2.0 * y * (e / (1.0 + e))
        } else {
            let e = m.exp();
            loss += -m + e.ln_1p();
            -2.0 * y / (1.0 + e)
        };
        for (gj, &xj) in grad.iter_mut().zip(x) {
            *gj += g * xj as f64;
        }
        grad[dim] += g;
    }
    let tf = t as f64;
    loss /= tf;
    for g in &mut grad {
        *g /= tf;
    }
    Ok((loss, grad))
}

/// Euclidean projection onto the l1 ball of the given radius, by the
/// sorting-based soft-threshold algorithm. Ties at the boundary resolve
/// by the deterministic sort order.
pub fn project_l1(v: &[f64], radius: f64) -> Vec<f64> {
    assert!(radius > 0.0, "radius must be positive");
    let l1: f64 = v.iter().map(|a| a.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|a| a.abs()).collect();
    mags.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        cum += m;
        let candidate = (cum - radius) / (j + 1) as f64;
        if m - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&a| a.signum() * (a.abs() - theta).max(0.0))
        .collect()
}

fn project_variable(v: &mut Vec<f64>, radius: f64, constrain_intercept: bool) {
    if constrain_intercept {
        *v = project_l1(v, radius);
    } else {
        let dim = v.len() - 1;
        let h = v[dim];
        let mut w = project_l1(&v[..dim], radius);
        w.push(h);
        *v = w;
    }
}

/// Projected gradient descent on the concatenated variable (w, h): step
/// 1/L with L = max_t ||(x_t, 1)||_2^2, projection after each step, stop
/// when the loss improvement falls below the tolerance.
pub fn solve(problem: &RegressionProblem) -> Result<RegressionSolution> {
    let samples = problem.samples;
    if samples.is_empty() {
        return Err(Error::EmptySampleSet(samples.node));
    }
    if !(problem.radius > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let dim = samples.dim;
    // spins are +/-1, so ||(x, 1)||_2^2 = dim + 1 for every sample
    let lip = (dim + 1) as f64;
    let step = 1.0 / lip;
    let opts = &problem.options;

    let mut v = vec![0.0; dim + 1];
    project_variable(&mut v, problem.radius, opts.constrain_intercept);
    let (mut loss, mut grad) = empirical_loss_and_gradient(samples, &v[..dim], v[dim])?;
    let mut trace = vec![loss];
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=opts.max_iters {
        iterations = it;
        let mut next: Vec<f64> = v.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
        project_variable(&mut next, problem.radius, opts.constrain_intercept);
        let (next_loss, next_grad) =
            empirical_loss_and_gradient(samples, &next[..dim], next[dim])?;
        let improvement = loss - next_loss;
        v = next;
        loss = next_loss;
        grad = next_grad;
        trace.push(loss);
        if improvement < opts.tol {
            converged = true;
            break;
        }
    }
    let intercept = v[dim];
    v.truncate(dim);
    Ok(RegressionSolution {
        weights: v,
        intercept,
        loss,
        iterations,
        converged,
        loss_trace: trace,
    })
}

/// True regression coefficients for a node: its coupling row (without the
/// diagonal) and its field.
pub fn true_coefficients(model: &IsingModel, node: usize) -> (Vec<f64>, f64) {
    let w: Vec<f64> = model
        .coupling_row(node)
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != node)
        .map(|(_, &a)| a)
        .collect();
    (w, model.field(node))
}

/// Exact population logistic loss of (w, h) for the given node under the
/// stationary measure, by enumeration.
pub fn population_loss_exact(
    model: &IsingModel,
    node: usize,
    w: &[f64],
    h: f64,
) -> Result<f64> {
    let n = model.n();
    if n > POPULATION_GUARD {
        return Err(Error::TooManySites(n, POPULATION_GUARD));
    }
    if node >= n {
        return Err(Error::IndexOutOfRange(node, n));
    }
    if w.len() != n - 1 {
        return Err(Error::DimensionMismatch(format!(
            "weights length {} vs n-1={}",
            w.len(),
            n - 1
        )));
    }
    let dist = exact_distribution(model)?;
    let mut loss = 0.0;
    for (idx, p) in dist.probabilities.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let x = SpinConfiguration::from_index(idx, n);
        let ctx = x.context(node);
        let y = x.get(node) as f64;
        let mut z = h;
        for (wj, &xj) in w.iter().zip(&ctx) {
            z += wj * xj as f64;
        }
        loss += p * logistic_loss(2.0 * y * z);
    }
    Ok(loss)
}

/// Exact E_X[(sigma(2(<w,X>+h)) - sigma(2(<w*,X>+h*)))^2] under the
/// stationary measure, with (w*, h*) the node's true coefficients.
pub fn prediction_gap_exact(
    model: &IsingModel,
    node: usize,
    w: &[f64],
    h: f64,
) -> Result<f64> {
    let n = model.n();
    if n > POPULATION_GUARD {
        return Err(Error::TooManySites(n, POPULATION_GUARD));
    }
    if node >= n {
        return Err(Error::IndexOutOfRange(node, n));
    }
    let dist = exact_distribution(model)?;
    let (wstar, hstar) = true_coefficients(model, node);
    // context marginal: sum the full table over the node's spin
    let mut gap = 0.0;
    for (idx, p) in dist.probabilities.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let x = SpinConfiguration::from_index(idx, n);
        if x.get(node) != 1 {
            continue; // handled together with the +1 slice below
        }
        let mut minus = x.clone();
        minus.set(node, -1);
        let pc = p + dist.probabilities[minus.index()];
        let ctx = x.context(node);
        gap += pc * prediction_gap_at(&ctx, w, h, &wstar, hstar)?;
    }
    Ok(gap)
}

/// Squared sigmoid gap at a single context.
pub fn prediction_gap_at(
    context: &[i8],
    w: &[f64],
    h: f64,
    wstar: &[f64],
    hstar: f64,
) -> Result<f64> {
    if w.len() != context.len() || wstar.len() != context.len() {
        return Err(Error::DimensionMismatch(
            "weights vs context length".into(),
        ));
    }
    let dot = |ww: &[f64], hh: f64| -> f64 {
        let mut z = hh;
        for (wj, &xj) in ww.iter().zip(context) {
            z += wj * xj as f64;
        }
        z
    };
    let d = sigmoid(2.0 * dot(w, h)) - sigmoid(2.0 * dot(wstar, hstar));
    Ok(d * d)
}

/// Prediction gap under a supplied distribution over contexts.
pub fn prediction_gap_weighted(
    contexts: &[Vec<i8>],
    probs: &[f64],
    w: &[f64],
    h: f64,
    wstar: &[f64],
    hstar: f64,
) -> Result<f64> {
    if contexts.len() != probs.len() {
        return Err(Error::DimensionMismatch(
            "contexts vs probabilities length".into(),
        ));
    }
    let mut gap = 0.0;
    for (ctx, p) in contexts.iter().zip(probs) {
        gap += p * prediction_gap_at(ctx, w, h, wstar, hstar)?;
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::iid_node_samples;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    fn random_model(n: usize, scale: f64, rng: &mut impl Rng) -> IsingModel {
        let mut m = IsingModel::zero(n);
        for i in 0..n {
            for j in i + 1..n {
                m.set_coupling(i, j, rng.random_range(-scale..scale));
            }
            m.set_field(i, rng.random_range(-scale..scale));
        }
        m
    }

    fn random_samples(node: usize, dim: usize, t: usize, rng: &mut impl Rng) -> NodeSampleSet {
        let mut set = NodeSampleSet::new(node, dim, "test");
        for _ in 0..t {
            let ctx: Vec<i8> = (0..dim)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            let label = if rng.random::<bool>() { 1 } else { -1 };
            set.push(&ctx, label);
        }
        set
    }

    #[test]
    fn logistic_loss_examples() {
        assert!((logistic_loss(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        for z in [1.0, 5.0, 50.0] {
            assert!((logistic_loss(-z) - logistic_loss(z) - z).abs() < 1e-12);
        }
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(37.0) + sigmoid(-37.0), 1.0);
        // numerically stable far out
        assert!(logistic_loss(1e4).is_finite());
        assert!((logistic_loss(-1e4) - 1e4).abs() < 1e-9);
    }

    #[test]
    fn logistic_loss_is_one_lipschitz() {
        let mut rng = SmallRng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = rng.random_range(-100.0..100.0);
            let b = rng.random_range(-100.0..100.0);
            assert!((logistic_loss(a) - logistic_loss(b)).abs() <= (a - b).abs() + 1e-12);
        }
    }

    #[test]
    fn loss_at_zero_is_log2() {
        let mut rng = SmallRng::seed_from_u64(2);
        let set = random_samples(0, 5, 100, &mut rng);
        let (loss, _) = empirical_loss_and_gradient(&set, &[0.0; 5], 0.0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn loss_decreasing_in_margin() {
        let mut set = NodeSampleSet::new(0, 4, "test");
        set.push(&[1, -1, 1, 1], 1);
        let x = [1.0, -1.0, 1.0, 1.0];
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let c = k as f64 * 0.1;
            let w: Vec<f64> = x.iter().map(|v| c * v / 4.0).collect();
            let (loss, _) = empirical_loss_and_gradient(&set, &w, 0.0).unwrap();
            assert!(loss < prev);
            prev = loss;
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = SmallRng::seed_from_u64(3);
        for _ in 0..20 {
            let dim = rng.random_range(2..6);
            let set = random_samples(0, dim, 50, &mut rng);
            let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h: f64 = rng.random_range(-1.0..1.0);
            let (_, grad) = empirical_loss_and_gradient(&set, &w, h).unwrap();
            let eps = 1e-5;
            for j in 0..=dim {
                let mut wp = w.clone();
                let mut wm = w.clone();
                let (hp, hm) = if j == dim {
                    (h + eps, h - eps)
                } else {
                    wp[j] += eps;
                    wm[j] -= eps;
                    (h, h)
                };
                let (lp, _) = empirical_loss_and_gradient(&set, &wp, hp).unwrap();
                let (lm, _) = empirical_loss_and_gradient(&set, &wm, hm).unwrap();
                let fd = (lp - lm) / (2.0 * eps);
                let scale = grad[j].abs().max(fd.abs()).max(1e-8);
                assert!(
                    (grad[j] - fd).abs() / scale <= 1e-5,
                    "coord {j}: analytic {} vs fd {fd}",
                    grad[j]
                );
            }
        }
    }

    #[test]
    fn project_l1_examples() {
        let v = vec![0.2, -0.3, 0.1];
        assert_eq!(project_l1(&v, 1.0), v);
        let p = project_l1(&[3.0, 0.0, 0.0], 1.0);
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1] == 0.0 && p[2] == 0.0);
    }

    #[test]
    fn project_l1_is_closest_feasible_point() {
        let mut rng = SmallRng::seed_from_u64(4);
        let d2 = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
        };
        for _ in 0..100 {
            let dim = rng.random_range(1..8);
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
            let radius: f64 = rng.random_range(0.1..3.0);
            let p = project_l1(&v, radius);
            let l1: f64 = p.iter().map(|a| a.abs()).sum();
            assert!(l1 <= radius + 1e-12);
            let dp = d2(&p, &v);
            for _ in 0..1000 {
                // random feasible point: random direction scaled inside the ball
                let q: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let ql1: f64 = q.iter().map(|a| a.abs()).sum();
                let scale = rng.random_range(0.0..1.0) * radius / ql1.max(1e-12);
                let q: Vec<f64> = q.iter().map(|a| a * scale).collect();
                assert!(dp <= d2(&q, &v) + 1e-12);
            }
        }
    }

    #[test]
    fn solve_independent_labels_near_log2() {
        let mut rng = SmallRng::seed_from_u64(5);
        // labels exactly balanced and independent of contexts
        let mut set = NodeSampleSet::new(0, 3, "test");
        for _ in 0..500 {
            let ctx: Vec<i8> = (0..3)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            set.push(&ctx, 1);
            set.push(&ctx, -1);
        }
        let sol = solve(&RegressionProblem {
            samples: &set,
            radius: 1.0,
            options: SolverOptions::default(),
        })
        .unwrap();
        assert!((sol.loss - std::f64::consts::LN_2).abs() < 1e-4);
    }

    #[test]
    fn solve_dominates_true_parameters() {
        let mut rng = SmallRng::seed_from_u64(6);
        let m = random_model(5, 0.4, &mut rng);
        let d = exact_distribution(&m).unwrap();
        let sets = iid_node_samples(&d, 2000, &mut rng);
        for node in 0..5 {
            let (wstar, hstar) = true_coefficients(&m, node);
            let radius = wstar.iter().map(|a| a.abs()).sum::<f64>() + hstar.abs() + 0.5;
            let sol = solve(&RegressionProblem {
                samples: &sets[node],
                radius,
                options: SolverOptions::default(),
            })
            .unwrap();
            let (star_loss, _) =
                empirical_loss_and_gradient(&sets[node], &wstar, hstar).unwrap();
            assert!(sol.loss <= star_loss + 1e-8);
        }
    }

    #[test]
    fn solve_matches_grid_search_in_one_dimension() {
        let mut rng = SmallRng::seed_from_u64(7);
        let mut set = NodeSampleSet::new(0, 1, "test");
        for _ in 0..300 {
            let x: i8 = if rng.random::<bool>() { 1 } else { -1 };
            let p = sigmoid(2.0 * 0.35 * x as f64);
            let y: i8 = if rng.random::<f64>() < p { 1 } else { -1 };
            set.push(&[x], y);
        }
        let radius = 0.8;
        let sol = solve(&RegressionProblem {
            samples: &set,
            radius,
            options: SolverOptions::default(),
        })
        .unwrap();
        let mut grid_min = f64::INFINITY;
        let mut w = -radius;
        while w <= radius {
            let (loss, _) = empirical_loss_and_gradient(&set, &[w], 0.0).unwrap();
            grid_min = grid_min.min(loss);
            w += 1e-4;
        }
        assert!(sol.loss <= grid_min + 1e-6);
    }

    #[test]
    fn solve_feasible_monotone_deterministic() {
        let mut rng = SmallRng::seed_from_u64(8);
        let set = random_samples(0, 6, 400, &mut rng);
        let problem = RegressionProblem {
            samples: &set,
            radius: 1.3,
            options: SolverOptions::default(),
        };
        let a = solve(&problem).unwrap();
        let b = solve(&problem).unwrap();
        assert_eq!(a.weights, b.weights);
        assert_eq!(a.intercept, b.intercept);
        let l1: f64 =
            a.weights.iter().map(|v| v.abs()).sum::<f64>() + a.intercept.abs();
        assert!(l1 <= 1.3 + 1e-9);
        for pair in a.loss_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
        assert!(a.converged);
    }

    #[test]
    fn solve_rejects_empty_samples() {
        let set = NodeSampleSet::new(3, 4, "test");
        let err = solve(&RegressionProblem {
            samples: &set,
            radius: 1.0,
            options: SolverOptions::default(),
        })
        .unwrap_err();
        assert!(matches!(err, Error::EmptySampleSet(3)));
    }

    #[test]
    fn unconstrained_intercept_option() {
        let mut rng = SmallRng::seed_from_u64(9);
        // strongly biased labels: intercept should exceed a tiny budget
        let mut set = NodeSampleSet::new(0, 2, "test");
        for _ in 0..400 {
            let ctx: Vec<i8> = (0..2)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect();
            let y = if rng.random::<f64>() < 0.95 { 1 } else { -1 };
            set.push(&ctx, y);
        }
        let sol = solve(&RegressionProblem {
            samples: &set,
            radius: 0.05,
            options: SolverOptions {
                constrain_intercept: false,
                ..Default::default()
            },
        })
        .unwrap();
        assert!(sol.intercept > 0.05);
        let wl1: f64 = sol.weights.iter().map(|v| v.abs()).sum();
        assert!(wl1 <= 0.05 + 1e-9);
    }

    #[test]
    fn population_loss_examples() {
        let mut rng = SmallRng::seed_from_u64(10);
        let m = random_model(4, 0.5, &mut rng);
        let loss = population_loss_exact(&m, 0, &[0.0; 3], 0.0).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-12);

        for _ in 0..50 {
            let m = random_model(4, 0.7, &mut rng);
            let node = rng.random_range(0..4);
            let (wstar, hstar) = true_coefficients(&m, node);
            let lstar = population_loss_exact(&m, node, &wstar, hstar).unwrap();
            let mut w = wstar.clone();
            let j = rng.random_range(0..3);
            w[j] += rng.random_range(-1.0..1.0);
            let h = hstar + rng.random_range(-0.5..0.5);
            let l = population_loss_exact(&m, node, &w, h).unwrap();
            assert!(lstar <= l + 1e-12);
        }
    }

    #[test]
    fn loss_gap_dominates_twice_prediction_gap() {
        let mut rng = SmallRng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_model(4, 0.6, &mut rng);
            let node = rng.random_range(0..4);
            let (wstar, hstar) = true_coefficients(&m, node);
            let mut w = wstar.clone();
            let j = rng.random_range(0..3);
            w[j] += 0.3;
            let lstar = population_loss_exact(&m, node, &wstar, hstar).unwrap();
            let l = population_loss_exact(&m, node, &w, hstar).unwrap();
            let gap = prediction_gap_exact(&m, node, &w, hstar).unwrap();
            assert!(l - lstar >= 2.0 * gap - 1e-12);
        }
    }

    #[test]
    fn prediction_gap_zero_at_truth() {
        let mut rng = SmallRng::seed_from_u64(12);
        let m = random_model(5, 0.5, &mut rng);
        for node in 0..5 {
            let (wstar, hstar) = true_coefficients(&m, node);
            let gap = prediction_gap_exact(&m, node, &wstar, hstar).unwrap();
            assert!(gap.abs() < 1e-15);
        }
    }

    #[test]
    fn sigmoid_gap_lower_bound_on_grid() {
        // |sigma(x) - sigma(y)| >= (exp(-|x|) / 4e) min{1, |x - y|}
        let e = std::f64::consts::E;
        for i in 0..100 {
            for j in 0..100 {
                let x = -5.0 + 10.0 * i as f64 / 99.0;
                let y = -5.0 + 10.0 * j as f64 / 99.0;
                let lhs = (sigmoid(x) - sigmoid(y)).abs();
                let rhs = ((-x.abs()).exp() / (4.0 * e)) * 1.0f64.min((x - y).abs());
                assert!(lhs >= rhs - 1e-15, "x={x} y={y}: {lhs} < {rhs}");
            }
        }
    }

    #[test]
    fn azuma_scale_deviation() {
        // fixed feasible (w, h), i.i.d. data at T = 4096: the 95th
        // percentile of |empirical - population| loss stays below the
        // martingale bound's epsilon at delta = 0.05
        let mut rng = SmallRng::seed_from_u64(13);
        let m = random_model(5, 0.3, &mut rng);
        let node = 2usize;
        let (wstar, hstar) = true_coefficients(&m, node);
        let lambda = m.width();
        let pop = population_loss_exact(&m, node, &wstar, hstar).unwrap();
        let d = exact_distribution(&m).unwrap();
        let sampler = crate::ising::ExactSampler::new(&d);
        let t = 4096usize;
        let mut deviations = Vec::with_capacity(200);
        for _ in 0..200 {
            let mut acc = 0.0;
            for _ in 0..t {
                let x = sampler.sample(&mut rng);
                let ctx = x.context(node);
                let y = x.get(node) as f64;
                let mut z = hstar;
                for (wj, &xj) in wstar.iter().zip(&ctx) {
                    z += wj * xj as f64;
                }
                acc += logistic_loss(2.0 * y * z);
            }
            deviations.push((acc / t as f64 - pop).abs());
        }
        deviations.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let p95 = deviations[189];
        let bound = (32.0 * lambda * lambda * 40.0f64.ln() / t as f64).sqrt();
        assert!(p95 <= bound, "p95 = {p95}, bound = {bound}");
    }
}
