//! Maximization of `L` over the ordered cone `Δ^k` and recovery of the
//! optimal completely active pricing tree.
//!
//! `L` is not concave once the discounts differ, so the solver is a
//! multi-start projected gradient ascent with an Armijo line search along
//! the projection arc. Projection onto `Δ^k` is exact (isotonic regression
//! followed by clamping at zero).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discount::{rates_ordered, DiscountSequence};
use crate::distribution::{myerson_price, ValuationDistribution};
use crate::error::{Error, Result};
use crate::reduction::{build_system, ReductionSystem};
use crate::tree::PricingTree;

/// Largest horizon the optimizer accepts (`k = 63`).
pub const MAX_OPTIMIZER_HORIZON: usize = 6;
const ARMIJO_C: f64 = 1e-4;
const SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;
const TIE_TOLERANCE: f64 = 1e-10;
/// Line-search steps without a 1% drop below the best residual before
/// polishing.
const STALL_LIMIT: usize = 50;
const STALL_RATIO: f64 = 0.99;

/// Euclidean projection onto `{0 ≤ v_1 ≤ … ≤ v_k}`: pool-adjacent-violators
/// isotonic regression, then clamping at zero.
pub fn project_to_delta(x: &[f64]) -> Vec<f64> {
    // blocks of (mean, size)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(x.len());
    for &xi in x {
        let (mut mean, mut size) = (xi, 1usize);
        while let Some(&(m, s)) = blocks.last() {
            if m <= mean {
                break;
            }
            blocks.pop();
            mean = (m * s as f64 + mean * size as f64) / (s + size) as f64;
            size += s;
        }
        blocks.push((mean, size));
    }
    blocks.into_iter().flat_map(|(m, s)| std::iter::repeat_n(m.max(0.0), s)).collect()
}

/// How the trial step of each line search is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum StepRule {
    /// Always `1/‖Ξ‖₁`.
    Fixed,
    /// Barzilai–Borwein step from the previous iterate, `1/‖Ξ‖₁` at the start.
    #[default]
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerOptions {
    /// Number of generated starting points; `None` means `max(16, 4k)`.
    pub starts: Option<usize>,
    pub max_iter: usize,
    /// Stop once the projected-gradient residual is at most this.
    pub tol: f64,
    pub step_rule: StepRule,
    pub seed: u64,
    /// Additional starting points, projected onto `Δ^k` before use.
    pub extra_starts: Vec<Vec<f64>>,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            starts: None,
            max_iter: 100_000,
            tol: 1e-9,
            step_rule: StepRule::Spectral,
            seed: 0,
            extra_starts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub v_star: Vec<f64>,
    /// Expected strategic revenue `L(v*)` of the returned tree.
    pub value: f64,
    #[serde(skip)]
    pub tree: Option<PricingTree>,
    /// Iterations of the winning start.
    pub iterations: usize,
    pub starts: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// False when `ν(γB) ≤ ν(γS)` fails; the result is then optimal only
    /// among completely active trees.
    pub rate_order_ok: bool,
    pub condition_w: f64,
    pub condition_xi: f64,
}

impl OptimizationResult {
    pub fn tree(&self) -> &PricingTree {
        self.tree.as_ref().expect("optimizer results always carry their tree")
    }
}

/// One projected-gradient run from a single start.
#[derive(Debug, Clone, PartialEq)]
pub struct Ascent {
    pub v: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// `L` after every accepted line-search step, starting with the
    /// projected start. Residual-driven polishing steps are not recorded.
    pub trace: Vec<f64>,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn residual(v: &[f64], g: &[f64]) -> f64 {
    let stepped: Vec<f64> = v.iter().zip(g).map(|(a, b)| a + b).collect();
    let p = project_to_delta(&stepped);
    norm(&p.iter().zip(v).map(|(a, b)| a - b).collect::<Vec<_>>())
}

fn base_step(sys: &ReductionSystem) -> f64 {
    let n1 = sys.xi().column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    1.0 / n1.max(f64::MIN_POSITIVE)
}

/// Projected gradient ascent on `L` from `start`.
pub fn ascend(
    sys: &ReductionSystem,
    dist: &ValuationDistribution,
    start: &[f64],
    opts: &OptimizerOptions,
) -> Result<Ascent> {
    if start.len() != sys.dim() {
        return Err(Error::invalid(format!("start must have length {}, got {}", sys.dim(), start.len())));
    }
    let alpha0 = base_step(sys);
    let mut v = project_to_delta(start);
    let (mut value, mut grad) = sys.l_value_and_gradient(dist, &v);
    let mut trace = vec![value];
    let mut kkt = residual(&v, &grad);
    let mut alpha = alpha0;
    let mut iterations = 0;
    let (mut best_kkt, mut stalled) = (kkt, 0);
    while kkt > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let mut step = alpha;
        let accepted = loop {
            let trial: Vec<f64> = v.iter().zip(&grad).map(|(a, g)| a + step * g).collect();
            let x = project_to_delta(&trial);
            if x == v {
                break None;
            }
            let gain: f64 = grad.iter().zip(x.iter().zip(&v)).map(|(g, (a, b))| g * (a - b)).sum();
            let new_value = sys.l_value_unchecked(dist, &x);
            let roundoff = 1e-14 * value.abs().max(1.0);
            if new_value >= value + ARMIJO_C * gain || (new_value >= value && gain <= roundoff) {
                break Some((x, new_value));
            }
            step *= SHRINK;
            if step < MIN_STEP {
                break None;
            }
        };
        let Some((x, new_value)) = accepted else {
            polish(sys, dist, opts, alpha0, &mut v, &mut grad, &mut kkt, &mut iterations);
            value = sys.l_value_unchecked(dist, &v);
            break;
        };
        let (_, new_grad) = sys.l_value_and_gradient(dist, &x);
        alpha = match opts.step_rule {
            StepRule::Fixed => alpha0,
            StepRule::Spectral => {
                // BB1 step for minimizing -L
                let s: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - b).collect();
                let sy: f64 = s.iter().zip(new_grad.iter().zip(&grad)).map(|(s, (gn, go))| -s * (gn - go)).sum();
                let ss: f64 = s.iter().map(|a| a * a).sum();
                if sy > 0.0 && ss > 0.0 {
                    (ss / sy).clamp(1e-6 * alpha0, 1e6 * alpha0)
                } else {
                    alpha0
                }
            }
        };
        v = x;
        value = new_value;
        grad = new_grad;
        trace.push(value);
        kkt = residual(&v, &grad);
        if kkt < STALL_RATIO * best_kkt {
            (best_kkt, stalled) = (kkt, 0);
        } else {
            stalled += 1;
            if stalled >= STALL_LIMIT && kkt > opts.tol {
                polish(sys, dist, opts, alpha0, &mut v, &mut grad, &mut kkt, &mut iterations);
                value = sys.l_value_unchecked(dist, &v);
                break;
            }
        }
    }
    Ok(Ascent { converged: kkt <= opts.tol, v, value, iterations, kkt_residual: kkt, trace })
}

/// Improvements of `L` below about `kkt²·α` are lost to rounding, so once
/// the line search stalls the iterate is refined with fixed projected
/// steps accepted on a decrease of the residual instead of the value.
#[allow(clippy::too_many_arguments)]
fn polish(
    sys: &ReductionSystem,
    dist: &ValuationDistribution,
    opts: &OptimizerOptions,
    alpha0: f64,
    v: &mut Vec<f64>,
    grad: &mut Vec<f64>,
    kkt: &mut f64,
    iterations: &mut usize,
) {
    let mut step = alpha0;
    while *kkt > opts.tol && *iterations < opts.max_iter && step >= alpha0 * 1e-6 {
        *iterations += 1;
        let trial: Vec<f64> = v.iter().zip(grad.iter()).map(|(a, g)| a + step * g).collect();
        let x = project_to_delta(&trial);
        let (_, g) = sys.l_value_and_gradient(dist, &x);
        let r = residual(&x, &g);
        if r < *kkt {
            *v = x;
            *grad = g;
            *kkt = r;
            step = alpha0;
        } else {
            step *= SHRINK;
        }
    }
}

/// Deterministic starting points: the constant Myerson point, the quantile
/// point, then seeded sorted uniform draws over the support.
pub fn starting_points(dist: &ValuationDistribution, k: usize, opts: &OptimizerOptions) -> Vec<Vec<f64>> {
    let count = opts.starts.unwrap_or((4 * k).max(16));
    let mut out = Vec::with_capacity(count + opts.extra_starts.len());
    if count >= 1 {
        out.push(vec![myerson_price(dist).price; k]);
    }
    if count >= 2 {
        out.push((1..=k).map(|j| dist.quantile(j as f64 / (k + 1) as f64)).collect());
    }
    let (lo, hi) = dist.support();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    while out.len() < count {
        let mut draw: Vec<f64> = (0..k).map(|_| rng.random_range(lo..=hi)).collect();
        draw.sort_by(f64::total_cmp);
        out.push(draw);
    }
    out.extend(opts.extra_starts.iter().cloned());
    out
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y)
}

/// Multi-start maximization of `L` over `Δ^k` for a prepared system.
pub fn maximize_system(
    sys: &ReductionSystem,
    dist: &ValuationDistribution,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult> {
    let k = sys.dim();
    if let Some(bad) = opts.extra_starts.iter().find(|s| s.len() != k) {
        return Err(Error::invalid(format!("extra start has length {}, expected {k}", bad.len())));
    }
    let starts = starting_points(dist, k, opts);
    if starts.is_empty() {
        return Err(Error::invalid("at least one starting point is required"));
    }
    let runs = starts.par_iter().map(|s| ascend(sys, dist, s, opts)).collect::<Result<Vec<_>>>()?;
    let best_value = runs.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * best_value.abs().max(1.0);
    let best = runs
        .iter()
        .filter(|r| r.value >= best_value - tol)
        .reduce(|a, b| if lex_less(&b.v, &a.v) { b } else { a })
        .expect("at least one run");
    let tree = sys.v_to_tree(&best.v)?;
    let rate_order_ok = {
        let gb = DiscountSequence::explicit(sys.gamma_b().to_vec())?;
        let gs = DiscountSequence::explicit(sys.gamma_s().to_vec())?;
        rates_ordered(&gb, &gs)
    };
    Ok(OptimizationResult {
        v_star: best.v.clone(),
        value: best.value,
        tree: Some(tree),
        iterations: best.iterations,
        starts: runs.len(),
        converged: best.converged,
        kkt_residual: best.kkt_residual,
        rate_order_ok,
        condition_w: sys.condition_w(),
        condition_xi: sys.condition_xi(),
    })
}

/// Optimal completely active tree for `T` rounds.
pub fn maximize_l(
    dist: &ValuationDistribution,
    gamma_b: &DiscountSequence,
    gamma_s: &DiscountSequence,
    horizon: usize,
    opts: &OptimizerOptions,
) -> Result<OptimizationResult> {
    if horizon > MAX_OPTIMIZER_HORIZON {
        return Err(Error::ResourceLimit(format!(
            "optimization supports horizons up to {MAX_OPTIMIZER_HORIZON}, got {horizon}"
        )));
    }
    let sys = build_system(gamma_b, gamma_s, horizon)?;
    maximize_system(&sys, dist, opts)
}

/// Exact maximizer of `L` for valuations uniform on `[0, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub v: Vec<f64>,
    pub value: f64,
}

/// Maximizes `(1 - v/hi)ᵀ M v` over `{0 ≤ v_1 ≤ … ≤ v_k ≤ hi}` by
/// enumerating every face of the polytope and solving the stationarity
/// system on it. `M` is `Ξ` (or `Υ₂`); the distribution must be uniform
/// with lower end 0. Values of `v` above `hi` never help, so the extra
/// bound loses nothing.
pub fn uniform_exact_qp(m: &DMatrix<f64>, dist: &ValuationDistribution) -> Result<QpSolution> {
    let hi = match *dist {
        ValuationDistribution::Uniform { lo: 0.0, hi } => hi,
        _ => return Err(Error::invalid("the exact solver needs a uniform distribution on [0, hi]")),
    };
    let k = m.nrows();
    if k == 0 || k > 15 || m.ncols() != k {
        return Err(Error::invalid("the exact solver needs a square matrix of size 1..=15"));
    }
    // objective cᵀv - ½ vᵀ H v
    let c = m.row_sum().transpose();
    let h = (m + m.transpose()) / hi;
    // constraint i: rows of G v ≥ b; 0: v_1 ≥ 0, i in 1..k: v_{i+1} - v_i ≥ 0, k: -v_k ≥ -hi
    let ncons = k + 1;
    let mut g = DMatrix::zeros(ncons, k);
    let mut b = DVector::zeros(ncons);
    g[(0, 0)] = 1.0;
    for i in 1..k {
        g[(i, i)] = 1.0;
        g[(i, i - 1)] = -1.0;
    }
    g[(k, k - 1)] = -1.0;
    b[k] = -hi;

    let objective = |v: &DVector<f64>| c.dot(v) - 0.5 * v.dot(&(&h * v));
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << ncons) {
        let active: Vec<usize> = (0..ncons).filter(|i| mask >> i & 1 == 1).collect();
        if active.len() > k {
            continue;
        }
        let n = k + active.len();
        let mut kkt = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        kkt.view_mut((0, 0), (k, k)).copy_from(&h);
        rhs.rows_mut(0, k).copy_from(&c);
        for (r, &i) in active.iter().enumerate() {
            for j in 0..k {
                kkt[(k + r, j)] = g[(i, j)];
                kkt[(j, k + r)] = g[(i, j)];
            }
            rhs[k + r] = b[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let v = sol.rows(0, k).into_owned();
        if v.iter().any(|x| !x.is_finite()) {
            continue;
        }
        let slack = &g * &v - &b;
        if slack.iter().any(|&s| s < -1e-12 * hi.max(1.0)) {
            continue;
        }
        let val = objective(&v);
        let better = match &best {
            None => true,
            Some((bv, bx)) => val > bv + 1e-14 || (val >= bv - 1e-14 && lex_less(v.as_slice(), bx.as_slice())),
        };
        if better {
            best = Some((val, v));
        }
    }
    let (value, v) = best.ok_or_else(|| Error::Internal("no feasible face found".into()))?;
    Ok(QpSolution { v: project_to_delta(v.as_slice()), value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discount::{make_geometric_discount, Horizon};
    use crate::reduction::{reduced_t2, ReducedT2};
    use approx::assert_abs_diff_eq;

    fn geo(rate: f64, t: usize) -> DiscountSequence {
        make_geometric_discount(rate, Horizon::Finite(t)).unwrap()
    }

    fn uniform() -> ValuationDistribution {
        ValuationDistribution::uniform(0.0, 1.0).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_delta(&[3.0, 1.0, 2.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(project_to_delta(&[0.1, 0.2, 0.3]), vec![0.1, 0.2, 0.3]);
        assert_eq!(project_to_delta(&[-1.0, -3.0, -0.5]), vec![0.0, 0.0, 0.0]);
        assert_eq!(project_to_delta(&[-1.0, 0.5, 0.2]), vec![0.0, 0.35, 0.35]);
        assert!(project_to_delta(&[]).is_empty());
    }

    #[test]
    fn equal_discounts_recover_constant_price() {
        let g = geo(0.5, 2);
        let r = maximize_l(&uniform(), &g, &g, 2, &OptimizerOptions::default()).unwrap();
        assert_abs_diff_eq!(r.value, 0.375, epsilon = 1e-9);
        for x in &r.v_star {
            assert_abs_diff_eq!(*x, 0.5, epsilon = 1e-6);
        }
        assert!(r.converged);
        assert!(r.rate_order_ok);
        assert_eq!(r.starts, 16);
    }

    #[test]
    fn ascent_is_monotone() {
        let sys = build_system(&geo(0.3, 3), &geo(0.7, 3), 3).unwrap();
        let d = ValuationDistribution::beta(2.0, 2.0).unwrap();
        let a = ascend(&sys, &d, &[0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 0.9], &OptimizerOptions::default()).unwrap();
        assert!(a.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(a.converged);
    }

    #[test]
    fn fixed_and_spectral_steps_agree() {
        let sys = build_system(&geo(0.2, 2), &geo(0.8, 2), 2).unwrap();
        let start = [0.2, 0.5, 0.6];
        let spectral = ascend(&sys, &uniform(), &start, &OptimizerOptions::default()).unwrap();
        let fixed = OptimizerOptions { step_rule: StepRule::Fixed, ..Default::default() };
        let fixed = ascend(&sys, &uniform(), &start, &fixed).unwrap();
        assert_abs_diff_eq!(spectral.value, fixed.value, epsilon = 1e-12);
    }

    #[test]
    fn horizon_guard() {
        let g = geo(0.5, 7);
        assert!(matches!(
            maximize_l(&uniform(), &g, &g, 7, &OptimizerOptions::default()),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn rate_order_flag() {
        let r = maximize_l(&uniform(), &geo(0.8, 2), &geo(0.2, 2), 2, &OptimizerOptions::default()).unwrap();
        assert!(!r.rate_order_ok);
    }

    #[test]
    fn exact_qp_matches_gradient_ascent() {
        let sys = build_system(&geo(0.2, 2), &geo(0.8, 2), 2).unwrap();
        let exact = uniform_exact_qp(sys.xi(), &uniform()).unwrap();
        let pg = maximize_system(&sys, &uniform(), &OptimizerOptions::default()).unwrap();
        assert_abs_diff_eq!(exact.value, pg.value, epsilon = 1e-10);
        for (a, b) in exact.v.iter().zip(&pg.v_star) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
        let reduced = uniform_exact_qp(&reduced_t2(0.8, 0.2).unwrap().matrix(), &uniform()).unwrap();
        assert_abs_diff_eq!(reduced.value, exact.value, epsilon = 1e-12);
        let embedded = ReducedT2::embed([reduced.v[0], reduced.v[1]]);
        assert_abs_diff_eq!(sys.l_value(&uniform(), &embedded).unwrap(), exact.value, epsilon = 1e-12);
    }

    #[test]
    fn exact_qp_rejects_other_distributions() {
        let m = DMatrix::identity(2, 2);
        assert!(uniform_exact_qp(&m, &ValuationDistribution::beta(2.0, 2.0).unwrap()).is_err());
        assert!(uniform_exact_qp(&m, &ValuationDistribution::uniform(0.1, 1.0).unwrap()).is_err());
    }
}
