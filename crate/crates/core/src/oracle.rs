//! Exact strategic-buyer best responses by exhaustive enumeration of all
//! `2^T` strategies, and expected strategic revenue of arbitrary trees.
//!
//! This is the trusted reference that the matrix reduction and the
//! optimizer are checked against, so it deliberately does nothing clever:
//! every strategy's surplus line is computed from the tree and the best one
//! is picked by a linear scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discount::DiscountSequence;
use crate::distribution::ValuationDistribution;
use crate::error::{Error, Result};
use crate::game::{strategy_lines, BuyerStrategy, StrategyLine};
use crate::quadrature::GaussLegendre;
use crate::tree::PricingTree;

/// Largest horizon the enumeration accepts.
pub const MAX_ENUMERATION_HORIZON: usize = 20;
/// Relative surplus tolerance under which two strategies count as tied.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-12;
/// Default node count of [`expected_strategic_revenue`].
pub const DEFAULT_QUADRATURE_NODES: usize = 256;
/// Equal-width panels the support is split into before breakpoint refinement.
pub const QUADRATURE_PANELS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub strategy: BuyerStrategy,
    /// Optimal surplus `S(v)` under the buyer's discount.
    pub surplus: f64,
    /// Seller revenue `R(v)` of the chosen strategy.
    pub revenue: f64,
    /// Discounted quantity `Q(v)` under the buyer's discount.
    pub quantity: f64,
    /// Number of strategies whose surplus ties with the optimum.
    pub tie_count: usize,
}

/// Precomputed surplus lines of one tree; answers best-response queries.
#[derive(Debug, Clone)]
pub struct BuyerOracle {
    lines: Vec<StrategyLine>,
    tie_tolerance: f64,
}

impl BuyerOracle {
    pub fn new(tree: &PricingTree, gamma_b: &DiscountSequence, gamma_s: &DiscountSequence) -> Result<Self> {
        if tree.horizon() > MAX_ENUMERATION_HORIZON {
            return Err(Error::ResourceLimit(format!(
                "best-response enumeration supports horizons up to {MAX_ENUMERATION_HORIZON}, got {}",
                tree.horizon()
            )));
        }
        Ok(Self { lines: strategy_lines(tree, gamma_b, gamma_s)?, tie_tolerance: DEFAULT_TIE_TOLERANCE })
    }

    pub fn with_tie_tolerance(mut self, tol: f64) -> Self {
        self.tie_tolerance = tol;
        self
    }

    pub fn lines(&self) -> &[StrategyLine] {
        &self.lines
    }

    /// Surplus-maximizing strategy at `valuation`. Among surplus ties the
    /// strategy with the largest seller revenue wins; remaining ties go to
    /// the smallest binary value.
    pub fn respond(&self, valuation: f64) -> Result<BestResponse> {
        if !(valuation >= 0.0) {
            return Err(Error::invalid(format!("valuation must be non-negative, got {valuation}")));
        }
        let best_surplus = self.lines.iter().map(|l| l.surplus(valuation)).fold(f64::NEG_INFINITY, f64::max);
        let tol = self.tie_tolerance * best_surplus.abs().max(1.0);
        let mut chosen: Option<&StrategyLine> = None;
        let mut tie_count = 0;
        for line in &self.lines {
            if best_surplus - line.surplus(valuation) <= tol {
                tie_count += 1;
                if chosen.is_none_or(|c| line.revenue > c.revenue) {
                    chosen = Some(line);
                }
            }
        }
        let line = chosen.expect("at least one strategy attains the maximum");
        Ok(BestResponse {
            strategy: line.strategy,
            surplus: line.surplus(valuation),
            revenue: line.revenue,
            quantity: line.quantity,
            tie_count,
        })
    }

    /// Valuations in `(0, ∞)` where the upper envelope of the surplus lines
    /// changes slope, i.e. where the optimal strategy (and so `R` and `Q`)
    /// can jump. Sorted ascending.
    pub fn envelope_breakpoints(&self) -> Vec<f64> {
        // best line per slope, slopes ascending
        let mut lines: Vec<(f64, f64)> = self.lines.iter().map(|l| (l.quantity, -l.payment)).collect();
        lines.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        lines.dedup_by(|later, earlier| later.0 == earlier.0);

        let cross = |a: (f64, f64), b: (f64, f64)| (a.1 - b.1) / (b.0 - a.0);
        let mut hull: Vec<(f64, f64)> = Vec::with_capacity(lines.len());
        for line in lines {
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if cross(a, line) <= cross(a, b) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(line);
        }
        hull.windows(2).map(|w| cross(w[0], w[1])).filter(|&x| x > 0.0).collect()
    }
}

pub fn best_response(
    tree: &PricingTree,
    valuation: f64,
    gamma_b: &DiscountSequence,
    gamma_s: &DiscountSequence,
) -> Result<BestResponse> {
    BuyerOracle::new(tree, gamma_b, gamma_s)?.respond(valuation)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub valuation: f64,
    pub strategy: BuyerStrategy,
    pub surplus: f64,
    pub revenue: f64,
    pub quantity: f64,
}

/// Best responses on a sorted, non-negative valuation grid.
pub fn strategic_revenue_curve(
    tree: &PricingTree,
    gamma_b: &DiscountSequence,
    gamma_s: &DiscountSequence,
    grid: &[f64],
) -> Result<Vec<CurvePoint>> {
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::invalid("valuation grid must be sorted ascending"));
    }
    let oracle = BuyerOracle::new(tree, gamma_b, gamma_s)?;
    grid.iter()
        .map(|&v| {
            let br = oracle.respond(v)?;
            Ok(CurvePoint {
                valuation: v,
                strategy: br.strategy,
                surplus: br.surplus,
                revenue: br.revenue,
                quantity: br.quantity,
            })
        })
        .collect()
}

/// `E_{V∼D}[R(V)]` by composite Gauss–Legendre quadrature of `R(v) f(v)`.
///
/// `R` is piecewise constant with jumps where the buyer switches strategy,
/// so the support is split into [`QUADRATURE_PANELS`] equal panels and
/// further at every envelope breakpoint; each panel gets
/// `n_quadrature / QUADRATURE_PANELS` nodes.
pub fn expected_strategic_revenue(
    tree: &PricingTree,
    dist: &ValuationDistribution,
    gamma_b: &DiscountSequence,
    gamma_s: &DiscountSequence,
    n_quadrature: usize,
) -> Result<f64> {
    if n_quadrature < 16 {
        return Err(Error::invalid(format!("n_quadrature must be at least 16, got {n_quadrature}")));
    }
    let oracle = BuyerOracle::new(tree, gamma_b, gamma_s)?;
    let rule = GaussLegendre::new((n_quadrature / QUADRATURE_PANELS).max(2));
    let breaks = quadrature_breaks(dist, &oracle.envelope_breakpoints());
    let mut err = None;
    let value = rule.integrate_pieces(&breaks, |v| match oracle.respond(v) {
        Ok(br) => br.revenue * dist.pdf(v),
        Err(e) => {
            err.get_or_insert(e);
            0.0
        }
    });
    err.map_or(Ok(value), Err)
}

fn quadrature_breaks(dist: &ValuationDistribution, jumps: &[f64]) -> Vec<f64> {
    let (lo, hi) = dist.support();
    let mut breaks: Vec<f64> = (0..=QUADRATURE_PANELS)
        .map(|i| lo + (hi - lo) * i as f64 / QUADRATURE_PANELS as f64)
        .chain(jumps.iter().copied().filter(|&x| x > lo && x < hi))
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|b, a| *b - *a <= 1e-14 * hi.max(1.0));
    breaks
}

/// Result of the exhaustive grid search over two-round trees.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub tree: PricingTree,
    pub revenue: f64,
    /// Width of one grid cell.
    pub cell: f64,
}

/// Exhaustive search over all two-round trees whose three prices lie on
/// the `resolution` cell midpoints of the support. Intended as an
/// independent oracle for the optimizer.
pub fn brute_force_optimal_tree(
    dist: &ValuationDistribution,
    gamma_b: &DiscountSequence,
    gamma_s: &DiscountSequence,
    horizon: usize,
    resolution: usize,
) -> Result<GridSearchResult> {
    if horizon != 2 {
        return Err(Error::invalid(format!("grid search supports horizon 2 only, got {horizon}")));
    }
    if !(1..=60).contains(&resolution) {
        return Err(Error::invalid(format!("grid resolution must be in 1..=60, got {resolution}")));
    }
    let (lo, hi) = dist.support();
    let cell = (hi - lo) / resolution as f64;
    let grid: Vec<f64> = (0..resolution).map(|i| lo + (i as f64 + 0.5) * cell).collect();
    let n = resolution;
    let results: Vec<Result<(usize, f64)>> = (0..n * n * n)
        .into_par_iter()
        .map(|code| {
            let prices = vec![grid[code / (n * n)], grid[code / n % n], grid[code % n]];
            let tree = PricingTree::new(2, prices)?;
            let rev = expected_strategic_revenue(&tree, dist, gamma_b, gamma_s, DEFAULT_QUADRATURE_NODES)?;
            Ok((code, rev))
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for r in results {
        let (code, rev) = r?;
        if best.is_none_or(|(_, b)| rev > b) {
            best = Some((code, rev));
        }
    }
    let (code, revenue) = best.expect("grid is non-empty");
    let tree = PricingTree::new(2, vec![grid[code / (n * n)], grid[code / n % n], grid[code % n]])?;
    Ok(GridSearchResult { tree, revenue, cell })
}
