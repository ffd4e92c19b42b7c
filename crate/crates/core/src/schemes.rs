//! Closed-form pricing schemes and truncation of infinite games.

use serde::{Deserialize, Serialize};

use crate::discount::{pointwise_dominated, rates_ordered, DiscountSequence, Horizon};
use crate::distribution::{myerson_price, ValuationDistribution};
use crate::error::{Error, Result};
use crate::optimizer::{maximize_l, OptimizationResult, OptimizerOptions, MAX_OPTIMIZER_HORIZON};
use crate::tree::PricingTree;

/// The Myerson price offered in every round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantScheme {
    pub price: f64,
    /// `Γ^S·H(p*)`.
    pub revenue: f64,
    pub horizon: Horizon,
}

impl ConstantScheme {
    /// The constant tree with `depth` rounds. A finite scheme only
    /// materializes at its own horizon.
    pub fn tree(&self, depth: usize) -> Result<PricingTree> {
        check_depth(self.horizon, depth)?;
        PricingTree::constant(depth, self.price)
    }
}

fn check_depth(horizon: Horizon, depth: usize) -> Result<()> {
    match horizon {
        Horizon::Finite(t) if t != depth => {
            Err(Error::invalid(format!("the scheme has {t} rounds, cannot build a tree of depth {depth}")))
        }
        _ => Ok(()),
    }
}

pub fn constant_myerson(dist: &ValuationDistribution, gamma_s: &DiscountSequence) -> ConstantScheme {
    let m = myerson_price(dist);
    ConstantScheme { price: m.price, revenue: gamma_s.total() * m.revenue, horizon: gamma_s.horizon() }
}

/// A large first price, free goods after acceptance and a prohibitive
/// price after rejection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BigDealScheme {
    /// `Γ^B·p*/γB_1`.
    pub first_price: f64,
    /// `2·γB_1·p₁/(Γ^B - γB_1)`, charged at every node after a rejection.
    pub penalty: f64,
    /// `γS_1·p₁·(1 - F(p*))`, which is `Γ^B·H(p*)` for normalized discounts.
    pub revenue: f64,
    pub horizon: Horizon,
    /// Set when `γS ≤ γB` fails pointwise; the scheme is then not
    /// guaranteed to be optimal.
    pub warning: Option<String>,
}

impl BigDealScheme {
    pub fn tree(&self, depth: usize) -> Result<PricingTree> {
        check_depth(self.horizon, depth)?;
        PricingTree::from_fn(depth, |node| match node.as_bytes().first() {
            None => self.first_price,
            Some(b'1') => 0.0,
            Some(_) => self.penalty,
        })
    }
}

pub fn big_deal(
    dist: &ValuationDistribution,
    gamma_b: &DiscountSequence,
    gamma_s: &DiscountSequence,
) -> Result<BigDealScheme> {
    if gamma_b.len() == Some(1) || gamma_s.len() == Some(1) {
        return Err(Error::invalid("the big deal needs at least two rounds"));
    }
    if gamma_b.len().is_some() && gamma_s.len().is_some() && gamma_b.len() != gamma_s.len() {
        return Err(Error::invalid("buyer and seller discounts have different lengths"));
    }
    let g1 = gamma_b.weight(0);
    let rest = gamma_b.total() - g1;
    if !(rest > 0.0) {
        return Err(Error::invalid("the big deal needs a positive buyer weight after the first round"));
    }
    let m = myerson_price(dist);
    let first_price = gamma_b.total() * m.price / g1;
    let penalty = 2.0 * g1 * first_price / rest;
    let revenue = gamma_s.weight(0) * first_price * dist.survival(m.price);
    let warning = (!pointwise_dominated(gamma_s, gamma_b))
        .then(|| "seller discount is not dominated by the buyer discount; the big deal may be suboptimal".to_string());
    Ok(BigDealScheme { first_price, penalty, revenue, horizon: gamma_b.horizon(), warning })
}

/// A game cut after `τ` rounds with the remaining weight folded into the
/// last round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedGame {
    pub tau: usize,
    pub gamma_b: DiscountSequence,
    pub gamma_s: DiscountSequence,
    /// Seller weight after round `τ`, `Γ^S_τ = Σ_{t>τ} γS_t`.
    pub seller_tail: f64,
}

impl TruncatedGame {
    /// `Γ^S_τ·E[V]`, the most revenue any tree can earn after round `τ`.
    pub fn tail_bound(&self, dist: &ValuationDistribution) -> f64 {
        self.seller_tail * dist.mean()
    }
}

fn fold_tail(d: &DiscountSequence, tau: usize, who: &str) -> Result<DiscountSequence> {
    if let Some(n) = d.len() {
        if n < tau {
            return Err(Error::invalid(format!("{who} discount has {n} rounds, fewer than τ = {tau}")));
        }
    }
    let mut w = d.prefix(tau);
    w[tau - 1] = d.tail_sum(tau - 1);
    DiscountSequence::explicit(w)
}

pub fn truncate(gamma_b: &DiscountSequence, gamma_s: &DiscountSequence, tau: usize) -> Result<TruncatedGame> {
    if tau == 0 {
        return Err(Error::invalid("τ must be at least 1"));
    }
    Ok(TruncatedGame {
        tau,
        gamma_b: fold_tail(gamma_b, tau, "buyer")?,
        gamma_s: fold_tail(gamma_s, tau, "seller")?,
        seller_tail: gamma_s.tail_sum(tau),
    })
}

/// Optimal `τ`-step revenue and the resulting bracket on the optimum of the
/// full game: `value ≤ OPT ≤ value + Γ^S_τ·E[V]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauStepResult {
    pub tau: usize,
    pub value: f64,
    pub opt_lower: f64,
    pub opt_upper: f64,
    pub optimization: OptimizationResult,
}

impl TauStepResult {
    pub fn tree(&self) -> &PricingTree {
        self.optimization.tree()
    }
}

pub fn tau_step_optimal(
    dist: &ValuationDistribution,
    gamma_b: &DiscountSequence,
    gamma_s: &DiscountSequence,
    tau: usize,
    opts: &OptimizerOptions,
) -> Result<TauStepResult> {
    if tau > MAX_OPTIMIZER_HORIZON {
        return Err(Error::ResourceLimit(format!("τ must be at most {MAX_OPTIMIZER_HORIZON}, got {tau}")));
    }
    let game = truncate(gamma_b, gamma_s, tau)?;
    let mut optimization = maximize_l(dist, &game.gamma_b, &game.gamma_s, tau, opts)?;
    optimization.rate_order_ok = rates_ordered(gamma_b, gamma_s);
    let value = optimization.value;
    Ok(TauStepResult { tau, value, opt_lower: value, opt_upper: value + game.tail_bound(dist), optimization })
}
