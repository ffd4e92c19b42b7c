//! Buyer strategies and the surplus/revenue arithmetic of a single play.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discount::DiscountSequence;
use crate::error::{Error, Result};
use crate::tree::PricingTree;

/// Accept/reject decisions for every round. Round `t` (0-based) is stored
/// in bit `len - 1 - t`, so the numeric value orders strategies the same
/// way as their binary strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BuyerStrategy {
    bits: u32,
    len: u8,
}

impl BuyerStrategy {
    pub fn from_bits(bits: u32, len: usize) -> Self {
        assert!((1..=31).contains(&len), "strategy length must be in 1..=31");
        assert!(bits >> len == 0, "strategy bits exceed its length");
        Self { bits, len: len as u8 }
    }

    pub fn from_decisions(decisions: &[bool]) -> Self {
        let bits = decisions.iter().fold(0u32, |acc, &d| (acc << 1) | d as u32);
        Self::from_bits(bits, decisions.len())
    }

    pub fn all_reject(len: usize) -> Self {
        Self::from_bits(0, len)
    }

    pub fn all_accept(len: usize) -> Self {
        Self::from_bits((1u32 << len) - 1, len)
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    /// Decision at 0-based round `t`.
    pub fn accepts(&self, t: usize) -> bool {
        self.bits >> (self.len() - 1 - t) & 1 == 1
    }

    pub fn decisions(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |t| self.accepts(t))
    }

    /// Discounted quantity `Σ γ_t a_t`.
    pub fn quantity(&self, gamma: &[f64]) -> f64 {
        self.decisions().zip(gamma).filter(|(a, _)| *a).map(|(_, g)| g).sum()
    }

    /// All `2^len` strategies in increasing binary value.
    pub fn enumerate(len: usize) -> impl Iterator<Item = Self> {
        (0..1u32 << len).map(move |b| Self::from_bits(b, len))
    }
}

impl fmt::Display for BuyerStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for a in self.decisions() {
            f.write_str(if a { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BuyerStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 31 {
            return Err(Error::invalid(format!("strategy must have 1..=31 decisions, got '{s}'")));
        }
        let decisions = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::invalid(format!("strategy '{s}' contains '{c}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_decisions(&decisions))
    }
}

/// Result of playing one strategy against a tree at a fixed valuation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub strategy: BuyerStrategy,
    /// Buyer surplus `Σ γB_t a_t (v - p_t)`.
    pub surplus: f64,
    /// Seller revenue `Σ γS_t a_t p_t`.
    pub revenue: f64,
    /// Discounted quantity `Σ γB_t a_t`.
    pub quantity: f64,
    /// Payment discounted with the buyer's weights, `Σ γB_t a_t p_t`.
    /// The surplus line is `quantity * v - payment`.
    pub payment: f64,
}

fn check_strategy(tree: &PricingTree, strategy: &BuyerStrategy) -> Result<()> {
    if strategy.len() != tree.horizon() {
        return Err(Error::invalid(format!(
            "strategy has {} rounds but the tree has horizon {}",
            strategy.len(),
            tree.horizon()
        )));
    }
    Ok(())
}

pub(crate) fn finite_weights<'a>(d: &'a DiscountSequence, horizon: usize, who: &str) -> Result<&'a [f64]> {
    match d.len() {
        Some(n) if n == horizon => Ok(d.weights()),
        Some(n) => Err(Error::invalid(format!("{who} discount has {n} rounds but the game has {horizon}"))),
        None => Err(Error::invalid(format!("{who} discount is infinite; truncate it to the game horizon first"))),
    }
}

/// Prices offered along the path of `strategy`. Prices are offered whether
/// or not they are accepted.
pub fn price_path(tree: &PricingTree, strategy: &BuyerStrategy) -> Result<Vec<f64>> {
    check_strategy(tree, strategy)?;
    let mut idx = 0usize;
    let mut out = Vec::with_capacity(strategy.len());
    for a in strategy.decisions() {
        out.push(tree.price_at_index(idx));
        idx = 2 * idx + 1 + a as usize;
    }
    Ok(out)
}

pub fn evaluate(
    tree: &PricingTree,
    strategy: &BuyerStrategy,
    valuation: f64,
    gamma_b: &DiscountSequence,
    gamma_s: &DiscountSequence,
) -> Result<GameOutcome> {
    if !(valuation >= 0.0) {
        return Err(Error::invalid(format!("valuation must be non-negative, got {valuation}")));
    }
    let gb = finite_weights(gamma_b, tree.horizon(), "buyer")?;
    let gs = finite_weights(gamma_s, tree.horizon(), "seller")?;
    let path = price_path(tree, strategy)?;
    let line = StrategyLine::compute(strategy, &path, gb, gs);
    Ok(line.outcome(valuation))
}

/// The affine surplus `quantity * v - payment` of a strategy, plus its
/// seller revenue. Independent of the valuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyLine {
    pub strategy: BuyerStrategy,
    pub quantity: f64,
    pub payment: f64,
    pub revenue: f64,
}

impl StrategyLine {
    fn compute(strategy: &BuyerStrategy, path: &[f64], gb: &[f64], gs: &[f64]) -> Self {
        let (mut quantity, mut payment, mut revenue) = (0.0, 0.0, 0.0);
        for (t, a) in strategy.decisions().enumerate() {
            if a {
                quantity += gb[t];
                payment += gb[t] * path[t];
                revenue += gs[t] * path[t];
            }
        }
        Self { strategy: *strategy, quantity, payment, revenue }
    }

    pub fn surplus(&self, valuation: f64) -> f64 {
        self.quantity * valuation - self.payment
    }

    pub fn outcome(&self, valuation: f64) -> GameOutcome {
        GameOutcome {
            strategy: self.strategy,
            surplus: self.surplus(valuation),
            revenue: self.revenue,
            quantity: self.quantity,
            payment: self.payment,
        }
    }
}

/// Surplus lines of every strategy against one tree, in increasing binary
/// order of the strategies.
pub fn strategy_lines(
    tree: &PricingTree,
    gamma_b: &DiscountSequence,
    gamma_s: &DiscountSequence,
) -> Result<Vec<StrategyLine>> {
    let t = tree.horizon();
    let gb = finite_weights(gamma_b, t, "buyer")?;
    let gs = finite_weights(gamma_s, t, "seller")?;
    let mut path = vec![0.0; t];
    Ok(BuyerStrategy::enumerate(t)
        .map(|s| {
            let mut idx = 0usize;
            for (round, a) in s.decisions().enumerate() {
                path[round] = tree.price_at_index(idx);
                idx = 2 * idx + 1 + a as usize;
            }
            StrategyLine::compute(&s, &path, gb, gs)
        })
        .collect())
}
