//! Discount sequences for the seller's revenue and the buyer's surplus.
//!
//! A sequence holds one non-negative utility weight per round. Finite
//! sequences carry their weights explicitly; geometric sequences may be
//! infinite, in which case weights are generated on demand and every tail
//! sum is evaluated in closed form.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of rounds of a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Horizon {
    Finite(usize),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiscountKind {
    Explicit,
    Geometric { rate: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscountSequence {
    kind: DiscountKind,
    /// Explicit weights; empty for an infinite geometric sequence.
    weights: Vec<f64>,
    infinite: bool,
    total: f64,
}

/// Which validity rule a weight sequence breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscountRule {
    Empty,
    NonFinite,
    Negative,
    /// A positive weight follows a zero weight.
    ZeroBeforePositive,
    /// The first weight must be positive so the sequence can be rescaled to start at 1.
    NonPositiveFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscountViolation {
    pub rule: DiscountRule,
    /// 0-based index of the offending weight.
    pub index: usize,
}

impl fmt::Display for DiscountViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.rule {
            DiscountRule::Empty => "sequence is empty",
            DiscountRule::NonFinite => "weight is not finite",
            DiscountRule::Negative => "weight is negative",
            DiscountRule::ZeroBeforePositive => "positive weight follows a zero weight",
            DiscountRule::NonPositiveFirst => "first weight is not positive",
        };
        write!(f, "{what} (index {})", self.index)
    }
}

/// Checks the validity rules on a raw weight vector. Reports the first
/// violation in index order.
pub fn validate_weights(weights: &[f64]) -> std::result::Result<(), DiscountViolation> {
    if weights.is_empty() {
        return Err(DiscountViolation { rule: DiscountRule::Empty, index: 0 });
    }
    let mut seen_zero = false;
    for (index, &w) in weights.iter().enumerate() {
        let rule = if !w.is_finite() {
            Some(DiscountRule::NonFinite)
        } else if w < 0.0 {
            Some(DiscountRule::Negative)
        } else if w > 0.0 && seen_zero {
            Some(DiscountRule::ZeroBeforePositive)
        } else if index == 0 && w == 0.0 {
            Some(DiscountRule::NonPositiveFirst)
        } else {
            None
        };
        if let Some(rule) = rule {
            return Err(DiscountViolation { rule, index });
        }
        seen_zero |= w == 0.0;
    }
    Ok(())
}

/// Validates a discount sequence against every invariant of the type.
pub fn validate_discount(d: &DiscountSequence) -> std::result::Result<(), DiscountViolation> {
    if d.infinite {
        return Ok(());
    }
    validate_weights(&d.weights)
}

/// Geometric discount `rate^(t-1)`, truncated at a finite horizon or infinite.
pub fn make_geometric_discount(rate: f64, horizon: Horizon) -> Result<DiscountSequence> {
    DiscountSequence::geometric(rate, horizon)
}

impl DiscountSequence {
    pub fn geometric(rate: f64, horizon: Horizon) -> Result<Self> {
        if !(rate > 0.0 && rate < 1.0) {
            return Err(Error::invalid(format!("geometric rate must lie in (0, 1), got {rate}")));
        }
        match horizon {
            Horizon::Finite(0) => Err(Error::invalid("horizon must be positive")),
            Horizon::Finite(n) => {
                let weights: Vec<f64> = (0..n).map(|t| rate.powi(t as i32)).collect();
                let total = (1.0 - rate.powi(n as i32)) / (1.0 - rate);
                Ok(Self { kind: DiscountKind::Geometric { rate }, weights, infinite: false, total })
            }
            Horizon::Infinite => Ok(Self {
                kind: DiscountKind::Geometric { rate },
                weights: Vec::new(),
                infinite: true,
                total: 1.0 / (1.0 - rate),
            }),
        }
    }

    pub fn explicit(weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights).map_err(|v| Error::invalid(format!("discount: {v}")))?;
        let total = weights.iter().sum();
        Ok(Self { kind: DiscountKind::Explicit, weights, infinite: false, total })
    }

    pub fn kind(&self) -> DiscountKind {
        self.kind
    }

    pub fn rate(&self) -> Option<f64> {
        match self.kind {
            DiscountKind::Geometric { rate } => Some(rate),
            DiscountKind::Explicit => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.infinite
    }

    pub fn horizon(&self) -> Horizon {
        if self.infinite {
            Horizon::Infinite
        } else {
            Horizon::Finite(self.weights.len())
        }
    }

    /// Number of rounds; `None` for infinite sequences.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        (!self.infinite).then_some(self.weights.len())
    }

    /// Finite weights. Empty for infinite sequences; use [`Self::prefix`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of the round with 0-based index `t`.
    pub fn weight(&self, t: usize) -> f64 {
        match (self.infinite, self.kind) {
            (true, DiscountKind::Geometric { rate }) => rate.powi(t as i32),
            _ => self.weights.get(t).copied().unwrap_or(0.0),
        }
    }

    pub fn prefix(&self, n: usize) -> Vec<f64> {
        (0..n).map(|t| self.weight(t)).collect()
    }

    /// Sum of all weights.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// Sum of weights from 0-based round `from` onwards.
    pub fn tail_sum(&self, from: usize) -> f64 {
        match (self.infinite, self.kind) {
            (true, DiscountKind::Geometric { rate }) => rate.powi(from as i32) / (1.0 - rate),
            _ => self.weights.iter().skip(from).sum(),
        }
    }

    /// Rescales so that the first weight is 1. Optimal strategies and
    /// algorithms are unchanged by positive rescaling.
    pub fn normalized(&self) -> Self {
        let first = self.weight(0);
        if first == 1.0 || first <= 0.0 {
            return self.clone();
        }
        // infinite geometric sequences start at 1, so only explicit weights reach here
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w /= first);
        out.total /= first;
        out.kind = DiscountKind::Explicit;
        out
    }

    /// Adds independent uniform jitter in `[0, eps)` to every weight after the
    /// first. Used to restore regularity of a degenerate discount.
    pub fn perturbed<R: Rng>(&self, eps: f64, rng: &mut R) -> Result<Self> {
        let n = self.len().ok_or_else(|| Error::invalid("cannot perturb an infinite discount sequence"))?;
        let mut weights = self.weights.clone();
        for w in weights.iter_mut().take(n).skip(1) {
            if *w > 0.0 {
                *w += eps * rng.random::<f64>();
            }
        }
        Self::explicit(weights)
    }

    /// Discount rates `ν_t = γ_{t+1} / γ_t` (0 where `γ_t = 0`) over the
    /// first `n` rounds, i.e. `n - 1` values.
    pub fn discount_rates_upto(&self, n: usize) -> Vec<f64> {
        (0..n.saturating_sub(1))
            .map(|t| {
                let cur = self.weight(t);
                if cur > 0.0 {
                    self.weight(t + 1) / cur
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Discount rates of a finite sequence: one value per consecutive pair.
/// For an infinite geometric sequence the single constant rate is returned.
pub fn discount_rates(d: &DiscountSequence) -> Vec<f64> {
    match d.len() {
        Some(n) => d.discount_rates_upto(n),
        None => vec![d.rate().unwrap_or(0.0)],
    }
}

fn common_length(a: &DiscountSequence, b: &DiscountSequence) -> Option<usize> {
    match (a.len(), b.len()) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (Some(x), None) | (None, Some(x)) => Some(x + 1),
        (None, None) => None,
    }
}

/// True when `ν(lower) ≤ ν(upper)` componentwise, i.e. `upper` is locally
/// at least as patient as `lower` in every round.
pub fn rates_ordered(lower: &DiscountSequence, upper: &DiscountSequence) -> bool {
    const TOL: f64 = 1e-12;
    match common_length(lower, upper) {
        None => lower.rate().unwrap_or(0.0) <= upper.rate().unwrap_or(0.0) + TOL,
        Some(n) => lower.discount_rates_upto(n).iter().zip(upper.discount_rates_upto(n)).all(|(l, u)| *l <= u + TOL),
    }
}

/// True when `lower_t ≤ upper_t` for every round.
pub fn pointwise_dominated(lower: &DiscountSequence, upper: &DiscountSequence) -> bool {
    const TOL: f64 = 1e-12;
    match common_length(lower, upper) {
        None => lower.rate().unwrap_or(0.0) <= upper.rate().unwrap_or(0.0) + TOL,
        Some(n) => (0..n).all(|t| lower.weight(t) <= upper.weight(t) + TOL),
    }
}
