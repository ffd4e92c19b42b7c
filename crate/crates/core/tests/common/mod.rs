//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rppa_core::{make_geometric_discount, DiscountSequence, Horizon, PricingTree, ValuationDistribution};

pub fn geo(rate: f64, horizon: usize) -> DiscountSequence {
    make_geometric_discount(rate, Horizon::Finite(horizon)).unwrap()
}

pub fn geo_inf(rate: f64) -> DiscountSequence {
    make_geometric_discount(rate, Horizon::Infinite).unwrap()
}

pub fn uniform() -> ValuationDistribution {
    ValuationDistribution::uniform(0.0, 1.0).unwrap()
}

pub fn beta42() -> ValuationDistribution {
    ValuationDistribution::beta(4.0, 2.0).unwrap()
}

pub fn texp11() -> ValuationDistribution {
    ValuationDistribution::truncated_exponential(1.0, 1.0).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Tree with independent prices uniform on `[0, max_price]`.
pub fn random_tree(rng: &mut impl Rng, horizon: usize, max_price: f64) -> PricingTree {
    PricingTree::from_fn(horizon, |_| rng.random_range(0.0..=max_price)).unwrap()
}

/// Sorted uniform draws on `[lo, hi]`, a point of the ordered cone.
pub fn random_delta_point(rng: &mut impl Rng, k: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(lo..=hi)).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Equispaced grid of `n` points on `[lo, hi]`.
pub fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}
