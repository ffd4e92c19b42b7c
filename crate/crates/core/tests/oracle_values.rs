//! Regression values produced by independent brute-force oracles.

use approx::assert_abs_diff_eq;
use rppa_core::{constant_myerson, make_geometric_discount, myerson_price, Horizon, ValuationDistribution};

const GRID: usize = 1_000_000;

/// Argmax of `p(1 - F(p))` over `GRID + 1` equispaced points of `[0, 1]`,
/// using a closed-form CDF independent of the library.
fn grid_oracle(cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    (0..=GRID)
        .map(|i| i as f64 / GRID as f64)
        .map(|p| (p, p * (1.0 - cdf(p))))
        .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

fn beta42_cdf(x: f64) -> f64 {
    x.powi(4) * (5.0 - 4.0 * x)
}

fn texp11_cdf(x: f64) -> f64 {
    (1.0 - (-x).exp()) / (1.0 - (-1f64).exp())
}

// frozen from grid_oracle
const BETA42_PRICE: f64 = 0.535692;
const BETA42_REVENUE: f64 = 0.40964825196671095;
const TEXP11_PRICE: f64 = 0.432857;
const TEXP11_REVENUE: f64 = 0.19226538934991605;

#[test]
fn grid_oracle_reproduces_frozen_values() {
    let (p, h) = grid_oracle(beta42_cdf);
    assert_eq!((p, h), (BETA42_PRICE, BETA42_REVENUE));
    let (p, h) = grid_oracle(texp11_cdf);
    assert_eq!((p, h), (TEXP11_PRICE, TEXP11_REVENUE));
}

#[test]
fn beta_myerson_matches_oracle() {
    let m = myerson_price(&ValuationDistribution::beta(4.0, 2.0).unwrap());
    assert_abs_diff_eq!(m.price, BETA42_PRICE, epsilon = 1e-6);
    assert!(m.revenue >= BETA42_REVENUE);
    assert_abs_diff_eq!(m.revenue, BETA42_REVENUE, epsilon = 1e-11);
}

#[test]
fn truncated_exponential_myerson_matches_oracle() {
    let m = myerson_price(&ValuationDistribution::truncated_exponential(1.0, 1.0).unwrap());
    assert_abs_diff_eq!(m.price, TEXP11_PRICE, epsilon = 1e-6);
    assert!(m.revenue >= TEXP11_REVENUE);
    assert_abs_diff_eq!(m.revenue, TEXP11_REVENUE, epsilon = 1e-11);
}

#[test]
fn library_cdfs_agree_with_closed_forms() {
    let beta = ValuationDistribution::beta(4.0, 2.0).unwrap();
    let texp = ValuationDistribution::truncated_exponential(1.0, 1.0).unwrap();
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        assert_abs_diff_eq!(beta.cdf(x), beta42_cdf(x), epsilon = 1e-12);
        assert_abs_diff_eq!(texp.cdf(x), texp11_cdf(x), epsilon = 1e-12);
    }
}

#[test]
fn constant_scheme_for_beta() {
    let gs = make_geometric_discount(0.8, Horizon::Finite(3)).unwrap();
    let c = constant_myerson(&ValuationDistribution::beta(4.0, 2.0).unwrap(), &gs);
    assert_abs_diff_eq!(c.revenue, 2.44 * BETA42_REVENUE, epsilon = 1e-10);
}
