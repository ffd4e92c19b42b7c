//! Valuation distributions, the static revenue curve `H(p) = p·P[V ≥ p]`,
//! and the Myerson price (its leftmost global maximizer).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};

/// Grid points scanned by [`myerson_price`] before golden-section refinement.
pub const MYERSON_GRID_POINTS: usize = 10_000;
/// Absolute bracket width at which golden-section refinement stops.
pub const MYERSON_REFINE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValuationDistribution {
    Uniform {
        lo: f64,
        hi: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// `Exp(rate)` conditioned on `0 ≤ V ≤ upper`: density
    /// `rate·e^{-rate·x} / (1 - e^{-rate·upper})` on `[0, upper]`.
    TruncatedExponential {
        rate: f64,
        upper: f64,
    },
}

impl ValuationDistribution {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(Error::invalid(format!("uniform needs 0 <= lo < hi, got ({lo}, {hi})")));
        }
        Ok(Self::Uniform { lo, hi })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha >= 1.0 && beta >= 1.0) {
            // shapes below 1 give an unbounded density at the support edge
            return Err(Error::invalid(format!("beta needs alpha, beta >= 1, got ({alpha}, {beta})")));
        }
        Ok(Self::Beta { alpha, beta })
    }

    pub fn truncated_exponential(rate: f64, upper: f64) -> Result<Self> {
        if !(rate.is_finite() && upper.is_finite() && rate > 0.0 && upper > 0.0) {
            return Err(Error::invalid(format!(
                "truncated exponential needs rate > 0 and upper > 0, got ({rate}, {upper})"
            )));
        }
        Ok(Self::TruncatedExponential { rate, upper })
    }

    /// Closed support interval.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Uniform { lo, hi } => (lo, hi),
            Self::Beta { .. } => (0.0, 1.0),
            Self::TruncatedExponential { upper, .. } => (0.0, upper),
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        let (lo, hi) = self.support();
        if v <= lo {
            return 0.0;
        }
        if v >= hi {
            return 1.0;
        }
        match *self {
            Self::Uniform { lo, hi } => (v - lo) / (hi - lo),
            Self::Beta { alpha, beta } => beta_reg(alpha, beta, v),
            Self::TruncatedExponential { rate, upper } => (-rate * v).exp_m1() / (-rate * upper).exp_m1(),
        }
    }

    /// Survival function `1 - F(v)`.
    pub fn survival(&self, v: f64) -> f64 {
        1.0 - self.cdf(v)
    }

    pub fn pdf(&self, v: f64) -> f64 {
        let (lo, hi) = self.support();
        if v < lo || v > hi {
            return 0.0;
        }
        match *self {
            Self::Uniform { lo, hi } => 1.0 / (hi - lo),
            Self::Beta { alpha, beta } => {
                let left = match (alpha == 1.0, v == 0.0) {
                    (true, _) => 0.0,
                    (false, true) => return 0.0,
                    (false, false) => (alpha - 1.0) * v.ln(),
                };
                let right = match (beta == 1.0, v == 1.0) {
                    (true, _) => 0.0,
                    (false, true) => return 0.0,
                    (false, false) => (beta - 1.0) * (-v).ln_1p(),
                };
                (left + right - ln_beta(alpha, beta)).exp()
            }
            Self::TruncatedExponential { rate, upper } => rate * (-rate * v).exp() / -(-rate * upper).exp_m1(),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::Beta { alpha, beta } => alpha / (alpha + beta),
            Self::TruncatedExponential { rate, upper } => 1.0 / rate - upper / (rate * upper).exp_m1(),
        }
    }

    /// Smallest `v` in the support with `F(v) ≥ level`, by bisection.
    pub fn quantile(&self, level: f64) -> f64 {
        let (mut lo, mut hi) = self.support();
        if level <= 0.0 {
            return lo;
        }
        if level >= 1.0 {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) >= level {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1.0) {
                break;
            }
        }
        hi
    }
}

impl fmt::Display for ValuationDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}"),
            Self::Beta { alpha, beta } => write!(f, "beta:{alpha},{beta}"),
            Self::TruncatedExponential { rate, upper } => write!(f, "texp:{rate},{upper}"),
        }
    }
}

/// Parses `uniform:lo,hi`, `beta:alpha,beta` and `texp:rate,upper`.
impl FromStr for ValuationDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::invalid(format!("malformed distribution spec '{s}' (expected e.g. uniform:0,1, beta:4,2, texp:1,1)"))
        };
        let (family, params) = s.trim().split_once(':').ok_or_else(bad)?;
        let params: Vec<f64> = params
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [a, b] = params[..] else {
            return Err(bad());
        };
        match family.trim().to_ascii_lowercase().as_str() {
            "uniform" | "u" => Self::uniform(a, b),
            "beta" => Self::beta(a, b),
            "texp" => Self::truncated_exponential(a, b),
            _ => Err(bad()),
        }
    }
}

/// `H(p) = p·(1 - F(p))`; continuity makes `P[V ≥ p] = P[V > p]`.
pub fn static_revenue(dist: &ValuationDistribution, price: f64) -> Result<f64> {
    if !(price >= 0.0) {
        return Err(Error::invalid(format!("price must be non-negative, got {price}")));
    }
    Ok(price * dist.survival(price))
}

/// Myerson price `p*` and `H(p*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MyersonPrice {
    pub price: f64,
    pub revenue: f64,
}

/// Leftmost global maximizer of `H` over `[0, sup support]`: a dense grid
/// scan followed by golden-section refinement inside the winning bracket.
/// The scan makes no unimodality assumption.
pub fn myerson_price(dist: &ValuationDistribution) -> MyersonPrice {
    let h = |p: f64| p * dist.survival(p);
    let (_, hi) = dist.support();
    let n = MYERSON_GRID_POINTS;
    let step = hi / n as f64;
    let (mut best_i, mut best_h) = (0, h(0.0));
    for i in 1..=n {
        let val = h(i as f64 * step);
        if val > best_h {
            best_i = i;
            best_h = val;
        }
    }
    let a = best_i.saturating_sub(1) as f64 * step;
    let b = ((best_i + 1).min(n)) as f64 * step;
    let (mut p, mut hp) = golden_section_max(h, a, b, MYERSON_REFINE_TOL);
    // H is flat at p*, so the search above resolves p* only to ~sqrt(eps);
    // the first-order condition pins it down to rounding
    if let Some(root) = first_order_root(dist, a, b) {
        if h(root) >= hp {
            (p, hp) = (root, h(root));
        }
    }
    let (price, revenue) = if hp >= best_h { (p, hp) } else { (best_i as f64 * step, best_h) };
    MyersonPrice { price, revenue }
}

/// Root of `H'(p) = 1 - F(p) - p·f(p)` on `[a, b]` by bisection, if `H'`
/// changes sign from positive to negative there.
fn first_order_root(dist: &ValuationDistribution, mut a: f64, mut b: f64) -> Option<f64> {
    let d = |p: f64| dist.survival(p) - p * dist.pdf(p);
    if !(d(a) > 0.0 && d(b) < 0.0) {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if d(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Some(0.5 * (a + b))
}

/// Maximizes `f` on `[a, b]` by golden-section search. Returns the best
/// point seen, including the bracket ends.
pub(crate) fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        // ties move right-to-left so the leftmost maximizer is kept
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [(a, f(a)), (mid, f(mid)), (b, f(b))]
        .into_iter()
        .fold((mid, f(mid)), |best, cand| if cand.1 > best.1 { cand } else { best })
}
