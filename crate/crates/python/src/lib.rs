//! Python module `rppa`: distributions, discounts, pricing trees, the buyer
//! oracle, the optimizer and the closed-form schemes.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rppa_core as core;
use rppa_core::{Error, Horizon};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Internal(_) | Error::SingularMatrix(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn horizon(h: Option<usize>) -> Horizon {
    h.map_or(Horizon::Infinite, Horizon::Finite)
}

/// Valuation distribution, built from a spec such as `"beta:4,2"`.
#[pyclass(module = "rppa", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Distribution(core::ValuationDistribution);

#[pymethods]
impl Distribution {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        spec.parse().map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn uniform(lo: f64, hi: f64) -> PyResult<Self> {
        core::ValuationDistribution::uniform(lo, hi).map(Self).py()
    }

    #[staticmethod]
    fn beta(alpha: f64, beta: f64) -> PyResult<Self> {
        core::ValuationDistribution::beta(alpha, beta).map(Self).py()
    }

    #[staticmethod]
    fn texp(rate: f64, upper: f64) -> PyResult<Self> {
        core::ValuationDistribution::truncated_exponential(rate, upper).map(Self).py()
    }

    fn support(&self) -> (f64, f64) {
        self.0.support()
    }

    fn cdf(&self, v: f64) -> f64 {
        self.0.cdf(v)
    }

    fn pdf(&self, v: f64) -> f64 {
        self.0.pdf(v)
    }

    fn mean(&self) -> f64 {
        self.0.mean()
    }

    fn quantile(&self, level: f64) -> f64 {
        self.0.quantile(level)
    }

    /// `(price, revenue)` of the one-shot Myerson price.
    fn myerson(&self) -> (f64, f64) {
        let m = core::myerson_price(&self.0);
        (m.price, m.revenue)
    }

    fn __repr__(&self) -> String {
        format!("Distribution('{}')", self.0)
    }
}

/// Discount weights of one player.
#[pyclass(module = "rppa", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Discount(core::DiscountSequence);

#[pymethods]
impl Discount {
    /// `γ_t = rate^(t-1)`; infinite when `horizon` is None.
    #[staticmethod]
    #[pyo3(signature = (rate, horizon=None))]
    fn geometric(rate: f64, horizon: Option<usize>) -> PyResult<Self> {
        core::make_geometric_discount(rate, self::horizon(horizon)).map(Self).py()
    }

    #[staticmethod]
    fn explicit(weights: Vec<f64>) -> PyResult<Self> {
        core::DiscountSequence::explicit(weights).map(Self).py()
    }

    /// Rounds, or None for an infinite sequence.
    #[getter]
    fn horizon(&self) -> Option<usize> {
        self.0.len()
    }

    fn weight(&self, t: usize) -> f64 {
        self.0.weight(t)
    }

    fn prefix(&self, n: usize) -> Vec<f64> {
        self.0.prefix(n)
    }

    fn total(&self) -> f64 {
        self.0.total()
    }

    fn tail_sum(&self, start: usize) -> f64 {
        self.0.tail_sum(start)
    }

    fn __repr__(&self) -> String {
        match (self.0.rate(), self.0.len()) {
            (Some(r), Some(n)) => format!("Discount.geometric({r}, {n})"),
            (Some(r), None) => format!("Discount.geometric({r})"),
            _ => format!("Discount.explicit({:?})", self.0.weights()),
        }
    }
}

/// Prices on a complete binary tree. Node names are accept/reject
/// histories written with '1'/'0'; the root is "".
#[pyclass(module = "rppa", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PricingTree(core::PricingTree);

#[pymethods]
impl PricingTree {
    /// `prices` in heap order: root, then the children of node `i` at
    /// `2i+1` (reject) and `2i+2` (accept).
    #[new]
    fn new(horizon: usize, prices: Vec<f64>) -> PyResult<Self> {
        core::PricingTree::new(horizon, prices).map(Self).py()
    }

    #[staticmethod]
    fn constant(horizon: usize, price: f64) -> PyResult<Self> {
        core::PricingTree::constant(horizon, price).map(Self).py()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        core::PricingTree::from_json_str(text).map(Self).py()
    }

    fn to_json(&self) -> String {
        self.0.to_json_string()
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.0.horizon()
    }

    #[getter]
    fn prices(&self) -> Vec<f64> {
        self.0.prices().to_vec()
    }

    fn price(&self, node: &str) -> PyResult<f64> {
        self.0.price(node).ok_or_else(|| PyValueError::new_err(format!("no node '{node}' in the tree")))
    }

    fn __repr__(&self) -> String {
        format!("PricingTree({}, {:?})", self.0.horizon(), self.0.prices())
    }
}

#[pyclass(module = "rppa", frozen, get_all)]
struct BestResponse {
    /// Accept/reject decisions by round, as a '1'/'0' string.
    strategy: String,
    surplus: f64,
    revenue: f64,
    quantity: f64,
    tie_count: usize,
}

#[pyfunction]
fn best_response(tree: &PricingTree, valuation: f64, gamma_b: &Discount, gamma_s: &Discount) -> PyResult<BestResponse> {
    let r = core::best_response(&tree.0, valuation, &gamma_b.0, &gamma_s.0).py()?;
    Ok(BestResponse {
        strategy: r.strategy.to_string(),
        surplus: r.surplus,
        revenue: r.revenue,
        quantity: r.quantity,
        tie_count: r.tie_count,
    })
}

/// Seller revenue against a best-responding buyer, integrated over `dist`.
#[pyfunction]
#[pyo3(signature = (tree, dist, gamma_b, gamma_s, n_quadrature=256))]
fn expected_strategic_revenue(
    tree: &PricingTree,
    dist: &Distribution,
    gamma_b: &Discount,
    gamma_s: &Discount,
    n_quadrature: usize,
) -> PyResult<f64> {
    core::expected_strategic_revenue(&tree.0, &dist.0, &gamma_b.0, &gamma_s.0, n_quadrature).py()
}

#[pyclass(module = "rppa", frozen, get_all)]
struct OptimizationResult {
    tree: PricingTree,
    v_star: Vec<f64>,
    value: f64,
    iterations: usize,
    starts: usize,
    converged: bool,
    kkt_residual: f64,
    rate_order_ok: bool,
    condition_w: f64,
    condition_xi: f64,
}

impl From<core::OptimizationResult> for OptimizationResult {
    fn from(r: core::OptimizationResult) -> Self {
        Self {
            tree: PricingTree(r.tree().clone()),
            v_star: r.v_star,
            value: r.value,
            iterations: r.iterations,
            starts: r.starts,
            converged: r.converged,
            kkt_residual: r.kkt_residual,
            rate_order_ok: r.rate_order_ok,
            condition_w: r.condition_w,
            condition_xi: r.condition_xi,
        }
    }
}

fn options(seed: u64, starts: Option<usize>, max_iter: Option<usize>, tol: Option<f64>) -> core::OptimizerOptions {
    let mut o = core::OptimizerOptions { seed, starts, ..Default::default() };
    if let Some(m) = max_iter {
        o.max_iter = m;
    }
    if let Some(t) = tol {
        o.tol = t;
    }
    o
}

/// Optimal completely active tree of a finite game with `horizon` rounds.
#[pyfunction]
#[pyo3(signature = (dist, gamma_b, gamma_s, horizon, seed=0, starts=None, max_iter=None, tol=None))]
#[allow(clippy::too_many_arguments)]
fn maximize(
    py: Python<'_>,
    dist: &Distribution,
    gamma_b: &Discount,
    gamma_s: &Discount,
    horizon: usize,
    seed: u64,
    starts: Option<usize>,
    max_iter: Option<usize>,
    tol: Option<f64>,
) -> PyResult<OptimizationResult> {
    let o = options(seed, starts, max_iter, tol);
    let r = py.detach(|| core::maximize_l(&dist.0, &gamma_b.0, &gamma_s.0, horizon, &o)).py()?;
    Ok(r.into())
}

#[pyclass(module = "rppa", frozen, get_all)]
struct TauStepResult {
    tau: usize,
    value: f64,
    opt_lower: f64,
    opt_upper: f64,
    optimization: Py<OptimizationResult>,
}

/// Optimal `tau`-round truncation of an infinite game, with the bracket
/// `opt_lower ≤ OPT ≤ opt_upper` on the full optimum.
#[pyfunction]
#[pyo3(signature = (dist, gamma_b, gamma_s, tau, seed=0, starts=None))]
fn tau_step_optimal(
    py: Python<'_>,
    dist: &Distribution,
    gamma_b: &Discount,
    gamma_s: &Discount,
    tau: usize,
    seed: u64,
    starts: Option<usize>,
) -> PyResult<TauStepResult> {
    let o = options(seed, starts, None, None);
    let r = py.detach(|| core::tau_step_optimal(&dist.0, &gamma_b.0, &gamma_s.0, tau, &o)).py()?;
    Ok(TauStepResult {
        tau: r.tau,
        value: r.value,
        opt_lower: r.opt_lower,
        opt_upper: r.opt_upper,
        optimization: Py::new(py, OptimizationResult::from(r.optimization))?,
    })
}

/// `(price, revenue)` of the constant Myerson scheme.
#[pyfunction]
fn constant_myerson(dist: &Distribution, gamma_s: &Discount) -> (f64, f64) {
    let c = core::constant_myerson(&dist.0, &gamma_s.0);
    (c.price, c.revenue)
}

#[pyclass(module = "rppa", frozen, get_all)]
struct BigDeal {
    first_price: f64,
    penalty: f64,
    revenue: f64,
    warning: Option<String>,
}

#[pyfunction]
fn big_deal(dist: &Distribution, gamma_b: &Discount, gamma_s: &Discount) -> PyResult<BigDeal> {
    let b = core::big_deal(&dist.0, &gamma_b.0, &gamma_s.0).py()?;
    Ok(BigDeal { first_price: b.first_price, penalty: b.penalty, revenue: b.revenue, warning: b.warning })
}

/// `(gamma_b, gamma_s, seller_tail)` of the game cut after `tau` rounds.
#[pyfunction]
fn truncate(gamma_b: &Discount, gamma_s: &Discount, tau: usize) -> PyResult<(Discount, Discount, f64)> {
    let g = core::truncate(&gamma_b.0, &gamma_s.0, tau).py()?;
    Ok((Discount(g.gamma_b), Discount(g.gamma_s), g.seller_tail))
}

#[pymodule]
fn rppa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Distribution>()?;
    m.add_class::<Discount>()?;
    m.add_class::<PricingTree>()?;
    m.add_class::<BestResponse>()?;
    m.add_class::<OptimizationResult>()?;
    m.add_class::<TauStepResult>()?;
    m.add_class::<BigDeal>()?;
    m.add_function(wrap_pyfunction!(best_response, m)?)?;
    m.add_function(wrap_pyfunction!(expected_strategic_revenue, m)?)?;
    m.add_function(wrap_pyfunction!(maximize, m)?)?;
    m.add_function(wrap_pyfunction!(tau_step_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(constant_myerson, m)?)?;
    m.add_function(wrap_pyfunction!(big_deal, m)?)?;
    m.add_function(wrap_pyfunction!(truncate, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_horizon_is_none() {
        assert_eq!(horizon(None), Horizon::Infinite);
        assert_eq!(horizon(Some(3)), Horizon::Finite(3));
    }

    #[test]
    fn wrappers_forward_to_the_core() {
        let d = Distribution::new("uniform:0,1").ok().unwrap();
        assert_eq!(d.myerson(), (0.5, 0.25));
        let g = Discount::geometric(0.5, Some(2)).ok().unwrap();
        assert_eq!(g.total(), 1.5);
        assert_eq!(g.horizon(), Some(2));
        let t = PricingTree::constant(2, 0.5).ok().unwrap();
        assert_eq!(constant_myerson(&d, &g), (0.5, 0.375));
        assert!(PricingTree::new(2, vec![0.5]).is_err());
        assert_eq!(t.prices(), vec![0.5; 3]);
    }
}
