//! Reduction of optimal pricing to a finite-dimensional program.
//!
//! For a regular buyer discount the `2^T` strategies are totally ordered by
//! their discounted quantity `q_j = γB·a^j`. A tree is completely active
//! when every strategy owns a non-empty valuation interval; such trees are
//! in linear bijection with the ordered cone
//! `Δ^k = {0 ≤ v_1 ≤ … ≤ v_k}`, `k = 2^T - 1`, where `v_j` is the valuation
//! at which the buyer switches from `a^{j-1}` to `a^j`:
//!
//! ```text
//! v = W·A,   W = Z·J·K(γB, γB)
//! E[revenue] = L(v) = (1 - F(v))ᵀ·Ξ·v,   Ξ = J·K(γB, γS)·K(γB, γB)⁻¹·J⁻¹·Z⁻¹
//! ```
//!
//! `A` lists the prices in the in-order node order (left subtree, node,
//! right subtree); `J` is bidiagonal with 1 on the diagonal and -1 below it;
//! `Z = diag(1 / (q_j - q_{j-1}))`; and `K(γB, γ)_{ij} = γ_t·a^i_t` when the
//! path of `a^i` visits node `n_j` at round `t`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::discount::DiscountSequence;
use crate::distribution::ValuationDistribution;
use crate::error::{Error, Result};
use crate::format::format_g;
use crate::game::{finite_weights, BuyerStrategy};
use crate::tree::{node_index, PricingTree};

/// Quantities closer than this (relative to `Γ^B`) count as equal.
pub const REGULARITY_TOLERANCE: f64 = 1e-12;
/// Slack allowed when testing membership of `Δ^k` and price signs.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-12;
/// Largest horizon for which the dense system is built.
pub const MAX_REDUCTION_HORIZON: usize = 10;

/// Strategies `a^0 … a^k` sorted by discounted quantity under `γB`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyOrder {
    pub strategies: Vec<BuyerStrategy>,
    pub quantities: Vec<f64>,
}

fn sorted_quantities(gamma_b: &DiscountSequence, horizon: usize) -> Result<StrategyOrder> {
    if horizon == 0 || horizon > MAX_REDUCTION_HORIZON {
        return Err(Error::invalid(format!("reduction horizon must be in 1..={MAX_REDUCTION_HORIZON}, got {horizon}")));
    }
    let gb = finite_weights(gamma_b, horizon, "buyer")?;
    let mut pairs: Vec<(BuyerStrategy, f64)> = BuyerStrategy::enumerate(horizon).map(|s| (s, s.quantity(gb))).collect();
    pairs.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (strategies, quantities) = pairs.into_iter().unzip();
    Ok(StrategyOrder { strategies, quantities })
}

fn first_collision(order: &StrategyOrder) -> Option<Error> {
    let scale = order.quantities.last().copied().unwrap_or(1.0).max(1.0);
    (1..order.quantities.len()).find_map(|j| {
        let (q0, q1) = (order.quantities[j - 1], order.quantities[j]);
        (q1 - q0 <= REGULARITY_TOLERANCE * scale).then(|| {
            let (a, b) = (order.strategies[j - 1], order.strategies[j]);
            Error::RegularityViolation { first: a.min(b), second: a.max(b), quantity: q1 }
        })
    })
}

/// Checks that all `2^T` discounted quantities under `γB` are distinct.
/// A collision is reported as [`Error::RegularityViolation`].
pub fn check_regularity(gamma_b: &DiscountSequence, horizon: usize) -> Result<()> {
    first_collision(&sorted_quantities(gamma_b, horizon)?).map_or(Ok(()), Err)
}

/// Stable sort of all strategies by `γB·a`.
pub fn order_strategies(gamma_b: &DiscountSequence, horizon: usize) -> Result<StrategyOrder> {
    let order = sorted_quantities(gamma_b, horizon)?;
    first_collision(&order).map_or(Ok(order), Err)
}

/// Node strings in in-order: left subtree, node, right subtree.
pub fn consistent_node_order(horizon: usize) -> Vec<String> {
    fn visit(prefix: &mut String, horizon: usize, out: &mut Vec<String>) {
        let inner = prefix.len() + 1 < horizon;
        if inner {
            prefix.push('0');
            visit(prefix, horizon, out);
            prefix.pop();
        }
        out.push(prefix.clone());
        if inner {
            prefix.push('1');
            visit(prefix, horizon, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity((1 << horizon) - 1);
    visit(&mut String::new(), horizon, &mut out);
    out
}

/// The matrices of the reduction for one discount pair.
#[derive(Debug, Clone)]
pub struct ReductionSystem {
    horizon: usize,
    order: StrategyOrder,
    nodes: Vec<String>,
    /// Heap index of each node in `nodes`.
    heap_of: Vec<usize>,
    gamma_b: Vec<f64>,
    gamma_s: Vec<f64>,
    j: DMatrix<f64>,
    z: DMatrix<f64>,
    k_bb: DMatrix<f64>,
    k_bs: DMatrix<f64>,
    w: DMatrix<f64>,
    w_inv: DMatrix<f64>,
    xi: DMatrix<f64>,
    cond_w: f64,
    cond_xi: f64,
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max)
}

fn invert(m: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    m.clone()
        .lu()
        .try_inverse()
        .filter(|inv| inv.iter().all(|x| x.is_finite()))
        .ok_or_else(|| Error::SingularMatrix(format!("{name} is not invertible")))
}

/// `K(γB, γ)`: row `i` is strategy `a^{i+1}`, column `j` is node `n_{j+1}`.
fn k_matrix(order: &StrategyOrder, column_of_heap: &[usize], weights: &[f64]) -> DMatrix<f64> {
    let k = column_of_heap.len();
    let mut m = DMatrix::zeros(k, k);
    for (row, s) in order.strategies[1..].iter().enumerate() {
        let mut idx = 0usize;
        for (t, a) in s.decisions().enumerate() {
            if a {
                m[(row, column_of_heap[idx])] = weights[t];
            }
            idx = 2 * idx + 1 + a as usize;
        }
    }
    m
}

/// Builds the reduction for a regular `γB` and a seller discount of the
/// same finite length.
pub fn build_system(gamma_b: &DiscountSequence, gamma_s: &DiscountSequence, horizon: usize) -> Result<ReductionSystem> {
    let order = order_strategies(gamma_b, horizon)?;
    let gb = finite_weights(gamma_b, horizon, "buyer")?.to_vec();
    let gs = finite_weights(gamma_s, horizon, "seller")?.to_vec();
    let nodes = consistent_node_order(horizon);
    let k = nodes.len();
    let heap_of: Vec<usize> = nodes.iter().map(|n| node_index(n).expect("binary node string")).collect();
    let mut column_of_heap = vec![0; k];
    for (col, &h) in heap_of.iter().enumerate() {
        column_of_heap[h] = col;
    }

    let j = DMatrix::from_fn(k, k, |r, c| {
        if r == c {
            1.0
        } else if r == c + 1 {
            -1.0
        } else {
            0.0
        }
    });
    let gaps: Vec<f64> = order.quantities.windows(2).map(|w| w[1] - w[0]).collect();
    let z = DMatrix::from_diagonal(&DVector::from_iterator(k, gaps.iter().map(|g| 1.0 / g)));
    let z_inv = DMatrix::from_diagonal(&DVector::from_vec(gaps.clone()));
    let k_bb = k_matrix(&order, &column_of_heap, &gb);
    let k_bs = k_matrix(&order, &column_of_heap, &gs);

    let w = &z * &j * &k_bb;
    let w_inv = invert(&w, "W")?;
    let k_bb_inv = invert(&k_bb, "K(γB, γB)")?;
    let j_inv = invert(&j, "J")?;
    let xi = &j * &k_bs * k_bb_inv * j_inv * z_inv;
    let xi_inv = invert(&xi, "Ξ")?;

    if gb == gs {
        // equal discounts: Ξ collapses to diag(q_j - q_{j-1})
        let scale = gaps.iter().fold(1.0f64, |a, &b| a.max(b));
        for r in 0..k {
            for c in 0..k {
                let expect = if r == c { gaps[r] } else { 0.0 };
                if (xi[(r, c)] - expect).abs() > 1e-9 * scale {
                    return Err(Error::Internal(format!(
                        "Ξ for equal discounts is not diagonal at ({r}, {c}): {}",
                        xi[(r, c)]
                    )));
                }
            }
        }
    }

    let cond_w = one_norm(&w) * one_norm(&w_inv);
    let cond_xi = one_norm(&xi) * one_norm(&xi_inv);
    Ok(ReductionSystem {
        horizon,
        order,
        nodes,
        heap_of,
        gamma_b: gb,
        gamma_s: gs,
        j,
        z,
        k_bb,
        k_bs,
        w,
        w_inv,
        xi,
        cond_w,
        cond_xi,
    })
}

/// True when `0 ≤ v_1 ≤ … ≤ v_k` up to `tol`.
pub fn in_delta(v: &[f64], tol: f64) -> bool {
    v.first().is_none_or(|&x| x >= -tol) && v.windows(2).all(|w| w[1] >= w[0] - tol)
}

impl ReductionSystem {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Dimension `k = 2^T - 1`.
    pub fn dim(&self) -> usize {
        self.nodes.len()
    }

    pub fn order(&self) -> &StrategyOrder {
        &self.order
    }

    /// Node strings in the order used for the columns of `K` and `W`.
    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn gamma_b(&self) -> &[f64] {
        &self.gamma_b
    }

    pub fn gamma_s(&self) -> &[f64] {
        &self.gamma_s
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn k_bb(&self) -> &DMatrix<f64> {
        &self.k_bb
    }

    pub fn k_bs(&self) -> &DMatrix<f64> {
        &self.k_bs
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn w_inverse(&self) -> &DMatrix<f64> {
        &self.w_inv
    }

    pub fn xi(&self) -> &DMatrix<f64> {
        &self.xi
    }

    /// 1-norm condition number of `W`.
    pub fn condition_w(&self) -> f64 {
        self.cond_w
    }

    /// 1-norm condition number of `Ξ`.
    pub fn condition_xi(&self) -> f64 {
        self.cond_xi
    }

    /// Prices of `tree` in node order.
    pub fn price_vector(&self, tree: &PricingTree) -> Result<DVector<f64>> {
        if tree.horizon() != self.horizon {
            return Err(Error::invalid(format!(
                "tree has horizon {} but the system has {}",
                tree.horizon(),
                self.horizon
            )));
        }
        Ok(DVector::from_iterator(self.dim(), self.heap_of.iter().map(|&h| tree.price_at_index(h))))
    }

    /// Switching valuations `v = W·A`.
    pub fn tree_to_v(&self, tree: &PricingTree) -> Result<Vec<f64>> {
        Ok((&self.w * self.price_vector(tree)?).iter().copied().collect())
    }

    /// True when every strategy is optimal on a valuation interval, i.e.
    /// `tree_to_v(tree) ∈ Δ^k`.
    pub fn is_completely_active(&self, tree: &PricingTree) -> Result<bool> {
        Ok(in_delta(&self.tree_to_v(tree)?, FEASIBILITY_TOLERANCE))
    }

    /// The tree `A = W⁻¹·v` whose switching valuations are `v`.
    pub fn v_to_tree(&self, v: &[f64]) -> Result<PricingTree> {
        self.check_dim(v)?;
        let scale = v.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
        if v.iter().any(|x| !x.is_finite()) || !in_delta(v, FEASIBILITY_TOLERANCE * scale) {
            return Err(Error::invalid("v must satisfy 0 ≤ v_1 ≤ … ≤ v_k"));
        }
        let a = &self.w_inv * DVector::from_column_slice(v);
        let mut prices = vec![0.0; self.dim()];
        for (col, &h) in self.heap_of.iter().enumerate() {
            let p = a[col];
            if p < -FEASIBILITY_TOLERANCE * scale {
                return Err(Error::InfeasiblePoint(format!("price at node '{}' would be {p}", self.nodes[col])));
            }
            prices[h] = p.max(0.0);
        }
        PricingTree::new(self.horizon, prices)
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::invalid(format!("expected a vector of length {}, got {}", self.dim(), v.len())));
        }
        Ok(())
    }

    /// `L(v) = (1 - F(v))ᵀ Ξ v`. Defined on all of `ℝ^k`.
    pub fn l_value(&self, dist: &ValuationDistribution, v: &[f64]) -> Result<f64> {
        self.check_dim(v)?;
        Ok(self.l_value_unchecked(dist, v))
    }

    pub(crate) fn l_value_unchecked(&self, dist: &ValuationDistribution, v: &[f64]) -> f64 {
        let xv = &self.xi * DVector::from_column_slice(v);
        v.iter().zip(xv.iter()).map(|(&vj, &x)| dist.survival(vj) * x).sum()
    }

    /// `∇L(v) = Ξᵀ(1 - F(v)) - diag(f(v))·Ξ·v`.
    pub fn l_gradient(&self, dist: &ValuationDistribution, v: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(v)?;
        Ok(self.l_value_and_gradient(dist, v).1)
    }

    pub(crate) fn l_value_and_gradient(&self, dist: &ValuationDistribution, v: &[f64]) -> (f64, Vec<f64>) {
        let vv = DVector::from_column_slice(v);
        let xv = &self.xi * &vv;
        let s = DVector::from_iterator(v.len(), v.iter().map(|&x| dist.survival(x)));
        let value = s.dot(&xv);
        let mut grad = self.xi.tr_mul(&s);
        for (j, g) in grad.iter_mut().enumerate() {
            *g -= dist.pdf(v[j]) * xv[j];
        }
        (value, grad.iter().copied().collect())
    }

    /// All matrices in long CSV form, `matrix,row,col,value`, preceded by
    /// a comment line with the horizon and both discounts.
    pub fn to_csv(&self) -> String {
        let join = |w: &[f64]| w.iter().map(|x| format_g(*x, 12)).collect::<Vec<_>>().join(";");
        let mut out = format!(
            "# horizon={} gamma_b={} gamma_s={} cond_w={} cond_xi={}\nmatrix,row,col,value\n",
            self.horizon,
            join(&self.gamma_b),
            join(&self.gamma_s),
            format_g(self.cond_w, 12),
            format_g(self.cond_xi, 12),
        );
        let mats = [
            ("J", &self.j),
            ("Z", &self.z),
            ("K_BB", &self.k_bb),
            ("K_BS", &self.k_bs),
            ("W", &self.w),
            ("Xi", &self.xi),
        ];
        for (name, m) in mats {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    let _ = writeln!(out, "{name},{r},{c},{}", format_g(m[(r, c)], 12));
                }
            }
        }
        out
    }
}

/// The two-variable problem for two rounds when the optimum lies on the
/// hyperplane `v_2 = v_3`:
/// `L₂(v) = (1 - F(v))ᵀ Υ₂ v`, `Υ₂ = [[γs, 0], [-(γs - γb), 1 + γs - γb]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedT2 {
    pub upsilon: [[f64; 2]; 2],
}

/// Builds `Υ₂` for the discounts `(1, γb)` and `(1, γs)`, `γb ≤ γs`.
pub fn reduced_t2(gamma_s: f64, gamma_b: f64) -> Result<ReducedT2> {
    if !(gamma_b > 0.0 && gamma_b <= gamma_s && gamma_s < 1.0) {
        return Err(Error::invalid(format!(
            "reduced two-round problem needs 0 < γb ≤ γs < 1, got γs={gamma_s}, γb={gamma_b}"
        )));
    }
    Ok(ReducedT2 { upsilon: [[gamma_s, 0.0], [-(gamma_s - gamma_b), 1.0 + gamma_s - gamma_b]] })
}

impl ReducedT2 {
    pub fn value(&self, dist: &ValuationDistribution, v: [f64; 2]) -> f64 {
        let u = &self.upsilon;
        dist.survival(v[0]) * (u[0][0] * v[0] + u[0][1] * v[1])
            + dist.survival(v[1]) * (u[1][0] * v[0] + u[1][1] * v[1])
    }

    pub fn gradient(&self, dist: &ValuationDistribution, v: [f64; 2]) -> [f64; 2] {
        let u = &self.upsilon;
        let uv = [u[0][0] * v[0] + u[0][1] * v[1], u[1][0] * v[0] + u[1][1] * v[1]];
        let s = [dist.survival(v[0]), dist.survival(v[1])];
        [
            u[0][0] * s[0] + u[1][0] * s[1] - dist.pdf(v[0]) * uv[0],
            u[0][1] * s[0] + u[1][1] * s[1] - dist.pdf(v[1]) * uv[1],
        ]
    }

    /// The full three-dimensional point `(v_1, v_2, v_2)`.
    pub fn embed(v: [f64; 2]) -> [f64; 3] {
        [v[0], v[1], v[1]]
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(2, 2, |r, c| self.upsilon[r][c])
    }
}
