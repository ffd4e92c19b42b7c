//! Revenue-optimal pricing in repeated posted-price auctions against a
//! strategic buyer with a fixed private valuation.
//!
//! The seller commits to a pricing tree; the buyer, who discounts the future
//! differently from the seller, best-responds to the whole tree. The crate
//! reduces the search for the optimal tree to a non-convex program over an
//! ordered cone and solves it with projected gradient ascent.

// `!(x >= 0.0)` rejects NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discount;
pub mod distribution;
pub mod error;
pub mod format;
pub mod game;
pub mod optimizer;
pub mod oracle;
pub mod quadrature;
pub mod reduction;
pub mod schemes;
pub mod tree;

pub use discount::{make_geometric_discount, DiscountSequence, Horizon};
pub use distribution::{myerson_price, static_revenue, MyersonPrice, ValuationDistribution};
pub use error::{Error, Result};
pub use game::{evaluate, BuyerStrategy, GameOutcome};
pub use optimizer::{maximize_l, project_to_delta, OptimizationResult, OptimizerOptions};
pub use oracle::{best_response, expected_strategic_revenue, strategic_revenue_curve, BestResponse, BuyerOracle};
pub use reduction::{build_system, order_strategies, ReductionSystem, StrategyOrder};
pub use schemes::{
    big_deal, constant_myerson, tau_step_optimal, truncate, BigDealScheme, ConstantScheme, TauStepResult, TruncatedGame,
};
pub use tree::PricingTree;
