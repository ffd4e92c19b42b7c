//! Deterministic pricing algorithms as complete binary trees of prices.
//!
//! A node is identified by the decision history that leads to it: a string
//! over `{'0', '1'}` whose length is the node depth (the root is the empty
//! string). Rejection moves to the `'0'` child and acceptance to the `'1'`
//! child. Prices are stored in heap order: root, `0`, `1`, `00`, `01`, ...

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Deepest tree the crate will materialize (2^24 - 1 nodes).
pub const MAX_TREE_HORIZON: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct PricingTree {
    horizon: usize,
    prices: Vec<f64>,
}

/// Number of nodes of a tree with `horizon` rounds: `2^T - 1`.
pub fn node_count(horizon: usize) -> usize {
    (1usize << horizon) - 1
}

/// Heap index of a node string, or `None` if the string is not over `{0, 1}`.
pub fn node_index(node: &str) -> Option<usize> {
    node.bytes().try_fold(0usize, |idx, b| match b {
        b'0' => Some(2 * idx + 1),
        b'1' => Some(2 * idx + 2),
        _ => None,
    })
}

/// Node string of a heap index.
pub fn node_name(index: usize) -> String {
    let depth = (usize::BITS - (index + 1).leading_zeros() - 1) as usize;
    let bits = index + 1 - (1 << depth);
    (0..depth).map(|i| if bits >> (depth - 1 - i) & 1 == 1 { '1' } else { '0' }).collect()
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 || horizon > MAX_TREE_HORIZON {
        return Err(Error::invalid(format!("tree horizon must be in 1..={MAX_TREE_HORIZON}, got {horizon}")));
    }
    Ok(())
}

fn check_price(node: usize, p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 0.0) {
        return Err(Error::invalid(format!(
            "price at node '{}' must be a non-negative number, got {p}",
            node_name(node)
        )));
    }
    Ok(())
}

impl PricingTree {
    /// Builds a tree from prices in heap order.
    pub fn new(horizon: usize, prices: Vec<f64>) -> Result<Self> {
        check_horizon(horizon)?;
        if prices.len() != node_count(horizon) {
            return Err(Error::invalid(format!(
                "a tree of horizon {horizon} has {} nodes, got {} prices",
                node_count(horizon),
                prices.len()
            )));
        }
        for (i, &p) in prices.iter().enumerate() {
            check_price(i, p)?;
        }
        Ok(Self { horizon, prices })
    }

    pub fn constant(horizon: usize, price: f64) -> Result<Self> {
        check_horizon(horizon)?;
        Self::new(horizon, vec![price; node_count(horizon)])
    }

    /// Builds a tree by evaluating `price` at every node string.
    pub fn from_fn(horizon: usize, mut price: impl FnMut(&str) -> f64) -> Result<Self> {
        check_horizon(horizon)?;
        let prices = (0..node_count(horizon)).map(|i| price(&node_name(i))).collect();
        Self::new(horizon, prices)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn node_count(&self) -> usize {
        self.prices.len()
    }

    /// Prices in heap order.
    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn price(&self, node: &str) -> Option<f64> {
        node_index(node).and_then(|i| self.prices.get(i).copied())
    }

    pub fn price_at_index(&self, index: usize) -> f64 {
        self.prices[index]
    }

    /// Node strings in heap order.
    pub fn nodes(&self) -> impl Iterator<Item = String> {
        (0..self.prices.len()).map(node_name)
    }

    pub fn with_price(mut self, node: &str, price: f64) -> Result<Self> {
        let idx = node_index(node)
            .filter(|&i| i < self.prices.len())
            .ok_or_else(|| Error::invalid(format!("no node '{node}' in a tree of horizon {}", self.horizon)))?;
        check_price(idx, price)?;
        self.prices[idx] = price;
        Ok(self)
    }

    pub fn to_json(&self) -> Value {
        let prices: Map<String, Value> = self.nodes().zip(self.prices.iter()).map(|(n, &p)| (n, json!(p))).collect();
        json!({ "horizon": self.horizon, "prices": prices })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("tree JSON is always serializable")
    }

    /// Parses the `{"horizon": T, "prices": {"": p, "0": p, ...}}` format.
    /// Errors carry a JSON pointer to the offending value.
    pub fn from_json(value: &Value) -> Result<Self> {
        let err = |pointer: &str, message: String| Error::Parse { pointer: pointer.to_string(), message };
        let obj = value.as_object().ok_or_else(|| err("", "expected an object".into()))?;
        let horizon = obj
            .get("horizon")
            .ok_or_else(|| err("/horizon", "missing field".into()))?
            .as_u64()
            .filter(|&h| h >= 1 && h as usize <= MAX_TREE_HORIZON)
            .ok_or_else(|| err("/horizon", format!("expected an integer in 1..={MAX_TREE_HORIZON}")))?
            as usize;
        let prices_obj = obj
            .get("prices")
            .ok_or_else(|| err("/prices", "missing field".into()))?
            .as_object()
            .ok_or_else(|| err("/prices", "expected an object".into()))?;
        let n = node_count(horizon);
        let mut prices = vec![f64::NAN; n];
        for (key, val) in prices_obj {
            let pointer = format!("/prices/{}", key.replace('~', "~0").replace('/', "~1"));
            let idx = node_index(key)
                .filter(|&i| i < n)
                .ok_or_else(|| err(&pointer, format!("not a node of a tree with horizon {horizon}")))?;
            let p = val.as_f64().ok_or_else(|| err(&pointer, "expected a number".into()))?;
            if !(p.is_finite() && p >= 0.0) {
                return Err(err(&pointer, format!("price must be non-negative, got {p}")));
            }
            prices[idx] = p;
        }
        if let Some(missing) = prices.iter().position(|p| p.is_nan()) {
            return Err(err(&format!("/prices/{}", node_name(missing)), "missing price for node".into()));
        }
        Self::new(horizon, prices)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(s).map_err(|e| Error::Parse { pointer: String::new(), message: e.to_string() })?;
        Self::from_json(&value)
    }
}
