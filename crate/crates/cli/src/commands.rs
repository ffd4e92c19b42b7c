//! Subcommand implementations. Each returns its output text plus any
//! warnings; the caller decides where the text goes and the exit code.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rppa_core::format::format_g;
use rppa_core::optimizer::{maximize_l, OptimizerOptions};
use rppa_core::tree::{node_count, node_name};
use rppa_core::{
    big_deal, constant_myerson, expected_strategic_revenue, make_geometric_discount, myerson_price,
    strategic_revenue_curve, tau_step_optimal, truncate, DiscountSequence, Horizon, PricingTree, ValuationDistribution,
};
use serde_json::{json, Value};

use crate::settings::{Common, Preset, SimulateArgs, SweepArgs, Varying};
use crate::CliError;

pub struct Report {
    pub text: String,
    pub warnings: Vec<String>,
}

const SIG_DIGITS: usize = 12;
const DEFAULT_BIG_DEAL_DEPTH: usize = 6;
const DEFAULT_SIMULATION_GRID: usize = 101;

fn num(x: f64) -> String {
    format_g(x, SIG_DIGITS)
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values are serializable");
    s.push('\n');
    s
}

fn require<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

fn parse_dist(spec: &str) -> Result<ValuationDistribution, CliError> {
    spec.parse().map_err(|e: rppa_core::Error| CliError::Usage(format!("--dist: {e}")))
}

fn rate(v: f64, flag: &str) -> Result<f64, CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{flag} must lie in (0, 1), got {v}")))
    }
}

fn optimizer_options(c: &Common) -> OptimizerOptions {
    let mut o = OptimizerOptions { starts: c.starts, seed: c.seed.unwrap_or(0), ..Default::default() };
    if let Some(m) = c.max_iter {
        o.max_iter = m;
    }
    if let Some(t) = c.tol {
        o.tol = t;
    }
    o
}

fn perturbed(d: DiscountSequence, c: &Common) -> Result<DiscountSequence, CliError> {
    match c.perturb {
        None => Ok(d),
        Some(eps) if eps >= 0.0 => {
            let mut rng = ChaCha8Rng::seed_from_u64(c.seed.unwrap_or(0));
            Ok(d.perturbed(eps, &mut rng)?)
        }
        Some(eps) => Err(CliError::Usage(format!("--perturb must be non-negative, got {eps}"))),
    }
}

/// Game length: exactly one of `--horizon` (finite) and `--tau`
/// (infinite, truncated).
enum Game {
    Finite(usize),
    Truncated(usize),
}

fn game(c: &Common) -> Result<Game, CliError> {
    match (c.horizon, c.tau) {
        (Some(_), Some(_)) => Err(CliError::Usage("give only one of --horizon and --tau".into())),
        (Some(t), None) => Ok(Game::Finite(t)),
        (None, Some(t)) => Ok(Game::Truncated(t)),
        (None, None) => Err(CliError::Usage("missing --horizon or --tau".into())),
    }
}

fn geo(rate: f64, horizon: Horizon) -> Result<DiscountSequence, CliError> {
    Ok(make_geometric_discount(rate, horizon)?)
}

pub fn myerson(c: &Common) -> Result<Report, CliError> {
    let spec = require(&c.dist, "dist")?;
    let d = parse_dist(&spec)?;
    let m = myerson_price(&d);
    let v = json!({ "dist": d.to_string(), "price": m.price, "revenue": m.revenue });
    Ok(Report { text: json_text(&v), warnings: vec![] })
}

const RATE_ORDER_WARNING: &str =
    "buyer discount rates exceed the seller's somewhere; the tree is optimal among completely active trees only";

pub fn optimize(c: &Common) -> Result<Report, CliError> {
    let d = parse_dist(&require(&c.dist, "dist")?)?;
    let gs = rate(require(&c.gs, "gs")?, "gs")?;
    let gb = rate(require(&c.gb, "gb")?, "gb")?;
    let opts = optimizer_options(c);
    let h = myerson_price(&d).revenue;
    let mut warnings = Vec::new();
    let out = match game(c)? {
        Game::Finite(t) => {
            let s = geo(gs, Horizon::Finite(t))?;
            let b = perturbed(geo(gb, Horizon::Finite(t))?, c)?;
            let r = maximize_l(&d, &b, &s, t, &opts)?;
            if !r.rate_order_ok {
                warnings.push(RATE_ORDER_WARNING.to_string());
            }
            let baseline = s.total() * h;
            json!({
                "dist": d.to_string(), "gamma_s": gs, "gamma_b": gb, "horizon": t,
                "tree": r.tree().to_json(), "v_star": r.v_star, "value": r.value,
                "baseline": baseline, "ratio": r.value / baseline,
                "kkt_residual": r.kkt_residual, "converged": r.converged, "iterations": r.iterations,
                "starts": r.starts, "seed": opts.seed, "rate_order_ok": r.rate_order_ok,
                "condition_w": r.condition_w, "condition_xi": r.condition_xi,
            })
        }
        Game::Truncated(tau) => {
            let s = geo(gs, Horizon::Infinite)?;
            let b = geo(gb, Horizon::Infinite)?;
            let r = if c.perturb.is_some() {
                let game = truncate(&b, &s, tau)?;
                let pb = perturbed(game.gamma_b.clone(), c)?;
                let mut r = tau_step_optimal(&d, &b, &s, tau, &opts)?;
                r.optimization = maximize_l(&d, &pb, &game.gamma_s, tau, &opts)?;
                r.value = r.optimization.value;
                r.opt_lower = r.value;
                r.opt_upper = r.value + game.tail_bound(&d);
                r
            } else {
                tau_step_optimal(&d, &b, &s, tau, &opts)?
            };
            if !r.optimization.rate_order_ok {
                warnings.push(RATE_ORDER_WARNING.to_string());
            }
            let baseline = s.total() * h;
            let o = &r.optimization;
            json!({
                "dist": d.to_string(), "gamma_s": gs, "gamma_b": gb, "tau": tau,
                "tree": o.tree().to_json(), "v_star": o.v_star,
                "value": r.value, "opt_lower": r.opt_lower, "opt_upper": r.opt_upper,
                "baseline": baseline, "ratio": r.value / baseline,
                "kkt_residual": o.kkt_residual, "converged": o.converged, "iterations": o.iterations,
                "starts": o.starts, "seed": opts.seed, "rate_order_ok": o.rate_order_ok,
                "condition_w": o.condition_w, "condition_xi": o.condition_xi,
            })
        }
    };
    Ok(Report { text: json_text(&out), warnings })
}

fn sweep_grid(c: &mut Common, s: &SweepArgs) -> Result<(Varying, Vec<f64>), CliError> {
    let (vary, start, step, count) = match s.preset {
        Some(Preset::VaryGb) => {
            c.gs = Some(0.8);
            (Varying::Gb, 0.01, 0.005, 149)
        }
        Some(Preset::VaryGs) => {
            c.gb = Some(0.2);
            (Varying::Gs, 0.2, 0.005, 160)
        }
        None => (
            require(&s.vary, "vary")?,
            require(&s.start, "start")?,
            require(&s.step, "step")?,
            require(&s.count, "count")?,
        ),
    };
    let points: Vec<f64> = (0..count).map(|i| start + step * i as f64).collect();
    if let Some(bad) = points.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(CliError::Usage(format!("sweep grid point {bad} is outside (0, 1)")));
    }
    Ok((vary, points))
}

fn csv_text(header: Vec<String>, rows: Vec<Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}

/// A CSV row and whether its rates satisfy the rate-order condition.
type RowResult = Result<(Vec<String>, bool), CliError>;

pub fn sweep(c: &Common, s: &SweepArgs) -> Result<Report, CliError> {
    let mut c = c.clone();
    let (vary, points) = sweep_grid(&mut c, s)?;
    let d = parse_dist(&require(&c.dist, "dist")?)?;
    let fixed = match vary {
        Varying::Gb => rate(require(&c.gs, "gs")?, "gs")?,
        Varying::Gs => rate(require(&c.gb, "gb")?, "gb")?,
    };
    let rates = move |x: f64| match vary {
        Varying::Gb => (fixed, x),
        Varying::Gs => (x, fixed),
    };
    let h = myerson_price(&d).revenue;
    let opts = optimizer_options(&c);
    let label = match vary {
        Varying::Gb => "gamma_b",
        Varying::Gs => "gamma_s",
    };
    let taus = match (&s.taus, c.tau, c.horizon) {
        (Some(t), None, None) => Some(t.clone()),
        (None, Some(t), None) => Some(vec![t]),
        (None, None, Some(_)) => None,
        (None, None, None) => return Err(CliError::Usage("missing --horizon, --tau or --taus".into())),
        _ => return Err(CliError::Usage("give only one of --horizon, --tau and --taus".into())),
    };

    let (header, rows): (Vec<String>, Vec<RowResult>) = match taus {
        None => {
            let t = c.horizon.expect("checked above");
            let mut header = vec![label.to_string()];
            header.extend((0..node_count(t)).map(|i| format!("p({})", node_name(i))));
            header.extend(["value".to_string(), "ratio".to_string()]);
            let rows = points
                .par_iter()
                .map(|&x| {
                    let (gs, gb) = rates(x);
                    let sd = geo(gs, Horizon::Finite(t))?;
                    let bd = perturbed(geo(gb, Horizon::Finite(t))?, &c)?;
                    let r = maximize_l(&d, &bd, &sd, t, &opts)?;
                    let mut row = vec![num(x)];
                    row.extend(r.tree().prices().iter().map(|&p| num(p)));
                    row.push(num(r.value));
                    row.push(num(r.value / (sd.total() * h)));
                    Ok((row, r.rate_order_ok))
                })
                .collect();
            (header, rows)
        }
        Some(taus) => {
            if taus.is_empty() {
                return Err(CliError::Usage("--taus is empty".into()));
            }
            let mut header = vec![label.to_string()];
            for t in &taus {
                header.push(format!("value_tau{t}"));
                header.push(format!("ratio_tau{t}"));
            }
            let rows = points
                .par_iter()
                .map(|&x| {
                    let (gs, gb) = rates(x);
                    let sd = geo(gs, Horizon::Infinite)?;
                    let bd = geo(gb, Horizon::Infinite)?;
                    let mut row = vec![num(x)];
                    let mut ok = true;
                    for &t in &taus {
                        let r = tau_step_optimal(&d, &bd, &sd, t, &opts)?;
                        ok &= r.optimization.rate_order_ok;
                        row.push(num(r.value));
                        row.push(num(r.value / (sd.total() * h)));
                    }
                    Ok((row, ok))
                })
                .collect();
            (header, rows)
        }
    };
    let mut out_rows = Vec::with_capacity(rows.len());
    let mut flagged = 0;
    for r in rows {
        let (row, ok) = r?;
        flagged += usize::from(!ok);
        out_rows.push(row);
    }
    let warnings = if flagged > 0 { vec![format!("{flagged} grid point(s): {RATE_ORDER_WARNING}")] } else { vec![] };
    Ok(Report { text: csv_text(header, out_rows)?, warnings })
}

pub fn load_tree(path: &Path) -> Result<PricingTree, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(PricingTree::from_json_str(&text)?)
}

pub struct Simulation {
    pub csv: String,
    pub expected_revenue: f64,
}

pub fn simulate(c: &Common, s: &SimulateArgs) -> Result<Simulation, CliError> {
    let tree = load_tree(&require(&s.tree, "tree")?)?;
    let d = parse_dist(&require(&c.dist, "dist")?)?;
    let gs = rate(require(&c.gs, "gs")?, "gs")?;
    let gb = rate(require(&c.gb, "gb")?, "gb")?;
    let t = tree.horizon();
    let (bd, sd) = if s.tail.unwrap_or(false) {
        let game = truncate(&geo(gb, Horizon::Infinite)?, &geo(gs, Horizon::Infinite)?, t)?;
        (game.gamma_b, game.gamma_s)
    } else {
        (geo(gb, Horizon::Finite(t))?, geo(gs, Horizon::Finite(t))?)
    };
    let n = s.grid.unwrap_or(DEFAULT_SIMULATION_GRID);
    let (lo, hi) = d.support();
    let grid: Vec<f64> = match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    };
    let curve = strategic_revenue_curve(&tree, &bd, &sd, &grid)?;
    let header = ["v", "strategy", "S", "R", "Q"].map(String::from).to_vec();
    let rows = curve
        .iter()
        .map(|p| vec![num(p.valuation), p.strategy.to_string(), num(p.surplus), num(p.revenue), num(p.quantity)])
        .collect();
    let expected_revenue = expected_strategic_revenue(&tree, &d, &bd, &sd, 256)?;
    Ok(Simulation { csv: csv_text(header, rows)?, expected_revenue })
}

pub fn bigdeal(c: &Common) -> Result<Report, CliError> {
    let d = parse_dist(&require(&c.dist, "dist")?)?;
    let gs = rate(require(&c.gs, "gs")?, "gs")?;
    let gb = rate(require(&c.gb, "gb")?, "gb")?;
    let (b, s, depth, game_b, game_s) = match (c.horizon, c.tau) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give only one of --horizon and --tau".into())),
        (Some(t), None) => {
            let (b, s) = (geo(gb, Horizon::Finite(t))?, geo(gs, Horizon::Finite(t))?);
            (b.clone(), s.clone(), t, b, s)
        }
        (None, tau) => {
            let tau = tau.unwrap_or(DEFAULT_BIG_DEAL_DEPTH);
            let (b, s) = (geo(gb, Horizon::Infinite)?, geo(gs, Horizon::Infinite)?);
            let g = truncate(&b, &s, tau)?;
            (b, s, tau, g.gamma_b, g.gamma_s)
        }
    };
    let deal = big_deal(&d, &b, &s)?;
    let tree = deal.tree(depth)?;
    let quadrature = expected_strategic_revenue(&tree, &d, &game_b, &game_s, 256)?;
    let constant = constant_myerson(&d, &s);
    let v = json!({
        "dist": d.to_string(), "gamma_s": gs, "gamma_b": gb,
        "infinite": c.horizon.is_none(), "depth": depth,
        "tree": tree.to_json(), "first_price": deal.first_price, "penalty": deal.penalty,
        "revenue": deal.revenue, "quadrature_revenue": quadrature,
        "constant_revenue": constant.revenue, "ratio": deal.revenue / constant.revenue,
    });
    Ok(Report { text: json_text(&v), warnings: deal.warning.into_iter().collect() })
}

pub fn truncate_cmd(c: &Common) -> Result<Report, CliError> {
    let gs = rate(require(&c.gs, "gs")?, "gs")?;
    let gb = rate(require(&c.gb, "gb")?, "gb")?;
    let tau = require(&c.tau, "tau")?;
    let g = truncate(&geo(gb, Horizon::Infinite)?, &geo(gs, Horizon::Infinite)?, tau)?;
    let mut v = json!({
        "tau": tau, "gamma_b": g.gamma_b.weights(), "gamma_s": g.gamma_s.weights(), "seller_tail": g.seller_tail,
    });
    if let Some(spec) = &c.dist {
        v["tail_bound"] = json!(g.tail_bound(&parse_dist(spec)?));
    }
    Ok(Report { text: json_text(&v), warnings: vec![] })
}
