"""Smoke test for the `rppa` extension module.

Build and install it first:

    pip install maturin
    maturin develop -m crates/python/Cargo.toml

then run `python python/smoke_test.py`.
"""

import json
import math

import rppa


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    uniform = rppa.Distribution("uniform:0,1")
    close(uniform.myerson()[0], 0.5, 1e-12)
    close(rppa.Distribution.beta(4, 2).myerson()[0], 0.535692, 1e-6)

    gb = rppa.Discount.geometric(0.2, 2)
    gs = rppa.Discount.geometric(0.8, 2)
    r = rppa.maximize(uniform, gb, gs, 2)
    assert r.converged
    close(r.value / (gs.total() * 0.25), 128 / 119, 1e-9)
    close(rppa.expected_strategic_revenue(r.tree, uniform, gb, gs), r.value, 1e-9)

    tree = rppa.PricingTree.from_json(r.tree.to_json())
    assert tree.prices == r.tree.prices
    assert json.loads(tree.to_json())["horizon"] == 2

    br = rppa.best_response(rppa.PricingTree.constant(2, 0.5), 0.9, gb, gs)
    assert br.strategy == "11", br.strategy

    inf_b = rppa.Discount.geometric(0.2)
    inf_s = rppa.Discount.geometric(0.8)
    assert inf_b.horizon is None
    t = rppa.tau_step_optimal(uniform, inf_b, inf_s, 3)
    close(t.value, 1.689780, 1e-5)
    assert t.opt_lower <= t.opt_upper

    deal = rppa.big_deal(uniform, rppa.Discount.geometric(0.5), rppa.Discount.geometric(0.5))
    close(deal.revenue, 0.5, 1e-12)
    assert deal.warning is None

    _, _, tail = rppa.truncate(inf_b, inf_s, 2)
    close(tail, 0.64 / 0.2, 1e-12)

    try:
        rppa.Distribution("bogus")
    except ValueError:
        pass
    else:
        raise AssertionError("malformed spec accepted")

    assert math.isfinite(r.condition_w)
    print("smoke test passed")


if __name__ == "__main__":
    main()
