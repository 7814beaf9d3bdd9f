import numpy as np
import pytest

from marketbayes.compiler import compile_network
from marketbayes.logic import ContradictionError, Proposition
from marketbayes.oracle import conjunction_probability, full_joint_table
from marketbayes.query import (
    DegenerateError,
    QueryError,
    add_query_arbitrageur,
    conditional_query,
    conjunction_query,
    extend_prices,
    price_of,
    recover_joint,
)
from marketbayes.solver import solve

P = Proposition.parse
TOL = 1e-3


@pytest.fixture(scope="module")
def solved(golden_econ, golden_solved):
    return golden_econ, golden_solved[0]


def test_price_of(solved):
    econ, prices = solved
    assert price_of(econ, prices, "a3 & a4") == pytest.approx(0.0847, abs=1e-3)
    assert price_of(econ, prices, "T") == 1.0
    assert price_of(econ, prices, "a2 & a4") is None


def test_recover_joint(solved, golden):
    econ, prices = solved
    joint = recover_joint(econ, prices)
    truth = full_joint_table(golden)
    assert len(joint) == 16
    for key, p in truth.items():
        assert joint[key] == pytest.approx(p, abs=2e-3)
    assert sum(joint.values()) == pytest.approx(1.0, abs=10 * TOL)


def test_recover_joint_single_root(single_root):
    econ = compile_network(single_root)
    prices, _ = solve(econ)
    joint = recover_joint(econ, prices)
    assert joint[(True,)] == pytest.approx(0.4, abs=TOL)
    assert joint[(False,)] == pytest.approx(0.6, abs=TOL)


def test_recover_joint_degenerate(solved):
    econ, prices = solved
    bad = prices.copy()
    bad[econ.good_id(P("a1"))] = 1e-12
    with pytest.raises(DegenerateError, match="a1"):
        recover_joint(econ, bad)


@pytest.mark.parametrize(
    "expr, expected",
    [("!a1 & a3", 0.2244), ("a4", 0.64672), ("T", 1.0), ("a2 & a4", None), ("a1 & !a2 & a4", None)],
)
def test_conjunction_query(solved, golden, expr, expected):
    econ, prices = solved
    if expected is None:
        expected = conjunction_probability(golden, P(expr))
    assert conjunction_query(econ, prices, expr) == pytest.approx(expected, abs=2e-3)


def test_conjunction_contradiction(solved):
    econ, prices = solved
    with pytest.raises(ContradictionError):
        conjunction_query(econ, prices, "a1 & !a1")


def test_conjunction_unknown_node(solved):
    econ, prices = solved
    with pytest.raises(QueryError, match="zz"):
        conjunction_query(econ, prices, "zz")


def test_conditional_query(solved):
    econ, prices = solved
    assert conditional_query(econ, prices, "a2", "a1") == pytest.approx(0.2, abs=2e-3)
    assert conditional_query(econ, prices, "a1", "a3") == pytest.approx(0.1144 / 0.3388, abs=2e-3)
    assert conditional_query(econ, prices, "a4", "T") == conjunction_query(econ, prices, "a4")
    assert conditional_query(econ, prices, "!a2", "a2") == 0.0


def test_conditional_degenerate(solved):
    econ, prices = solved
    bad = prices.copy()
    bad[econ.good_id(P("a1"))] = 1e-12
    with pytest.raises(DegenerateError):
        conditional_query(econ, bad, "a2", "a1")


def test_consistency_and_complements(solved):
    econ, prices = solved
    joint_based = {}
    for g in econ.goods:
        direct = conjunction_query(econ, prices, g.prop)
        assert direct == price_of(econ, prices, g.prop)
    joint = recover_joint(econ, prices)
    order = econ.network.names
    for g in econ.goods:
        s = sum(p for v, p in joint.items() if g.prop.holds(dict(zip(order, v))))
        joint_based[g.id] = s
        assert s == pytest.approx(prices[g.id], abs=10 * TOL)
    for name in econ.network.names:
        total = conjunction_query(econ, prices, name) + conjunction_query(econ, prices, "!" + name)
        assert total == pytest.approx(1.0, abs=10 * TOL)


def test_query_arbitrageur(solved):
    econ, prices = solved
    parts = ["!a1 & a2 & a3", "!a1 & !a2 & a3"]
    ext = add_query_arbitrageur(econ, "!a1 & a3", parts)
    assert ext.n_goods == econ.n_goods + 1 and len(ext.producers) == len(econ.producers) + 1
    assert econ.n_goods == 21  # original untouched
    new, report = solve(ext, init=extend_prices(prices, ext))
    assert report.converged
    g = ext.good_id(P("!a1 & a3"))
    assert new[g] == pytest.approx(0.2244, abs=1e-3)
    assert new[g] == pytest.approx(sum(new[ext.good_id(P(p))] for p in parts), abs=TOL)


def test_query_arbitrageur_cold_start(solved):
    econ, _ = solved
    ext = add_query_arbitrageur(econ, "!a1 & a3", ["!a1 & a2 & a3", "!a1 & !a2 & a3"])
    new, report = solve(ext)
    assert report.converged
    assert new[ext.good_id(P("!a1 & a3"))] == pytest.approx(0.2244, abs=1e-3)


def test_query_arbitrageur_rejects_overlap(solved):
    econ, _ = solved
    with pytest.raises(QueryError, match="exclusive"):
        add_query_arbitrageur(econ, "a1 & a2", ["a1 & a2", "a1 & a2"])
    with pytest.raises(QueryError):
        add_query_arbitrageur(econ, "a1", ["a1 & a2"])


def test_query_arbitrageur_missing_part(solved):
    econ, _ = solved
    with pytest.raises(QueryError, match="not a good"):
        add_query_arbitrageur(econ, "a2", ["a2 & a4", "a2 & !a4"])


def test_query_arbitrageur_pass_through(solved):
    econ, prices = solved
    ext = add_query_arbitrageur(econ, "a1 & a2", ["a1 & a2"])
    assert ext.n_goods == econ.n_goods and len(ext.producers) == len(econ.producers)
    assert "already a good" in ext.notices[-1]
    new, _ = solve(ext, init=prices)
    g = econ.good_id(P("a1 & a2"))
    assert new[g] == pytest.approx(prices[g], abs=TOL)


def test_extend_prices():
    class E:
        n_goods = 4

    np.testing.assert_array_equal(extend_prices([1.0, 0.2], E()), [1.0, 0.2, 0.5, 0.5])
    np.testing.assert_array_equal(extend_prices([1.0, 0.2, 0.3, 0.1, 0.9], E()), [1.0, 0.2, 0.3, 0.1])
