import itertools

import numpy as np
import pytest

from marketbayes.generate import random_moral_network
from marketbayes.logic import ContradictionError, Proposition
from marketbayes.network import BayesNet, node
from marketbayes.oracle import (
    OracleError,
    conjunction_probability,
    full_joint_table,
    joint_probability,
)

P = Proposition.parse


def test_joint_all_true(golden):
    omega = dict(a1=True, a2=True, a3=True, a4=True)
    assert joint_probability(golden, omega) == pytest.approx(0.4 * 0.2 * 0.11 * 0.25, abs=1e-15)
    assert joint_probability(golden, omega) == pytest.approx(0.0022, abs=1e-15)


def test_joint_last_false(golden):
    omega = dict(a1=True, a2=True, a3=True, a4=False)
    assert joint_probability(golden, omega) == pytest.approx(0.0066, abs=1e-15)


def test_joint_partial_assignment_rejected(golden):
    with pytest.raises(OracleError):
        joint_probability(golden, dict(a1=True))


def test_joint_sums_to_one(golden):
    total = sum(
        joint_probability(golden, dict(zip(golden.names, v)))
        for v in itertools.product((True, False), repeat=4)
    )
    assert total == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "expr, expected",
    [
        ("a3", 0.08 * 0.11 + 0.18 * 0.22 + 0.32 * 0.33 + 0.42 * 0.44),
        ("a4", 0.3388 * 0.25 + 0.6612 * 0.85),
        ("!a1 & a3", 0.18 * 0.22 + 0.42 * 0.44),
        ("a1 & a3", 0.1144),
        ("a3 & a4", 0.0847),
        ("T", 1.0),
    ],
)
def test_conjunction_golden(golden, expr, expected):
    assert conjunction_probability(golden, P(expr)) == pytest.approx(expected, abs=1e-12)


def test_conjunction_values_frozen(golden):
    assert conjunction_probability(golden, P("a3")) == pytest.approx(0.3388, abs=1e-12)
    assert conjunction_probability(golden, P("a4")) == pytest.approx(0.64672, abs=1e-12)
    assert conjunction_probability(golden, P("!a1 & a3")) == pytest.approx(0.2244, abs=1e-12)


def test_conjunction_matches_scalar_enumeration(golden):
    # vectorized enumeration against the scalar chain-rule path
    for expr in ["a2 & !a4", "!a1 & !a2 & a3", "a1 & a4"]:
        prop = P(expr)
        brute = sum(
            joint_probability(golden, omega)
            for omega in (dict(zip(golden.names, v)) for v in itertools.product((True, False), repeat=4))
            if prop.holds(omega)
        )
        assert conjunction_probability(golden, prop) == pytest.approx(brute, abs=1e-15)


def test_contradiction_rejected():
    with pytest.raises(ContradictionError):
        P("a1 & !a1")


def test_unknown_node(golden):
    with pytest.raises(OracleError):
        conjunction_probability(golden, P("zz"))


def test_single_root_table():
    table = full_joint_table(BayesNet((node("a1", (), 0.4),)))
    assert table == {(True,): pytest.approx(0.4), (False,): pytest.approx(0.6)}


def test_golden_table(golden):
    table = full_joint_table(golden)
    assert len(table) == 16
    assert sum(table.values()) == pytest.approx(1.0, abs=1e-12)


def test_independent_pair():
    table = full_joint_table(BayesNet((node("a", (), 0.5), node("b", (), 0.5))))
    assert list(table.values()) == [0.25] * 4


def test_cap():
    with pytest.raises(OracleError, match="cap"):
        full_joint_table(BayesNet((node("a", (), 0.5), node("b", (), 0.5))), cap=1)


@pytest.mark.parametrize("seed", range(20))
def test_random_net_properties(seed):
    rng = np.random.default_rng(seed)
    net = random_moral_network(rng, int(rng.integers(1, 11)), 3)
    assert sum(full_joint_table(net).values()) == pytest.approx(1.0, abs=1e-12)
    for name in net.names:
        pos = conjunction_probability(net, Proposition.of(name))
        neg = conjunction_probability(net, Proposition.of("!" + name))
        assert pos + neg == pytest.approx(1.0, abs=1e-12)
    if len(net) >= 2:
        a, b = net.names[:2]
        whole = conjunction_probability(net, Proposition.of(a))
        parts = conjunction_probability(net, Proposition.of(a, b)) + conjunction_probability(
            net, Proposition.of(a, "!" + b)
        )
        assert whole == pytest.approx(parts, abs=1e-12)
