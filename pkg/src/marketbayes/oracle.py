"""Exact inference by enumerating every truth assignment.

Deliberately naive: this is the ground truth market prices are checked
against, so it shares nothing with the economy or solver code.
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping

import numpy as np

from marketbayes.logic import Proposition
from marketbayes.network import BayesNet, topological_order

ENUMERATION_CAP = 20


class OracleError(ValueError):
    pass


def joint_probability(net: BayesNet, assignment: Mapping[str, bool]) -> float:
    """Chain-rule product of CPT entries selected by a total assignment."""
    missing = [n for n in net.names if n not in assignment]
    if missing:
        raise OracleError(f"assignment is partial; missing {missing}")
    p = 1.0
    for n in net.nodes:
        k = n.cpt[tuple(bool(assignment[q]) for q in n.parents)]
        p *= k if assignment[n.name] else 1.0 - k
    return p


def _states(net: BayesNet, cap: int) -> tuple[list[str], np.ndarray, np.ndarray]:
    n = len(net)
    if n > cap:
        raise OracleError(
            f"{n} nodes exceed the enumeration cap of {cap}; pass a larger cap to override"
        )
    order = topological_order(net)
    col = {name: j for j, name in enumerate(order)}
    # row r holds assignment bits of r, first node most significant
    codes = np.arange(1 << n, dtype=np.int64)
    states = ((codes[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(bool)
    probs = np.ones(1 << n)
    for name in order:
        nd = net[name]
        kvals = np.empty(1 << n)
        pcols = [col[p] for p in nd.parents]
        for row, k in nd.cpt.items():
            mask = np.ones(1 << n, dtype=bool)
            for c, v in zip(pcols, row):
                mask &= states[:, c] == v
            kvals[mask] = k
        probs *= np.where(states[:, col[name]], kvals, 1.0 - kvals)
    return order, states, probs


def full_joint_table(net: BayesNet, cap: int = ENUMERATION_CAP) -> dict[tuple[bool, ...], float]:
    """All 2**n joint probabilities keyed by value tuples in topological order."""
    _, states, probs = _states(net, cap)
    return {tuple(bool(v) for v in s): float(p) for s, p in zip(states, probs)}


def conjunction_probability(
    net: BayesNet, prop: Proposition, cap: int = ENUMERATION_CAP
) -> float:
    unknown = prop.nodes - set(net.names)
    if unknown:
        raise OracleError(f"proposition mentions unknown nodes {sorted(unknown)}")
    if prop.is_true:
        return 1.0
    order, states, probs = _states(net, cap)
    col = {name: j for j, name in enumerate(order)}
    mask = np.ones(len(probs), dtype=bool)
    for lit in prop.literals:
        mask &= states[:, col[lit.node]] == lit.positive
    return float(probs[mask].sum())


def marginals(net: BayesNet, props, cap: int = ENUMERATION_CAP) -> list[float]:
    """Probabilities of many propositions from a single enumeration."""
    order, states, probs = _states(net, cap)
    col = {name: j for j, name in enumerate(order)}
    out = []
    for prop in props:
        mask = np.ones(len(probs), dtype=bool)
        for lit in prop.literals:
            mask &= states[:, col[lit.node]] == lit.positive
        out.append(float(probs[mask].sum()))
    return out


def assignments(net: BayesNet):
    """Every total assignment as a dict, first topological node most significant."""
    order = topological_order(net)
    for values in itertools.product((True, False), repeat=len(order)):
        yield dict(zip(order, values))
