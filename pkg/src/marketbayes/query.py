"""Read probabilities back out of equilibrium prices.

Compiled goods are answered by their price. Anything else goes through the
joint distribution rebuilt from price ratios: each CPT entry is estimated as
``price(child & row) / price(row)`` and multiplied along the chain rule.
"""

from __future__ import annotations

import itertools

import numpy as np

from marketbayes.config import SolverConfig
from marketbayes.economy import ArbitrageProducer, Economy, Good
from marketbayes.logic import ContradictionError, Literal, Proposition, is_partition
from marketbayes.network import BayesNet, topological_order

DEGENERATE_PRICE = 1e-9


class QueryError(ValueError):
    pass


class DegenerateError(QueryError):
    pass


def _prop(p: Proposition | str) -> Proposition:
    return Proposition.parse(p) if isinstance(p, str) else p


def price_of(econ: Economy, prices, prop: Proposition | str) -> float | None:
    g = econ.good_id(_prop(prop))
    return None if g is None else float(prices[g])


def _network(econ: Economy, net: BayesNet | None) -> BayesNet:
    net = net if net is not None else econ.network
    if net is None:
        raise QueryError("economy carries no network; pass one explicitly")
    return net


def recovered_cpts(econ: Economy, prices, net: BayesNet | None = None) -> dict[str, dict]:
    """Conditional probabilities implied by the prices, per node and parent row."""
    net = _network(econ, net)
    out = {}
    for nd in net.nodes:
        table = {}
        for row in itertools.product((True, False), repeat=len(nd.parents)):
            cond = Proposition(frozenset(Literal(p, v) for p, v in zip(nd.parents, row)))
            joint = cond.conjoin(Proposition(frozenset({Literal(nd.name, True)})))
            p_cond, p_joint = price_of(econ, prices, cond), price_of(econ, prices, joint)
            if p_cond is None or p_joint is None:
                missing = cond if p_cond is None else joint
                raise QueryError(f"no good for <{missing}>; use the compiled network")
            if p_cond < DEGENERATE_PRICE:
                raise DegenerateError(f"price of <{cond}> is {p_cond:.3g}; cannot divide by it")
            table[row] = p_joint / p_cond
        out[nd.name] = table
    return out


def recover_joint(econ: Economy, prices, net: BayesNet | None = None) -> dict[tuple[bool, ...], float]:
    """Joint distribution keyed by value tuples in the network's topological order."""
    net = _network(econ, net)
    cpts = recovered_cpts(econ, prices, net)
    order = topological_order(net)
    joint = {}
    for values in itertools.product((True, False), repeat=len(order)):
        omega = dict(zip(order, values))
        p = 1.0
        for name in order:
            k = cpts[name][tuple(omega[q] for q in net.parents(name))]
            p *= k if omega[name] else 1.0 - k
        joint[values] = p
    return joint


def conjunction_query(econ: Economy, prices, prop: Proposition | str, net: BayesNet | None = None) -> float:
    prop = _prop(prop)
    if prop.is_true:
        return 1.0
    direct = price_of(econ, prices, prop)
    if direct is not None:
        return direct
    net = _network(econ, net)
    unknown = prop.nodes - set(net.names)
    if unknown:
        raise QueryError(f"unknown nodes {sorted(unknown)}")
    order = topological_order(net)
    return float(
        sum(p for values, p in recover_joint(econ, prices, net).items() if prop.holds(dict(zip(order, values))))
    )


def conditional_query(
    econ: Economy, prices, target: Proposition | str, given: Proposition | str, net: BayesNet | None = None
) -> float:
    target, given = _prop(target), _prop(given)
    denom = conjunction_query(econ, prices, given, net)
    if denom <= DEGENERATE_PRICE:
        raise DegenerateError(f"Pr({given}) = {denom:.3g} is too small to condition on")
    try:
        both = target.conjoin(given)
    except ContradictionError:
        return 0.0
    return conjunction_query(econ, prices, both, net) / denom


def add_query_arbitrageur(
    econ: Economy, prop: Proposition | str, parts: list[Proposition | str], config: SolverConfig | None = None
) -> Economy:
    """New economy with a good for ``prop`` priced through a producer against ``parts``.

    ``parts`` must be existing goods that partition ``prop``. When ``prop`` is
    itself the only part the economy is returned unchanged (a producer would be
    a pass-through with permanently zero profit).
    """
    config = config or SolverConfig()
    prop = _prop(prop)
    parts = [_prop(p) for p in parts]
    if not parts:
        raise QueryError("need at least one part")
    if len(set(parts)) != len(parts) or not is_partition(prop, parts):
        raise QueryError("parts must be mutually exclusive and jointly equivalent to the proposition")
    missing = [p for p in parts if econ.good_id(p) is None]
    if missing:
        raise QueryError(f"part <{missing[0]}> is not a good in the economy")
    goods = list(econ.goods)
    producers = list(econ.producers)
    provenance = list(econ.producer_provenance)
    notices = list(econ.notices)
    if parts == [prop]:
        notices.append(f"query <{prop}> is already a good; no arbitrageur added")
    else:
        lhs = econ.good_id(prop)
        if lhs is None:
            lhs = len(goods)
            goods.append(Good(lhs, prop))
        producers.append(
            ArbitrageProducer(lhs, tuple(econ.good_id(p) for p in parts), config.y_max, config.beta)
        )
        provenance.append({"query": str(prop), "parts": [str(p) for p in parts]})
    return Economy(
        goods,
        list(econ.consumers),
        producers,
        list(econ.consumer_provenance),
        provenance,
        econ.network,
        notices,
    )


def extend_prices(prices, econ: Economy, fill: float | None = None) -> np.ndarray:
    """Pad a price vector for goods appended after it was computed."""
    prices = np.asarray(prices, dtype=np.float64)
    if len(prices) >= econ.n_goods:
        return prices[: econ.n_goods].copy()
    pad = np.full(econ.n_goods - len(prices), 0.5 if fill is None else fill)
    return np.concatenate([prices, pad])
