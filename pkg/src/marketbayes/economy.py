"""Goods, CES consumers, arbitrage producers, and their price responses.

Functions here evaluate one agent at a time in plain Python and serve as the
readable reference for the vectorized kernels in :mod:`marketbayes.kernels`.
Prices are a numpy array indexed by good id, with the numeraire at id 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from marketbayes.logic import Proposition
from marketbayes.network import BayesNet

NUMERAIRE = 0


class DemandError(ValueError):
    pass


@dataclass(frozen=True)
class Good:
    id: int
    prop: Proposition
    is_numeraire: bool = False


@dataclass(frozen=True)
class CesConsumer:
    """Two-good CES consumer holding ``endowment`` units of each good.

    ``alpha`` weights ``good_hi``; ``good_lo`` has weight 1, so the consumer's
    endowment is exactly its demand when ``p_hi == alpha * p_lo``.
    """

    good_hi: int
    good_lo: int
    alpha: float
    sigma: float = 50.0
    endowment: float = 10.0

    def __post_init__(self) -> None:
        if self.good_hi == self.good_lo:
            raise ValueError("consumer goods must differ")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie strictly inside (0, 1), got {self.alpha}")
        if not (self.sigma > 1 and math.isfinite(self.sigma)):
            raise ValueError(f"sigma must be finite and > 1, got {self.sigma}")
        if not self.endowment > 0:
            raise ValueError("endowment must be positive")


@dataclass(frozen=True)
class ArbitrageProducer:
    """Constant-returns converter between ``lhs`` and the bundle ``rhs``.

    Positive activity consumes ``lhs`` and produces one unit of every ``rhs``
    good; negative activity runs the conversion backwards.
    """

    lhs: int
    rhs: tuple[int, ...]
    activity_cap: float = 1e4
    responsiveness: float = 100.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "rhs", tuple(self.rhs))
        if not self.rhs:
            raise ValueError("producer needs at least one rhs good")
        if len(set(self.rhs)) != len(self.rhs) or self.lhs in self.rhs:
            raise ValueError("rhs goods must be distinct and differ from lhs")
        if not (self.activity_cap > 0 and self.responsiveness > 0):
            raise ValueError("activity_cap and responsiveness must be positive")


@dataclass
class Economy:
    goods: list[Good]
    consumers: list[CesConsumer]
    producers: list[ArbitrageProducer]
    consumer_provenance: list[dict] = field(default_factory=list)
    producer_provenance: list[dict] = field(default_factory=list)
    network: BayesNet | None = None
    notices: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        self._by_prop = {g.prop: g.id for g in self.goods}
        self._node_order = (
            {name: i for i, name in enumerate(self.network.names)} if self.network else None
        )

    @property
    def n_goods(self) -> int:
        return len(self.goods)

    def good_id(self, prop: Proposition) -> int | None:
        return self._by_prop.get(prop)

    def label(self, g: int) -> str:
        return self.goods[g].prop.label(self._node_order)

    def validate(self) -> None:
        ids = [g.id for g in self.goods]
        if ids != list(range(len(ids))):
            raise ValueError("good ids must be dense and in order")
        numeraires = [g.id for g in self.goods if g.is_numeraire]
        if numeraires != [NUMERAIRE] or not self.goods[NUMERAIRE].prop.is_true:
            raise ValueError("good 0 must be the single numeraire with proposition TRUE")
        n = len(self.goods)
        for c in self.consumers:
            if not (0 <= c.good_hi < n and 0 <= c.good_lo < n):
                raise ValueError(f"consumer references unknown good: {c}")
        for p in self.producers:
            if not all(0 <= g < n for g in (p.lhs, *p.rhs)):
                raise ValueError(f"producer references unknown good: {p}")
        if self.consumer_provenance and len(self.consumer_provenance) != len(self.consumers):
            raise ValueError("consumer provenance is not total")
        if self.producer_provenance and len(self.producer_provenance) != len(self.producers):
            raise ValueError("producer provenance is not total")


def ces_utility(c: CesConsumer, x1: float, x2: float) -> float:
    if x1 < 0 or x2 < 0:
        raise DemandError("quantities must be non-negative")
    r = (c.sigma - 1.0) / c.sigma
    return (c.alpha * x1**r + x2**r) ** (1.0 / r)


def ces_demand(c: CesConsumer, p1: float, p2: float) -> tuple[float, float]:
    """Utility-maximizing bundle on the budget line through the endowment.

    Uses the expenditure-share form of the closed-form demands,
    share_i = w_i / (w_1 + w_2) with w_i = alpha_i**sigma * p_i**(1 - sigma),
    evaluated in log space so high sigma neither overflows nor underflows.
    """
    if not (p1 > 0 and p2 > 0):
        raise DemandError(f"prices must be positive, got ({p1}, {p2})")
    income = c.endowment * (p1 + p2)
    s = c.sigma
    d = (1.0 - s) * (math.log(p2) - math.log(p1)) - s * math.log(c.alpha)
    share1 = _logistic(-d)
    return income * share1 / p1, income * (1.0 - share1) / p2


def _logistic(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def consumer_excess_demand(c: CesConsumer, prices) -> tuple[float, float]:
    x1, x2 = ces_demand(c, prices[c.good_hi], prices[c.good_lo])
    return x1 - c.endowment, x2 - c.endowment


def producer_unit_profit(pr: ArbitrageProducer, prices) -> float:
    return float(sum(prices[g] for g in pr.rhs) - prices[pr.lhs])


def producer_response(pr: ArbitrageProducer, prices) -> float:
    y = pr.responsiveness * producer_unit_profit(pr, prices)
    return min(max(y, -pr.activity_cap), pr.activity_cap)


def aggregate_excess_demand(econ: Economy, g: int, prices) -> float:
    """Net demand for good ``g`` summed over every agent that trades it."""
    total = 0.0
    for c in econ.consumers:
        if g in (c.good_hi, c.good_lo):
            z_hi, z_lo = consumer_excess_demand(c, prices)
            total += z_hi if g == c.good_hi else z_lo
    for pr in econ.producers:
        if g == pr.lhs:
            total += producer_response(pr, prices)
        elif g in pr.rhs:
            total -= producer_response(pr, prices)
    return total


def excess_demand_vector(econ: Economy, prices) -> np.ndarray:
    return np.array([aggregate_excess_demand(econ, g.id, prices) for g in econ.goods])
