"""Competitive equilibrium by a per-good auction (tatonnement).

Each round visits every non-numeraire good in creation order and sets its
price where its aggregate excess demand vanishes, holding the other prices
fixed. In ``sequential`` mode later goods see prices cleared earlier in the
same round; in ``snapshot-parallel`` mode every good is cleared against the
round-start prices and the (relaxed) updates land together.

The auction converges linearly, often with a per-round contraction near 0.9,
so a small price step does not by itself mean small error. The default
``tail`` stop rule therefore also requires the estimated remaining distance
to the fixed point, ``step * r / (1 - r)`` with ``r`` the worst recent ratio
of successive steps, to be at most ``tol / 2``; the other half of ``tol`` is
slack for error in that estimate.
"""

from __future__ import annotations

import csv
import logging
from collections import deque
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from marketbayes import kernels
from marketbayes.config import SNAPSHOT, SolverConfig
from marketbayes.economy import (
    NUMERAIRE,
    Economy,
    excess_demand_vector,
    producer_unit_profit,
)

log = logging.getLogger(__name__)


@dataclass
class ConvergenceReport:
    converged: bool
    rounds_used: int
    final_max_delta: float
    trajectory: list[np.ndarray] = field(default_factory=list, repr=False)
    deltas: list[float] = field(default_factory=list, repr=False)
    warnings: list[str] = field(default_factory=list)
    backend: str = field(default_factory=lambda: kernels.BACKEND)

    def summary(self) -> str:
        state = "converged" if self.converged else "NOT converged"
        return (
            f"{state} after {self.rounds_used} rounds "
            f"(final max price change {self.final_max_delta:.3g}, {len(self.warnings)} warnings)"
        )


def _arrays(econ: Economy) -> kernels.MarketArrays:
    cached = getattr(econ, "_arrays", None)
    if cached is None or cached[0] != (len(econ.goods), len(econ.consumers), len(econ.producers)):
        arrays = kernels.MarketArrays.from_economy(econ)
        econ._arrays = ((len(econ.goods), len(econ.consumers), len(econ.producers)), arrays)
        return arrays
    return cached[1]


def initial_prices(econ: Economy, config: SolverConfig) -> np.ndarray:
    prices = np.full(econ.n_goods, config.init_price)
    prices[NUMERAIRE] = 1.0
    return prices


def clear_price(econ: Economy, g: int, prices: np.ndarray, config: SolverConfig) -> tuple[float, list[str]]:
    """Market-clearing price of good ``g`` with every other price held fixed."""
    if g == NUMERAIRE:
        raise ValueError("the numeraire price is fixed at 1")
    lo, hi = config.bracket
    work = np.array(prices, dtype=np.float64)
    p, status = kernels.clear(g, work, lo, hi, config.bracket_expand, config.price_floor, _arrays(econ))
    return p, _status_warnings(econ, g, status, config)


def _status_warnings(econ: Economy, g: int, status: int, config: SolverConfig) -> list[str]:
    out = []
    if status & kernels.EXPANDED:
        out.append(f"<{econ.label(g)}>: demand positive at {config.bracket[1]}; bracket expanded to {config.bracket_expand}")
    if status & kernels.AT_LOWER:
        out.append(f"<{econ.label(g)}>: excess demand negative across bracket; price set to lower end")
    if status & kernels.AT_UPPER:
        out.append(f"<{econ.label(g)}>: excess demand positive across bracket; price set to upper end")
    return out


def auction_round(econ: Economy, prices: np.ndarray, config: SolverConfig) -> tuple[np.ndarray, float]:
    """One pass over all non-numeraire goods; returns (new prices, max absolute change)."""
    new, delta, _ = _round(econ, np.array(prices, dtype=np.float64), config)
    return new, delta


def _round(econ: Economy, prices: np.ndarray, config: SolverConfig, pool=None):
    arrays = _arrays(econ)
    order = np.arange(1, econ.n_goods, dtype=np.int64)
    lo, hi = config.bracket
    hi_exp = config.bracket_expand if config.bracket_expand is not None else hi
    snapshot = config.mode == SNAPSHOT
    start = prices.copy()
    if snapshot and pool is not None:
        # goods are independent against a frozen snapshot; commit all at the end

        def one(g):
            work = start.copy()
            return kernels.clear(g, work, lo, hi, hi_exp, config.price_floor, arrays)

        results = list(pool.map(one, order))
        warnings = []
        for g, (p, st) in zip(order, results):
            prices[g] = p
            warnings += _status_warnings(econ, int(g), st, config)
    else:
        _, n_exp, n_end = kernels.sweep(prices, order, snapshot, lo, hi, hi_exp, config.price_floor, arrays)
        warnings = []
        if n_exp:
            warnings.append(f"{n_exp} goods needed the expanded bracket this round")
        if n_end:
            warnings.append(f"{n_end} goods hit a bracket endpoint this round")
    if snapshot and config.snapshot_relaxation < 1.0:
        prices = start + config.snapshot_relaxation * (prices - start)
    prices[NUMERAIRE] = 1.0
    delta = float(np.max(np.abs(prices - start))) if len(order) else 0.0
    return prices, delta, warnings


def tail_estimate(deltas: Sequence[float], config: SolverConfig, window: int = 3) -> float:
    """Geometric bound on the distance still to travel after the last step."""
    last = deltas[-1]
    if last == 0.0:
        return 0.0
    recent = deltas[-(window + 1):]
    ratios = [b / a for a, b in zip(recent, recent[1:]) if a > 0.0]
    r = max(ratios) if ratios else config.assumed_contraction
    r = min(r, 0.999)
    return last * r / (1.0 - r)


def solve(
    econ: Economy,
    config: SolverConfig | None = None,
    init: Sequence[float] | np.ndarray | None = None,
    trace: str | Path | None = None,
    workers: int | None = None,
) -> tuple[np.ndarray, ConvergenceReport]:
    """Iterate auction rounds until one full round moves no price by ``tol`` or more.

    ``init`` overrides the uniform starting price (its numeraire entry is
    ignored). ``workers`` > 1 clears goods on a thread pool in snapshot mode.
    Non-convergence is reported, not raised.
    """
    config = config or SolverConfig()
    if init is None:
        prices = initial_prices(econ, config)
    else:
        prices = np.array(init, dtype=np.float64)
        if prices.shape != (econ.n_goods,):
            raise ValueError(f"init has shape {prices.shape}, expected ({econ.n_goods},)")
        prices[NUMERAIRE] = 1.0
    trajectory: deque[np.ndarray] = deque(maxlen=config.trace_length)
    warnings: list[str] = []
    trace_rows = [] if trace is not None else None

    pool = None
    if config.mode == SNAPSHOT and workers and workers > 1:
        pool = ThreadPoolExecutor(max_workers=workers)
    try:
        converged = False
        delta = float("inf")
        rounds = 0
        deltas: list[float] = []
        for rounds in range(1, config.max_rounds + 1):
            prices, delta, round_warnings = _round(econ, prices, config, pool)
            deltas.append(delta)
            warnings += [f"round {rounds}: {w}" for w in round_warnings]
            trajectory.append(prices.copy())
            if trace_rows is not None:
                z = excess_demand_vector(econ, prices)
                trace_rows += [(rounds, econ.label(g), prices[g], z[g]) for g in range(econ.n_goods)]
            if delta < config.tol and (
                config.stop_rule == "delta" or tail_estimate(deltas, config) <= 0.5 * config.tol
            ):
                converged = True
                break
    finally:
        if pool is not None:
            pool.shutdown()

    if trace_rows is not None:
        with open(trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["round", "good", "price", "excess_demand"])
            w.writerows(trace_rows)
    if not converged:
        log.warning("auction did not converge in %d rounds (last max change %.3g)", rounds, delta)
    report = ConvergenceReport(converged, rounds, delta, list(trajectory), deltas, warnings)
    return prices, report


@dataclass
class EquilibriumReport:
    excess_demand: np.ndarray
    producer_profit: np.ndarray
    consumer_residual: np.ndarray
    tol: float

    @property
    def max_excess(self) -> float:
        return float(np.max(np.abs(self.excess_demand))) if self.excess_demand.size else 0.0

    @property
    def max_profit(self) -> float:
        return float(np.max(np.abs(self.producer_profit))) if self.producer_profit.size else 0.0

    @property
    def max_ratio_residual(self) -> float:
        return float(np.max(self.consumer_residual)) if self.consumer_residual.size else 0.0

    @property
    def passed(self) -> bool:
        return max(self.max_excess, self.max_profit, self.max_ratio_residual) <= self.tol


def check_equilibrium(econ: Economy, prices, tol: float) -> EquilibriumReport:
    """Material balance per good, zero profit per producer, ratio pinning per consumer."""
    prices = np.asarray(prices, dtype=np.float64)
    z = excess_demand_vector(econ, prices)
    profits = np.array([producer_unit_profit(p, prices) for p in econ.producers])
    ratio = np.array([abs(prices[c.good_hi] - c.alpha * prices[c.good_lo]) for c in econ.consumers])
    return EquilibriumReport(z, profits, ratio, tol)
