"""Array kernels for the price auction: per-good excess demand, bisection clearing, sweeps.

Two interchangeable backends implement the same functions:

* ``numba`` -- explicit loops compiled with ``@njit`` (default when numba imports);
* ``numpy`` -- vectorized numpy over each good's incident agents, bisection in Python.

Set ``MARKETBAYES_BACKEND=numpy`` (or ``MARKETBAYES_DISABLE_NUMBA=1``) to force the
fallback. Both are checked against each other in the test suite.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

# clear_good status codes
OK = 0
AT_LOWER = 1
AT_UPPER = 2
EXPANDED = 4

MAX_BISECT = 200


def _default_backend() -> str:
    if os.environ.get("MARKETBAYES_DISABLE_NUMBA", "") not in ("", "0"):
        return "numpy"
    choice = os.environ.get("MARKETBAYES_BACKEND", "numba" if HAVE_NUMBA else "numpy")
    if choice not in ("numba", "numpy"):
        raise ValueError(f"MARKETBAYES_BACKEND must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numba" and not HAVE_NUMBA:
        return "numpy"
    return choice


BACKEND = _default_backend()


@dataclass(frozen=True)
class MarketArrays:
    """Economy flattened into CSR-style incidence arrays."""

    c_hi: np.ndarray
    c_lo: np.ndarray
    c_log_alpha: np.ndarray
    c_sigma: np.ndarray
    c_endow: np.ndarray
    p_lhs: np.ndarray
    p_rhs_ptr: np.ndarray
    p_rhs_idx: np.ndarray
    p_beta: np.ndarray
    p_cap: np.ndarray
    g_cons_ptr: np.ndarray
    g_cons_idx: np.ndarray
    g_cons_side: np.ndarray  # 0: good is the consumer's hi good, 1: lo good
    g_prod_ptr: np.ndarray
    g_prod_idx: np.ndarray
    g_prod_sign: np.ndarray  # +1 lhs (consumed by positive activity), -1 rhs

    @classmethod
    def from_economy(cls, econ) -> MarketArrays:
        K = econ.n_goods
        cons = econ.consumers
        prods = econ.producers
        c_hi = np.array([c.good_hi for c in cons], dtype=np.int64)
        c_lo = np.array([c.good_lo for c in cons], dtype=np.int64)
        c_log_alpha = np.log(np.array([c.alpha for c in cons], dtype=np.float64))
        c_sigma = np.array([c.sigma for c in cons], dtype=np.float64)
        c_endow = np.array([c.endowment for c in cons], dtype=np.float64)

        p_lhs = np.array([p.lhs for p in prods], dtype=np.int64)
        p_rhs_ptr = np.zeros(len(prods) + 1, dtype=np.int64)
        p_rhs_ptr[1:] = np.cumsum([len(p.rhs) for p in prods])
        p_rhs_idx = np.array([g for p in prods for g in p.rhs], dtype=np.int64)
        p_beta = np.array([p.responsiveness for p in prods], dtype=np.float64)
        p_cap = np.array([p.activity_cap for p in prods], dtype=np.float64)

        by_good_c: list[list[tuple[int, int]]] = [[] for _ in range(K)]
        for j, c in enumerate(cons):
            by_good_c[c.good_hi].append((j, 0))
            by_good_c[c.good_lo].append((j, 1))
        by_good_p: list[list[tuple[int, int]]] = [[] for _ in range(K)]
        for j, p in enumerate(prods):
            by_good_p[p.lhs].append((j, 1))
            for g in p.rhs:
                by_good_p[g].append((j, -1))

        def csr(rows):
            ptr = np.zeros(K + 1, dtype=np.int64)
            ptr[1:] = np.cumsum([len(r) for r in rows])
            flat = [x for r in rows for x in r]
            idx = np.array([a for a, _ in flat], dtype=np.int64)
            tag = np.array([b for _, b in flat], dtype=np.int64)
            return ptr, idx, tag

        g_cons_ptr, g_cons_idx, g_cons_side = csr(by_good_c)
        g_prod_ptr, g_prod_idx, g_prod_sign = csr(by_good_p)
        return cls(
            c_hi, c_lo, c_log_alpha, c_sigma, c_endow,
            p_lhs, p_rhs_ptr, p_rhs_idx, p_beta, p_cap,
            g_cons_ptr, g_cons_idx, g_cons_side,
            g_prod_ptr, g_prod_idx, g_prod_sign,
        )

    def astuple(self) -> tuple:
        return tuple(getattr(self, f) for f in self.__dataclass_fields__)


# numpy backend -----------------------------------------------------------------


def _np_excess(g, prices, floor, a: MarketArrays):
    """Aggregate excess demand for good ``g``; returns (value, clamped price count)."""
    s, e = a.g_cons_ptr[g], a.g_cons_ptr[g + 1]
    total = 0.0
    clamped = 0
    if e > s:
        js = a.g_cons_idx[s:e]
        side = a.g_cons_side[s:e]
        p_hi = prices[a.c_hi[js]]
        p_lo = prices[a.c_lo[js]]
        clamped += int(np.count_nonzero(p_hi < floor) + np.count_nonzero(p_lo < floor))
        p_hi = np.maximum(p_hi, floor)
        p_lo = np.maximum(p_lo, floor)
        sig = a.c_sigma[js]
        d = (1.0 - sig) * (np.log(p_lo) - np.log(p_hi)) - sig * a.c_log_alpha[js]
        # share of income spent on the hi good, 1 / (1 + exp(d)), computed without overflow
        share_hi = np.exp(-np.logaddexp(0.0, d))
        share_lo = np.exp(-np.logaddexp(0.0, -d))
        endow = a.c_endow[js]
        income = endow * (p_hi + p_lo)
        x = np.where(side == 0, income * share_hi / p_hi, income * share_lo / p_lo)
        total += float(np.sum(x - endow))
    s, e = a.g_prod_ptr[g], a.g_prod_ptr[g + 1]
    if e > s:
        js = a.g_prod_idx[s:e]
        sign = a.g_prod_sign[s:e]
        profit = np.array(
            [prices[a.p_rhs_idx[a.p_rhs_ptr[j]:a.p_rhs_ptr[j + 1]]].sum() - prices[a.p_lhs[j]] for j in js]
        )
        y = np.clip(a.p_beta[js] * profit, -a.p_cap[js], a.p_cap[js])
        total += float(np.sum(sign * y))
    return total, clamped


def _np_clear(g, prices, lo, hi, hi_expand, floor, a: MarketArrays):
    """Bisection on the sign of excess demand; ``prices[g]`` is left at the result."""
    status = OK
    prices[g] = lo
    f_lo, _ = _np_excess(g, prices, floor, a)
    if f_lo <= 0.0:
        return lo, (OK if f_lo == 0.0 else AT_LOWER)
    prices[g] = hi
    f_hi, _ = _np_excess(g, prices, floor, a)
    if f_hi > 0.0 and hi_expand > hi:
        status |= EXPANDED
        hi = hi_expand
        prices[g] = hi
        f_hi, _ = _np_excess(g, prices, floor, a)
    if f_hi >= 0.0:
        prices[g] = hi
        return hi, status | (OK if f_hi == 0.0 else AT_UPPER)
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        prices[g] = mid
        f, _ = _np_excess(g, prices, floor, a)
        if f > 0.0:
            lo, f_lo = mid, f
        elif f < 0.0:
            hi, f_hi = mid, f
        else:
            return mid, status
    p = lo if abs(f_lo) <= abs(f_hi) else hi
    prices[g] = p
    return p, status


def _np_sweep(prices, order, snapshot, lo, hi, hi_expand, floor, a: MarketArrays):
    """One auction round in place; returns (max_delta, expanded, endpoint) counts."""
    start = prices.copy()
    work = start.copy() if snapshot else prices
    new = np.empty(len(order))
    n_exp = n_end = 0
    for i, g in enumerate(order):
        p, st = _np_clear(g, work, lo, hi, hi_expand, floor, a)
        n_exp += bool(st & EXPANDED)
        n_end += bool(st & (AT_LOWER | AT_UPPER))
        if snapshot:
            work[g] = start[g]
        new[i] = p
    prices[order] = new
    return float(np.max(np.abs(prices - start))) if len(prices) else 0.0, n_exp, n_end


# numba backend -----------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _nb_excess(g, prices, floor, c_hi, c_lo, c_log_alpha, c_sigma, c_endow,
                   p_lhs, p_rhs_ptr, p_rhs_idx, p_beta, p_cap,
                   g_cons_ptr, g_cons_idx, g_cons_side,
                   g_prod_ptr, g_prod_idx, g_prod_sign):
        total = 0.0
        clamped = 0
        for t in range(g_cons_ptr[g], g_cons_ptr[g + 1]):
            j = g_cons_idx[t]
            p_hi = prices[c_hi[j]]
            p_lo = prices[c_lo[j]]
            if p_hi < floor:
                p_hi = floor
                clamped += 1
            if p_lo < floor:
                p_lo = floor
                clamped += 1
            sig = c_sigma[j]
            d = (1.0 - sig) * (math.log(p_lo) - math.log(p_hi)) - sig * c_log_alpha[j]
            if d >= 0.0:
                ed = math.exp(-d)
                share_hi = ed / (1.0 + ed)
                share_lo = 1.0 / (1.0 + ed)
            else:
                ed = math.exp(d)
                share_hi = 1.0 / (1.0 + ed)
                share_lo = ed / (1.0 + ed)
            endow = c_endow[j]
            income = endow * (p_hi + p_lo)
            if g_cons_side[t] == 0:
                total += income * share_hi / p_hi - endow
            else:
                total += income * share_lo / p_lo - endow
        for t in range(g_prod_ptr[g], g_prod_ptr[g + 1]):
            j = g_prod_idx[t]
            profit = -prices[p_lhs[j]]
            for r in range(p_rhs_ptr[j], p_rhs_ptr[j + 1]):
                profit += prices[p_rhs_idx[r]]
            y = p_beta[j] * profit
            cap = p_cap[j]
            if y > cap:
                y = cap
            elif y < -cap:
                y = -cap
            total += g_prod_sign[t] * y
        return total, clamped

    @njit(cache=True)
    def _nb_clear(g, prices, lo, hi, hi_expand, floor, c_hi, c_lo, c_log_alpha, c_sigma, c_endow,
                  p_lhs, p_rhs_ptr, p_rhs_idx, p_beta, p_cap,
                  g_cons_ptr, g_cons_idx, g_cons_side,
                  g_prod_ptr, g_prod_idx, g_prod_sign):
        status = 0
        prices[g] = lo
        f_lo, _ = _nb_excess(g, prices, floor, c_hi, c_lo, c_log_alpha, c_sigma, c_endow,
                             p_lhs, p_rhs_ptr, p_rhs_idx, p_beta, p_cap,
                             g_cons_ptr, g_cons_idx, g_cons_side, g_prod_ptr, g_prod_idx, g_prod_sign)
        if f_lo <= 0.0:
            return lo, (0 if f_lo == 0.0 else 1)
        prices[g] = hi
        f_hi, _ = _nb_excess(g, prices, floor, c_hi, c_lo, c_log_alpha, c_sigma, c_endow,
                             p_lhs, p_rhs_ptr, p_rhs_idx, p_beta, p_cap,
                             g_cons_ptr, g_cons_idx, g_cons_side, g_prod_ptr, g_prod_idx, g_prod_sign)
        if f_hi > 0.0 and hi_expand > hi:
            status |= 4
            hi = hi_expand
            prices[g] = hi
            f_hi, _ = _nb_excess(g, prices, floor, c_hi, c_lo, c_log_alpha, c_sigma, c_endow,
                                 p_lhs, p_rhs_ptr, p_rhs_idx, p_beta, p_cap,
                                 g_cons_ptr, g_cons_idx, g_cons_side, g_prod_ptr, g_prod_idx, g_prod_sign)
        if f_hi >= 0.0:
            prices[g] = hi
            return hi, (status if f_hi == 0.0 else status | 2)
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            prices[g] = mid
            f, _ = _nb_excess(g, prices, floor, c_hi, c_lo, c_log_alpha, c_sigma, c_endow,
                              p_lhs, p_rhs_ptr, p_rhs_idx, p_beta, p_cap,
                              g_cons_ptr, g_cons_idx, g_cons_side, g_prod_ptr, g_prod_idx, g_prod_sign)
            if f > 0.0:
                lo = mid
                f_lo = f
            elif f < 0.0:
                hi = mid
                f_hi = f
            else:
                return mid, status
        p = lo if abs(f_lo) <= abs(f_hi) else hi
        prices[g] = p
        return p, status

    @njit(cache=True)
    def _nb_sweep(prices, order, snapshot, lo, hi, hi_expand, floor,
                  c_hi, c_lo, c_log_alpha, c_sigma, c_endow,
                  p_lhs, p_rhs_ptr, p_rhs_idx, p_beta, p_cap,
                  g_cons_ptr, g_cons_idx, g_cons_side,
                  g_prod_ptr, g_prod_idx, g_prod_sign):
        start = prices.copy()
        if snapshot:
            work = start.copy()
        else:
            work = prices
        new = np.empty(order.shape[0])
        n_exp = 0
        n_end = 0
        for i in range(order.shape[0]):
            g = order[i]
            p, st = _nb_clear(g, work, lo, hi, hi_expand, floor,
                              c_hi, c_lo, c_log_alpha, c_sigma, c_endow,
                              p_lhs, p_rhs_ptr, p_rhs_idx, p_beta, p_cap,
                              g_cons_ptr, g_cons_idx, g_cons_side,
                              g_prod_ptr, g_prod_idx, g_prod_sign)
            if st & 4:
                n_exp += 1
            if st & 3:
                n_end += 1
            if snapshot:
                work[g] = start[g]
            new[i] = p
        max_delta = 0.0
        for i in range(order.shape[0]):
            g = order[i]
            prices[g] = new[i]
            dlt = abs(new[i] - start[g])
            if dlt > max_delta:
                max_delta = dlt
        return max_delta, n_exp, n_end


# dispatch ----------------------------------------------------------------------


def excess(g: int, prices: np.ndarray, floor: float, a: MarketArrays, backend: str | None = None):
    if (backend or BACKEND) == "numba":
        v, c = _nb_excess(g, prices, floor, *a.astuple())
        return float(v), int(c)
    return _np_excess(g, prices, floor, a)


def clear(g, prices, lo, hi, hi_expand, floor, a: MarketArrays, backend: str | None = None):
    """Clear good ``g`` by bisection; returns (price, status bits). Mutates ``prices[g]``."""
    hi_expand = hi if hi_expand is None else hi_expand
    if (backend or BACKEND) == "numba":
        p, st = _nb_clear(g, prices, lo, hi, hi_expand, floor, *a.astuple())
        return float(p), int(st)
    return _np_clear(g, prices, lo, hi, hi_expand, floor, a)


def sweep(prices, order, snapshot, lo, hi, hi_expand, floor, a: MarketArrays, backend: str | None = None):
    hi_expand = hi if hi_expand is None else hi_expand
    if (backend or BACKEND) == "numba":
        d, ne, nd = _nb_sweep(prices, order, snapshot, lo, hi, hi_expand, floor, *a.astuple())
        return float(d), int(ne), int(nd)
    return _np_sweep(prices, order, snapshot, lo, hi, hi_expand, floor, a)
