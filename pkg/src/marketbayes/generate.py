"""Random moral networks for tests, benchmarks and ``marketbayes generate``."""

from __future__ import annotations

import itertools

import numpy as np

from marketbayes.network import BayesNet, Node


def random_moral_network(
    rng: np.random.Generator | int,
    n_nodes: int = 6,
    max_parents: int = 2,
    k_range: tuple[float, float] = (0.05, 0.95),
    prefix: str = "x",
) -> BayesNet:
    """Sample a moral DAG node by node, naming nodes ``x1 .. xn`` in topological order.

    A node with several parents picks an existing node ``v`` and then parents
    from ``v`` and its own parents only, which keeps every parent pair married.
    """
    rng = np.random.default_rng(rng)
    width = len(str(n_nodes))
    names = [f"{prefix}{i + 1:0{width}d}" for i in range(n_nodes)]
    parents: list[tuple[str, ...]] = []
    for i in range(n_nodes):
        q = int(rng.integers(0, min(max_parents, i) + 1))
        chosen: tuple[str, ...] = ()
        if q == 1:
            chosen = (names[int(rng.integers(0, i))],)
        elif q >= 2:
            candidates = [j for j in range(i) if parents[j]]
            if not candidates:
                chosen = (names[int(rng.integers(0, i))],)
            else:
                v = int(rng.choice(candidates))
                pool = [names.index(p) for p in parents[v]]
                # pool is a clique (moral by construction) so v plus any subset stays married
                extra = rng.choice(pool, size=min(q - 1, len(pool)), replace=False)
                chosen = tuple(names[j] for j in sorted({v, *map(int, extra)}))
        parents.append(chosen)
    lo, hi = k_range
    nodes = []
    for name, ps in zip(names, parents):
        rows = list(itertools.product((True, False), repeat=len(ps)))
        ks = rng.uniform(lo, hi, size=len(rows))
        nodes.append(Node(name, ps, {r: float(k) for r, k in zip(rows, ks)}))
    return BayesNet(tuple(nodes))


def diamond_network(rng: np.random.Generator | int, k_range=(0.05, 0.95)) -> BayesNet:
    """a -> b, a -> c, b -> d, c -> d with random CPT entries (not moral)."""
    rng = np.random.default_rng(rng)

    def rows(q):
        return {r: float(rng.uniform(*k_range)) for r in itertools.product((True, False), repeat=q)}

    return BayesNet(
        (
            Node("a", (), rows(0)),
            Node("b", ("a",), rows(1)),
            Node("c", ("a",), rows(1)),
            Node("d", ("b", "c"), rows(2)),
        )
    )
