"""Binary-node Bayesian networks: model, validation, ordering, moralization, JSON I/O.

CPT rows are keyed by a tuple of parent polarities aligned with ``Node.parents``
(``True`` = positive literal). In the JSON format the same key is written as a
binary string, character ``j`` giving the polarity of the ``j``-th listed parent.
"""

from __future__ import annotations

import heapq
import itertools
import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from pathlib import Path


class NetworkError(ValueError):
    pass


class CycleError(NetworkError):
    def __init__(self, edge: tuple[str, str]):
        super().__init__(f"cycle detected through back edge {edge[0]} -> {edge[1]}")
        self.edge = edge


class NetworkFormatError(NetworkError):
    """Malformed network file; ``field`` names the offending location."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


Row = tuple[bool, ...]


@dataclass(frozen=True)
class Node:
    name: str
    parents: tuple[str, ...] = ()
    cpt: Mapping[Row, float] = field(default_factory=dict)

    def prob(self, parent_values: Row) -> float:
        """Pr(node = true | parents = parent_values)."""
        return self.cpt[tuple(parent_values)]


def node(name: str, parents: Iterable[str] = (), cpt=None) -> Node:
    """Convenience constructor accepting ``cpt`` as a float (roots), a dict or a row list.

    A row list is ordered like ``itertools.product((True, False), repeat=q)``:
    all-positive first, first parent most significant.
    """
    parents = tuple(parents)
    if isinstance(cpt, (int, float)):
        table = {(): float(cpt)}
    elif isinstance(cpt, Mapping):
        table = {_row_key(k): float(v) for k, v in cpt.items()}
    else:
        rows = itertools.product((True, False), repeat=len(parents))
        table = {r: float(v) for r, v in zip(rows, cpt)}
    return Node(name, parents, table)


def _row_key(k) -> Row:
    if isinstance(k, str):
        return tuple(c == "1" for c in k)
    return tuple(bool(b) for b in k)


@dataclass(frozen=True)
class BayesNet:
    nodes: tuple[Node, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "_by_name", {n.name: n for n in self.nodes})

    def __getitem__(self, name: str) -> Node:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def names(self) -> list[str]:
        return [n.name for n in self.nodes]

    @property
    def edges(self) -> list[tuple[str, str]]:
        return [(p, n.name) for n in self.nodes for p in n.parents]

    def parents(self, name: str) -> tuple[str, ...]:
        return self._by_name[name].parents

    def children(self, name: str) -> list[str]:
        return [n.name for n in self.nodes if name in n.parents]

    def index(self) -> dict[str, int]:
        """1-based topological index of every node."""
        return {name: i + 1 for i, name in enumerate(topological_order(self))}


@dataclass(frozen=True)
class Violation:
    node: str
    rule: str
    message: str


def validate(net: BayesNet) -> list[Violation]:
    out: list[Violation] = []
    seen: set[str] = set()
    for n in net.nodes:
        if n.name in seen:
            out.append(Violation(n.name, "duplicate-name", f"node {n.name!r} defined twice"))
        seen.add(n.name)
    for n in net.nodes:
        if len(set(n.parents)) != len(n.parents):
            out.append(Violation(n.name, "duplicate-parent", "parent listed twice"))
        for p in n.parents:
            if p == n.name:
                out.append(Violation(n.name, "self-loop", "node is its own parent"))
            elif p not in seen:
                out.append(Violation(n.name, "unknown-parent", f"parent {p!r} is not a node"))
        q = len(n.parents)
        expected = set(itertools.product((True, False), repeat=q))
        keys = set(n.cpt)
        if len(n.cpt) != 2**q or keys != expected:
            out.append(
                Violation(n.name, "cpt-rows", f"expected {2**q} rows for {q} parents, got {len(n.cpt)}")
            )
        for key, k in n.cpt.items():
            if not 0.0 <= k <= 1.0:
                out.append(Violation(n.name, "cpt-range", f"row '{_row_str(key)}' has k={k} outside [0,1]"))
    if not any(v.rule in ("unknown-parent", "self-loop", "duplicate-name") for v in out):
        try:
            topological_order(net)
        except CycleError as exc:
            out.append(Violation(exc.edge[1], "cycle", str(exc)))
    return out


def _row_str(row: Row) -> str:
    return "".join("1" if b else "0" for b in row)


def topological_order(net: BayesNet) -> list[str]:
    """Kahn's algorithm; among ready nodes the smallest name goes first."""
    indeg = {n.name: len(set(n.parents)) for n in net.nodes}
    children: dict[str, list[str]] = {n.name: [] for n in net.nodes}
    for p, c in set(net.edges):
        children[p].append(c)
    ready = [name for name, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        name = heapq.heappop(ready)
        order.append(name)
        for c in children[name]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    if len(order) < len(indeg):
        raise CycleError(_back_edge(net, set(indeg) - set(order)))
    return order


def _back_edge(net: BayesNet, remaining: set[str]) -> tuple[str, str]:
    # every remaining node has a remaining parent, so walking parents must revisit
    start = min(remaining)
    path = [start]
    pos = {start: 0}
    while True:
        cur = path[-1]
        nxt = min(p for p in net.parents(cur) if p in remaining)
        if nxt in pos:
            return (nxt, cur)
        pos[nxt] = len(path)
        path.append(nxt)


def canonical(net: BayesNet) -> BayesNet:
    """Nodes in topological order, each parent list sorted by topological index."""
    idx = net.index()
    nodes = []
    for name in topological_order(net):
        n = net[name]
        perm = sorted(range(len(n.parents)), key=lambda j: idx[n.parents[j]])
        parents = tuple(n.parents[j] for j in perm)
        cpt = {tuple(row[j] for j in perm): k for row, k in n.cpt.items()}
        nodes.append(Node(name, parents, cpt))
    return BayesNet(tuple(nodes))


def is_moral(net: BayesNet) -> bool:
    edges = {frozenset(e) for e in net.edges}
    return all(
        frozenset(pair) in edges for n in net.nodes for pair in itertools.combinations(n.parents, 2)
    )


def moralize(net: BayesNet) -> BayesNet:
    """Marry every pair of co-parents until the graph is moral.

    Added edges run from the lower to the higher topological index, which keeps
    the existing order valid. CPTs of nodes that gain a parent ignore it.
    """
    net = canonical(net)
    while True:
        idx = net.index()
        edges = {frozenset(e) for e in net.edges}
        added: dict[str, set[str]] = {}
        for n in net.nodes:
            for u, v in itertools.combinations(n.parents, 2):
                if frozenset((u, v)) not in edges:
                    lo, hi = sorted((u, v), key=idx.__getitem__)
                    added.setdefault(hi, set()).add(lo)
        if not added:
            return net
        nodes = []
        for n in net.nodes:
            extra = sorted(added.get(n.name, ()), key=idx.__getitem__)
            nodes.append(_add_parents(n, extra, idx) if extra else n)
        net = BayesNet(tuple(nodes))


def _add_parents(n: Node, extra: list[str], idx: Mapping[str, int]) -> Node:
    parents = sorted(n.parents + tuple(extra), key=idx.__getitem__)
    old_pos = [parents.index(p) for p in n.parents]
    cpt = {}
    for row in itertools.product((True, False), repeat=len(parents)):
        cpt[row] = n.cpt[tuple(row[j] for j in old_pos)]
    return Node(n.name, tuple(parents), cpt)


# JSON format -----------------------------------------------------------------

_NODE_FIELDS = {"name", "parents", "cpt"}


def parse_network(data: str | Mapping) -> BayesNet:
    """Build a network from JSON text or an already-decoded object.

    Raises :class:`NetworkFormatError` naming the offending field; structural
    problems (cycles, bad row counts) also raise, listing every violation.
    """
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise NetworkFormatError("<root>", f"invalid JSON: {exc}") from None
    if not isinstance(data, Mapping):
        raise NetworkFormatError("<root>", "expected an object")
    unknown = set(data) - {"nodes"}
    if unknown:
        raise NetworkFormatError(sorted(unknown)[0], "unknown field")
    raw_nodes = data.get("nodes")
    if not isinstance(raw_nodes, list):
        raise NetworkFormatError("nodes", "expected a list")
    nodes = []
    for i, raw in enumerate(raw_nodes):
        where = f"nodes[{i}]"
        if not isinstance(raw, Mapping):
            raise NetworkFormatError(where, "expected an object")
        unknown = set(raw) - _NODE_FIELDS
        if unknown:
            raise NetworkFormatError(f"{where}.{sorted(unknown)[0]}", "unknown field")
        name = raw.get("name")
        if not isinstance(name, str) or not name:
            raise NetworkFormatError(f"{where}.name", "expected a non-empty string")
        parents = raw.get("parents", [])
        if not isinstance(parents, list) or not all(isinstance(p, str) for p in parents):
            raise NetworkFormatError(f"{where}.parents", "expected a list of names")
        cpt = raw.get("cpt")
        if not isinstance(cpt, Mapping):
            raise NetworkFormatError(f"{where}.cpt", "expected an object")
        table = {}
        for key, k in cpt.items():
            if not isinstance(key, str) or len(key) != len(parents) or set(key) - {"0", "1"}:
                raise NetworkFormatError(
                    f"{where}.cpt.{key!r}", f"key must be a {len(parents)}-character binary string"
                )
            if isinstance(k, bool) or not isinstance(k, (int, float)):
                raise NetworkFormatError(f"{where}.cpt.{key!r}", "probability must be a number")
            table[_row_key(key)] = float(k)
        nodes.append(Node(name, tuple(parents), table))
    net = BayesNet(tuple(nodes))
    problems = validate(net)
    if problems:
        first = problems[0]
        raise NetworkFormatError(
            f"node {first.node!r}", "; ".join(f"{v.rule}: {v.message}" for v in problems)
        )
    return net


def load_network(path: str | Path) -> BayesNet:
    return parse_network(Path(path).read_text())


def network_to_dict(net: BayesNet) -> dict:
    return {
        "nodes": [
            {
                "name": n.name,
                "parents": list(n.parents),
                "cpt": {_row_str(row): k for row, k in sorted(n.cpt.items(), reverse=True)},
            }
            for n in net.nodes
        ]
    }


def dump_network(net: BayesNet) -> str:
    return json.dumps(network_to_dict(net), indent=2)
