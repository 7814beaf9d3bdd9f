"""Map a binary Bayesian network onto an economy whose equilibrium prices are its probabilities.

Per node (in topological order) the compiler adds:

* goods for every conjunction of the node with its parents, plus every
  conjunction of the parents alone when not already present;
* two consumers per CPT row: one pinning ``<child & row> = k <row>``, one
  pinning the complement ``<!child & row> = (1 - k) <row>``;
* when the highest-indexed parent has parents the node lacks (the node's
  W set), one arbitrageur per row equating ``<row>`` with its refinements
  over W.
"""

from __future__ import annotations

import itertools
import json
import logging
from collections.abc import Iterable
from pathlib import Path

from marketbayes.config import SolverConfig
from marketbayes.economy import NUMERAIRE, ArbitrageProducer, CesConsumer, Economy, Good
from marketbayes.logic import TRUE, Literal, Proposition, is_partition
from marketbayes.network import (
    BayesNet,
    NetworkError,
    canonical,
    is_moral,
    moralize,
    network_to_dict,
    parse_network,
    validate,
)

log = logging.getLogger(__name__)


class CompileError(ValueError):
    pass


def _patterns(names: tuple[str, ...]) -> list[Proposition]:
    """All conjunctions over ``names``, all-positive first, first name most significant."""
    return [
        Proposition(frozenset(Literal(n, v) for n, v in zip(names, row)))
        for row in itertools.product((True, False), repeat=len(names))
    ]


def _rows(q: int):
    return list(itertools.product((True, False), repeat=q))


def goods_for_node(net: BayesNet, name: str, existing: Iterable[Proposition] = ()) -> list[Proposition]:
    """New goods contributed by ``name``, skipping any proposition in ``existing``."""
    nd = net[name]
    seen = set(existing)
    out = []
    for prop in [*_patterns((*nd.parents, name)), *_patterns(nd.parents)]:
        if prop not in seen:
            seen.add(prop)
            out.append(prop)
    return out


def _clamp(k: float, eps: float) -> float:
    return min(max(k, eps), 1.0 - eps)


def consumers_for_node(
    net: BayesNet, name: str, goods: dict[Proposition, int], config: SolverConfig
) -> tuple[list[CesConsumer], list[dict], list[str]]:
    nd = net[name]
    consumers, provenance, warnings = [], [], []
    for row, parent_prop in zip(_rows(len(nd.parents)), _patterns(nd.parents)):
        k = nd.cpt[row]
        kc = _clamp(k, config.k_clamp)
        row_key = "".join("1" if b else "0" for b in row)
        if kc != k:
            msg = f"node {name} row '{row_key}': k={k} clamped to {kc}"
            warnings.append(msg)
            log.warning(msg)
        for positive, alpha in ((True, kc), (False, 1.0 - kc)):
            hi = parent_prop.conjoin(Proposition(frozenset({Literal(name, positive)})))
            consumers.append(
                CesConsumer(
                    good_hi=goods[hi],
                    good_lo=goods[parent_prop],
                    alpha=alpha,
                    sigma=config.sigma,
                    endowment=config.endowment,
                )
            )
            provenance.append(
                {"node": name, "row": row_key, "form": "direct" if positive else "complement", "k": k}
            )
    return consumers, provenance, warnings


def w_set(net: BayesNet, name: str) -> set[str]:
    """Parents of the node's highest-indexed parent that are not parents of the node."""
    parents = net.parents(name)
    if not parents:
        return set()
    idx = net.index()
    top = max(parents, key=idx.__getitem__)
    return set(net.parents(top)) - set(parents)


def producers_for_node(
    net: BayesNet, name: str, goods: dict[Proposition, int], config: SolverConfig
) -> tuple[list[ArbitrageProducer], list[dict]]:
    w = w_set(net, name)
    if not w:
        return [], []
    idx = net.index()
    parents = net.parents(name)
    w_names = tuple(sorted(w, key=idx.__getitem__))
    producers, provenance = [], []
    for row, lhs in zip(_rows(len(parents)), _patterns(parents)):
        rhs = [lhs.conjoin(wp) for wp in _patterns(w_names)]
        missing = [p for p in (lhs, *rhs) if p not in goods]
        if missing:
            raise CompileError(
                f"identity for node {name}: <{lhs.label(idx)}> = sum over {', '.join(w_names)} "
                f"references missing good <{missing[0].label(idx)}> (is the network moral?)"
            )
        producers.append(
            ArbitrageProducer(
                lhs=goods[lhs],
                rhs=tuple(goods[p] for p in rhs),
                activity_cap=config.y_max,
                responsiveness=config.beta,
            )
        )
        provenance.append(
            {"node": name, "row": "".join("1" if b else "0" for b in row), "w": list(w_names)}
        )
    return producers, provenance


def compile_network(net: BayesNet, config: SolverConfig | None = None) -> Economy:
    config = config or SolverConfig()
    problems = validate(net)
    if problems:
        raise CompileError("; ".join(f"{v.node}: {v.rule}: {v.message}" for v in problems))
    if len(net) > config.max_nodes:
        raise CompileError(f"{len(net)} nodes exceed max_nodes={config.max_nodes}")
    notices = []
    net = canonical(net)
    if not is_moral(net):
        if not config.auto_moralize:
            raise CompileError("network is not moral and auto_moralize is off")
        moral = moralize(net)
        added = sorted(set(moral.edges) - set(net.edges))
        notices.append(
            "moralized: added " + ", ".join(f"{a}->{b}" for a, b in added)
        )
        net = moral
    q_max = max((len(n.parents) for n in net.nodes), default=0)
    if q_max > config.max_parents:
        raise CompileError(f"a node has {q_max} parents, over max_parents={config.max_parents}")

    goods: dict[Proposition, int] = {TRUE: NUMERAIRE}
    for name in net.names:
        for prop in goods_for_node(net, name, goods):
            goods[prop] = len(goods)

    consumers, c_prov, producers, p_prov = [], [], [], []
    for name in net.names:
        cs, cp, warns = consumers_for_node(net, name, goods, config)
        consumers += cs
        c_prov += cp
        notices += warns
    for name in net.names:
        ps, pp = producers_for_node(net, name, goods, config)
        producers += ps
        p_prov += pp

    econ = Economy(
        goods=[Good(i, prop, i == NUMERAIRE) for prop, i in goods.items()],
        consumers=consumers,
        producers=producers,
        consumer_provenance=c_prov,
        producer_provenance=p_prov,
        network=net,
        notices=notices,
    )
    econ.validate()
    for pr in econ.producers:
        if not is_partition(econ.goods[pr.lhs].prop, [econ.goods[g].prop for g in pr.rhs]):
            raise CompileError(f"producer rhs does not partition <{econ.label(pr.lhs)}>")
    return econ


# dump format -------------------------------------------------------------------


def _literals(prop: Proposition, order) -> list[list]:
    return [[lit.node, lit.positive] for lit in prop.sorted_literals(order)]


def economy_to_dict(econ: Economy) -> dict:
    order = econ._node_order
    return {
        "goods": [
            {"id": g.id, "label": econ.label(g.id), "literals": _literals(g.prop, order)}
            for g in econ.goods
        ],
        "consumers": [
            {
                "good_hi": c.good_hi,
                "good_lo": c.good_lo,
                "alpha": c.alpha,
                "sigma": c.sigma,
                "endowment": c.endowment,
                "provenance": prov,
            }
            for c, prov in itertools.zip_longest(econ.consumers, econ.consumer_provenance, fillvalue={})
        ],
        "producers": [
            {
                "lhs": p.lhs,
                "rhs": list(p.rhs),
                "beta": p.responsiveness,
                "y_max": p.activity_cap,
                "provenance": prov,
            }
            for p, prov in itertools.zip_longest(econ.producers, econ.producer_provenance, fillvalue={})
        ],
        "notices": list(econ.notices),
        "network": network_to_dict(econ.network) if econ.network is not None else None,
    }


def dump_economy(econ: Economy) -> str:
    return json.dumps(economy_to_dict(econ), indent=2)


def economy_from_dict(data: dict) -> Economy:
    try:
        goods = [
            Good(
                int(g["id"]),
                Proposition(frozenset(Literal(n, bool(v)) for n, v in g["literals"])),
                int(g["id"]) == NUMERAIRE,
            )
            for g in data["goods"]
        ]
        consumers = [
            CesConsumer(c["good_hi"], c["good_lo"], c["alpha"], c["sigma"], c["endowment"])
            for c in data["consumers"]
        ]
        producers = [
            ArbitrageProducer(p["lhs"], tuple(p["rhs"]), p["y_max"], p["beta"])
            for p in data["producers"]
        ]
        net = parse_network(data["network"]) if data.get("network") else None
    except (KeyError, TypeError) as exc:
        raise CompileError(f"malformed economy dump: {exc!r}") from None
    except NetworkError as exc:
        raise CompileError(f"malformed economy dump network: {exc}") from None
    econ = Economy(
        goods,
        consumers,
        producers,
        consumer_provenance=[c.get("provenance", {}) for c in data["consumers"]],
        producer_provenance=[p.get("provenance", {}) for p in data["producers"]],
        network=net,
        notices=list(data.get("notices", [])),
    )
    econ.validate()
    return econ


def load_economy(path: str | Path) -> Economy:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise CompileError(f"invalid economy JSON: {exc}") from None
    return economy_from_dict(data)
