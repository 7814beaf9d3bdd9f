import json

import numpy as np
import pytest

from marketbayes.compiler import (
    CompileError,
    compile_network,
    consumers_for_node,
    dump_economy,
    economy_from_dict,
    goods_for_node,
    producers_for_node,
    w_set,
)
from marketbayes.config import SolverConfig
from marketbayes.economy import aggregate_excess_demand, producer_unit_profit
from marketbayes.generate import random_moral_network
from marketbayes.logic import TRUE, Proposition, is_partition, mutually_exclusive
from marketbayes.network import BayesNet, moralize, node
from marketbayes.oracle import marginals

P = Proposition.parse


def labels(props, net):
    return [p.label(net.index()) for p in props]


# goods -----------------------------------------------------------------------


def test_goods_root(golden):
    assert set(goods_for_node(golden, "a1", [TRUE])) == {P("a1"), P("!a1")}


def test_goods_a3_only_triples_are_new(golden, golden_econ):
    earlier = [g.prop for g in golden_econ.goods[:7]]
    new = goods_for_node(golden, "a3", earlier)
    assert len(new) == 8
    assert all(len(p.literals) == 3 for p in new)
    assert new[0] == P("a1 & a2 & a3") and new[-1] == P("!a1 & !a2 & !a3")


def test_goods_a4_adds_parent_goods(golden, golden_econ):
    earlier = [g.prop for g in golden_econ.goods[:15]]
    new = goods_for_node(golden, "a4", earlier)
    assert new == [P("a3 & a4"), P("a3 & !a4"), P("!a3 & a4"), P("!a3 & !a4"), P("a3"), P("!a3")]


def test_golden_goods_order(golden_econ):
    got = [golden_econ.label(g.id) for g in golden_econ.goods]
    assert got[:7] == ["T", "a1", "!a1", "a1 & a2", "a1 & !a2", "!a1 & a2", "!a1 & !a2"]
    assert got[-6:] == ["a3 & a4", "a3 & !a4", "!a3 & a4", "!a3 & !a4", "a3", "!a3"]
    assert len(set(got)) == 21
    assert golden_econ.goods[0].is_numeraire and golden_econ.goods[0].prop == TRUE


# consumers -------------------------------------------------------------------


def _goods_map(econ):
    return {g.prop: g.id for g in econ.goods}


def test_consumers_root(golden, golden_econ):
    cs, prov, warns = consumers_for_node(golden, "a1", _goods_map(golden_econ), SolverConfig())
    assert [(golden_econ.label(c.good_hi), golden_econ.label(c.good_lo), c.alpha) for c in cs] == [
        ("a1", "T", 0.4),
        ("!a1", "T", 0.6),
    ]
    assert [p["form"] for p in prov] == ["direct", "complement"]
    assert warns == []


def test_consumers_a3_alphas(golden, golden_econ):
    cs, _, _ = consumers_for_node(golden, "a3", _goods_map(golden_econ), SolverConfig())
    assert len(cs) == 8
    assert sorted(c.alpha for c in cs) == pytest.approx(sorted([0.11, 0.22, 0.33, 0.44, 0.89, 0.78, 0.67, 0.56]))
    for c in cs:
        hi, lo = golden_econ.goods[c.good_hi].prop, golden_econ.goods[c.good_lo].prop
        assert lo.literals < hi.literals and hi.nodes - lo.nodes == {"a3"}


def test_clamping_warning(caplog):
    net = BayesNet((node("a", (), 1.0),))
    econ = compile_network(net)
    alphas = sorted(c.alpha for c in econ.consumers)
    assert alphas == pytest.approx([1e-6, 1 - 1e-6], abs=1e-15)
    assert alphas[1] == 1 - 1e-6
    assert any("clamped" in n for n in econ.notices)
    assert any("clamped" in r.getMessage() for r in caplog.records)


# W sets and producers ---------------------------------------------------------


def test_w_sets_golden(golden):
    assert w_set(golden, "a4") == {"a1", "a2"}
    assert w_set(golden, "a3") == set()
    assert w_set(golden, "a2") == set()
    assert w_set(golden, "a1") == set()


def test_w_set_complete_graph():
    net = BayesNet(
        (
            node("a", (), 0.5),
            node("b", ("a",), [0.5, 0.5]),
            node("c", ("a", "b"), [0.5] * 4),
            node("d", ("a", "b", "c"), [0.5] * 8),
        )
    )
    assert all(w_set(net, n) == set() for n in net.names)
    assert compile_network(net).producers == []


def test_producers_golden(golden_econ):
    econ = golden_econ
    assert len(econ.producers) == 2
    got = {
        econ.label(p.lhs): sorted(econ.label(g) for g in p.rhs) for p in econ.producers
    }
    assert got == {
        "a3": sorted(["a1 & a2 & a3", "!a1 & a2 & a3", "a1 & !a2 & a3", "!a1 & !a2 & a3"]),
        "!a3": sorted(["a1 & a2 & !a3", "!a1 & a2 & !a3", "a1 & !a2 & !a3", "!a1 & !a2 & !a3"]),
    }
    assert [p["node"] for p in econ.producer_provenance] == ["a4", "a4"]


def test_producers_none_before_a4(golden, golden_econ):
    for name in ("a1", "a2", "a3"):
        assert producers_for_node(golden, name, _goods_map(golden_econ), SolverConfig()) == ([], [])


def test_chain_producers_follow_w_set():
    # W(c) = parents(b) - parents(c) = {a}: <b> must be tied to <a b> + <!a b>
    net = BayesNet((node("a", (), 0.3), node("b", ("a",), [0.6, 0.2]), node("c", ("b",), [0.7, 0.1])))
    econ = compile_network(net)
    assert w_set(net, "b") == set() and w_set(net, "c") == {"a"}
    got = {econ.label(p.lhs): sorted(econ.label(g) for g in p.rhs) for p in econ.producers}
    assert got == {"b": ["!a & b", "a & b"], "!b": ["!a & !b", "a & !b"]}
    assert econ.notices == []


def test_two_level_chain_has_no_producers():
    net = BayesNet((node("a", (), 0.3), node("b", ("a",), [0.6, 0.2]), node("c", ("a",), [0.7, 0.1])))
    assert compile_network(net).producers == []


def test_missing_good_names_identity():
    # non-moral input fed straight to the per-node builder
    net = BayesNet(
        (node("a", (), 0.5), node("b", ("a",), [0.5, 0.5]), node("c", ("b",), [0.5, 0.5]), node("d", ("c",), [0.5, 0.5]))
    )
    goods = {TRUE: 0, P("c"): 1, P("!c"): 2}
    with pytest.raises(CompileError, match="identity for node d"):
        producers_for_node(net, "d", goods, SolverConfig())


# compile ---------------------------------------------------------------------


def test_counts_golden(golden_econ):
    assert (golden_econ.n_goods, len(golden_econ.consumers), len(golden_econ.producers)) == (21, 18, 2)


def test_counts_single_root(single_root):
    econ = compile_network(single_root)
    assert (econ.n_goods, len(econ.consumers), len(econ.producers)) == (3, 2, 0)


def test_caps():
    net = random_moral_network(0, 5, 2)
    with pytest.raises(CompileError, match="max_nodes"):
        compile_network(net, SolverConfig(max_nodes=4))
    deep = BayesNet((node("a", (), 0.5), node("b", ("a",), [0.5, 0.5]), node("c", ("a", "b"), [0.5] * 4)))
    with pytest.raises(CompileError, match="max_parents"):
        compile_network(deep, SolverConfig(max_parents=1))


def test_invalid_network_rejected():
    with pytest.raises(CompileError, match="cpt"):
        compile_network(BayesNet((node("a", (), 1.5),)))


def test_diamond_moralized(diamond):
    econ = compile_network(diamond)
    assert econ.notices == ["moralized: added b->c"]
    assert econ.network.parents("c") == ("a", "b")


def test_auto_moralize_off(diamond):
    with pytest.raises(CompileError, match="not moral"):
        compile_network(diamond, SolverConfig(auto_moralize=False))


def test_diamond_fixed_point_is_original_oracle(diamond):
    econ = compile_network(diamond)
    truth = np.array(marginals(diamond, [g.prop for g in econ.goods]))
    for g in range(econ.n_goods):
        assert abs(aggregate_excess_demand(econ, g, truth)) <= 1e-9


@pytest.mark.parametrize("seed", range(30))
def test_invariants_random(seed):
    rng = np.random.default_rng(seed)
    net = random_moral_network(rng, int(rng.integers(1, 7)), 2)
    econ = compile_network(net)
    qs = [len(n.parents) for n in econ.network.nodes]
    assert econ.n_goods <= 1 + sum(2 ** (q + 1) + 2**q for q in qs)
    assert len(econ.consumers) == sum(2 * 2**q for q in qs)
    ws = [w_set(econ.network, n) for n in econ.network.names]
    assert len(econ.producers) == sum(2**q for q, w in zip(qs, ws) if w)
    for p in econ.producers:
        parts = [econ.goods[g].prop for g in p.rhs]
        assert all(mutually_exclusive(x, y) for i, x in enumerate(parts) for y in parts[i + 1:])
        assert is_partition(econ.goods[p.lhs].prop, parts)
    # provenance: each CPT row maps to exactly one direct and one complement consumer
    seen = {}
    for prov in econ.consumer_provenance:
        seen.setdefault((prov["node"], prov["row"]), []).append(prov["form"])
    assert len(seen) == sum(2**q for q in qs)
    assert all(sorted(v) == ["complement", "direct"] for v in seen.values())
    assert len(econ.producer_provenance) == len(econ.producers)
    # fixed point at oracle prices
    truth = np.array(marginals(econ.network, [g.prop for g in econ.goods]))
    for g in range(econ.n_goods):
        assert abs(aggregate_excess_demand(econ, g, truth)) <= 1e-9
    for p in econ.producers:
        assert abs(producer_unit_profit(p, truth)) <= 1e-12


def test_dump_roundtrip(golden_econ):
    text = dump_economy(golden_econ)
    data = json.loads(text)
    assert [g["id"] for g in data["goods"]] == list(range(21))
    assert data["goods"][3]["literals"] == [["a1", True], ["a2", True]]
    back = economy_from_dict(data)
    assert [g.prop for g in back.goods] == [g.prop for g in golden_econ.goods]
    assert back.consumers == golden_econ.consumers
    assert back.producers == golden_econ.producers
    assert back.consumer_provenance == golden_econ.consumer_provenance
    assert dump_economy(back) == text


def test_dump_malformed():
    with pytest.raises(CompileError):
        economy_from_dict({"goods": []})


def test_moralized_compile_matches_explicit_moralize(diamond):
    a = compile_network(diamond)
    b = compile_network(moralize(diamond))
    assert [g.prop for g in a.goods] == [g.prop for g in b.goods]
    assert a.consumers == b.consumers
