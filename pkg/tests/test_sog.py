import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sogppa.builder import DesignBuilder
from sogppa.equiv import check_equivalence
from sogppa.netlist import flatten_with_provenance
from sogppa.pipeline import build_sog
from sogppa.sog import (AND2, CONST1, INPUT, NOT, OR2, OUTPUT, REG, XOR2, CycleError, SogGraph, load_sog,
                        lower_to_sog, save_sog, simulate_sog, sog_feature_vector, topo_order)

from conftest import adder_netlist, hier_design


def _single(kind, width, **kw):
    b = DesignBuilder("t")
    m = b.module("t")
    a = m.input("a", width)
    if kind == "not":
        y = m.not_(a)
    else:
        y = getattr(m, kind + "_")(a, m.input("b", width))
    m.output("y", y)
    return build_sog(b.build())


def test_one_bit_not():
    assert sog_feature_vector(_single("not", 1)).tolist() == [0, 0, 0, 1, 0, 0]


def test_two_bit_and():
    assert sog_feature_vector(_single("and", 2)).tolist() == [2, 0, 0, 0, 0, 0]


def test_adder_counts(adder):
    _, g = adder
    assert sog_feature_vector(g).tolist() == [7, 3, 7, 0, 0, 0]


def test_empty_graph_features():
    assert sog_feature_vector(SogGraph()).tolist() == [0] * 6


def test_adding_regs_changes_only_reg_entry(adder):
    _, g = adder
    before = sog_feature_vector(g)
    for _ in range(4):
        g.add_node(REG, (0,))
    after = sog_feature_vector(g)
    assert after[5] == before[5] + 4
    assert (after[:5] == before[:5]).all()


def test_chain_order():
    g = SogGraph()
    i = g.add_node(INPUT)
    n = g.add_node(NOT, (i,))
    o = g.add_node(OUTPUT, (n,))
    assert topo_order(g) == [i, n, o]


def test_self_loop_cycle():
    g = SogGraph()
    g.add_node(NOT, (0,))
    with pytest.raises(CycleError) as e:
        topo_order(g)
    assert "0" in str(e.value)


def test_diamond_partial_order():
    g = SogGraph()
    a = g.add_node(INPUT)
    b = g.add_node(NOT, (a,))
    c = g.add_node(NOT, (a,))
    d = g.add_node(AND2, (b, c))
    pos = {v: i for i, v in enumerate(topo_order(g))}
    assert pos[a] < pos[b] < pos[d] and pos[a] < pos[c] < pos[d]


def test_register_breaks_cycle():
    g = SogGraph()
    r = g.add_node(REG, (1,))
    g.add_node(NOT, (r,))
    assert len(topo_order(g)) == 2


def test_const_output_every_cycle():
    g = SogGraph()
    c = g.add_node(CONST1)
    g.add_node(OUTPUT, (c,))
    assert simulate_sog(g, [[]] * 3).outputs[:, 0].tolist() == [True] * 3


def test_register_delays_one_cycle():
    g = SogGraph()
    i = g.add_node(INPUT)
    r = g.add_node(REG, (i,))
    g.add_node(OUTPUT, (r,))
    assert simulate_sog(g, [[1], [0]], reg_init=[0]).outputs[:, 0].tolist() == [False, True]


def test_adder_three_plus_five(adder):
    _, g = adder
    bits = [1, 1, 0, 0] + [1, 0, 1, 0]
    out = simulate_sog(g, [bits]).outputs[0]
    assert sum(int(b) << i for i, b in enumerate(out)) == 8


def test_adder_equivalent_exhaustive(adder):
    n, g = adder
    flat, _ = flatten_with_provenance(n)
    r = check_equivalence(flat, g, "exhaustive")
    assert r.equivalent and r.vectors == 256


def test_not_equivalent_two_vectors():
    b = DesignBuilder("t")
    m = b.module("t")
    m.output("y", m.not_(m.input("a", 1)))
    flat, _ = flatten_with_provenance(b.build())
    r = check_equivalence(flat, build_sog(b.build()), "exhaustive")
    assert r.equivalent and r.vectors == 2


def test_corrupted_sog_detected(adder):
    n, g = adder
    flat, _ = flatten_with_provenance(n)
    v = g.kinds.index(AND2)
    g.kinds[v] = OR2
    g._invalidate()
    r = check_equivalence(flat, g, "exhaustive")
    assert not r.equivalent
    assert r.counterexample["mismatches"]


def test_tags_follow_level1_instances():
    g = build_sog(hier_design().build())
    tags = {g.tag_of(v) for v in range(len(g))}
    assert {"alu1", "alu2", "dec1"} <= tags
    assert g.tag_modules == {"alu1": "alu", "alu2": "alu", "dec1": "dec"}


def test_reg_count_equals_register_widths():
    b = DesignBuilder("t")
    m = b.module("t")
    a = m.input("a", 5)
    q = m.reg(m.reg(a))
    m.output("y", m.reg(m.slice(q, 0, 3)))
    g = build_sog(b.build())
    assert len(g.regs) == 5 + 5 + 3


def test_save_load_round_trip(tmp_path, adder):
    _, g = adder
    p = tmp_path / "a.sog"
    save_sog(g, p)
    h = load_sog(p)
    assert h.kinds == g.kinds and h.fanins == g.fanins and h.names == g.names


@settings(max_examples=40, deadline=None)
@given(a=st.integers(0, 255), b=st.integers(0, 255))
def test_adder_matches_integer_sum(a, b):
    g = build_sog(adder_netlist(8))
    bits = [(a >> i) & 1 for i in range(8)] + [(b >> i) & 1 for i in range(8)]
    out = simulate_sog(g, [bits]).outputs[0]
    assert sum(int(x) << i for i, x in enumerate(out)) == (a + b) & 0xFF


@settings(max_examples=30, deadline=None)
@given(w=st.integers(1, 6), seed=st.integers(0, 10_000))
def test_xor_of_words_is_bitwise(w, seed):
    b = DesignBuilder("t")
    m = b.module("t")
    m.output("y", m.xor(m.input("a", w), m.input("b", w)))
    g = build_sog(b.build())
    assert sog_feature_vector(g).tolist() == [0, 0, w, 0, 0, 0]
    x = np.random.default_rng(seed).integers(0, 2, 2 * w)
    out = simulate_sog(g, [x.tolist()]).outputs[0]
    assert out.tolist() == (x[:w] ^ x[w:]).astype(bool).tolist()
