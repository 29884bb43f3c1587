import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sogppa.activity import (ActivityError, ActivityMap, default_activity, empty_seed, measure_toggle_mc,
                             propagate_activity)
from sogppa.sog import AND2, CONST1, INPUT, MUX2, NOT, OR2, OUTPUT, REG, XOR2, SogGraph
from sogppa.tech import tech_from_dict


def _seeded(g, pairs):
    act = empty_seed(g)
    for v, (p, d) in pairs.items():
        act.P[v], act.D[v] = p, d
    return act


def _two_inputs(kind):
    g = SogGraph()
    a, b = g.add_node(INPUT), g.add_node(INPUT)
    y = g.add_node(kind, (a, b))
    return g, a, b, y


def test_defaults_seed_sources(tech):
    g = SogGraph()
    i, r = g.add_node(INPUT), g.add_node(REG, (0,))
    act = default_activity(g, tech)
    assert (act.P[i], act.D[i]) == (0.5, 0.2) and (act.P[r], act.D[r]) == (0.5, 0.2)


def test_const_seed():
    g = SogGraph()
    c = g.add_node(CONST1)
    act = empty_seed(g)
    assert (act.P[c], act.D[c]) == (1.0, 0.0)


def test_config_override():
    t = tech_from_dict({"default_p": 0.5, "default_tr": 0.1})
    g = SogGraph()
    g.add_node(INPUT)
    assert default_activity(g, t).D[0] == 0.1


def test_not_rule():
    g = SogGraph()
    a = g.add_node(INPUT)
    n = g.add_node(NOT, (a,))
    out = propagate_activity(g, _seeded(g, {a: (0.3, 0.4)}))
    assert out.P[n] == pytest.approx(0.7) and out.D[n] == pytest.approx(0.4)


def test_and_rule():
    g, a, b, y = _two_inputs(AND2)
    out = propagate_activity(g, _seeded(g, {a: (0.5, 0.2), b: (0.5, 0.2)}))
    assert out.P[y] == pytest.approx(0.25) and out.D[y] == pytest.approx(0.2)


def test_xor_rule():
    g, a, b, y = _two_inputs(XOR2)
    out = propagate_activity(g, _seeded(g, {a: (0.5, 0.2), b: (0.5, 0.3)}))
    assert out.D[y] == pytest.approx(0.5)


def test_missing_seed_rejected():
    g, a, b, y = _two_inputs(OR2)
    with pytest.raises(ActivityError):
        propagate_activity(g, _seeded(g, {a: (0.5, 0.2)}))


def test_mc_const_exactly_zero():
    g = SogGraph()
    a = g.add_node(INPUT)
    c = g.add_node(CONST1)
    y = g.add_node(AND2, (a, c))
    mc = measure_toggle_mc(g, _seeded(g, {a: (0.5, 0.2)}), samples=20_000)
    assert mc.D[c] == 0.0 and mc.P[c] == 1.0
    assert mc.D[y] > 0


def test_mc_and_matches():
    g, a, b, y = _two_inputs(AND2)
    mc = measure_toggle_mc(g, _seeded(g, {a: (0.5, 0.2), b: (0.5, 0.2)}), samples=1_000_000)
    assert abs(mc.D[y] - 0.2) < 0.01


def test_xor_self_reconvergence():
    g = SogGraph()
    a = g.add_node(INPUT)
    y = g.add_node(XOR2, (a, a))
    seed = _seeded(g, {a: (0.5, 0.2)})
    assert propagate_activity(g, seed).D[y] == pytest.approx(0.4)
    assert measure_toggle_mc(g, seed, samples=100_000).D[y] == 0.0


def test_mc_rejects_unrealizable_seed():
    g = SogGraph()
    a = g.add_node(INPUT)
    with pytest.raises(ActivityError):
        measure_toggle_mc(g, _seeded(g, {a: (0.1, 0.5)}), samples=10_000)


@settings(max_examples=30, deadline=None)
@given(p=st.floats(0.05, 0.95), frac=st.floats(0.0, 1.0), s=st.floats(0, 1), q=st.floats(0, 1))
def test_mux_rule_bounds(p, frac, s, q):
    g = SogGraph()
    sel, a, b = g.add_node(INPUT), g.add_node(INPUT), g.add_node(INPUT)
    y = g.add_node(MUX2, (sel, a, b))
    d = 2 * min(p, 1 - p) * frac
    out = propagate_activity(g, _seeded(g, {sel: (s, d), a: (p, d), b: (q, 0.0)}))
    assert out.P[y] == pytest.approx(s * p + (1 - s) * q)
    assert 0.0 <= out.P[y] <= 1.0 and out.D[y] >= 0.0


@settings(max_examples=30, deadline=None)
@given(p1=st.floats(0, 1), p2=st.floats(0, 1), d1=st.floats(0, 2), d2=st.floats(0, 2))
def test_not_and_or_duality(p1, p2, d1, d2):
    # OR(a, b) == NOT(AND(NOT a, NOT b)) under the independence rules
    g = SogGraph()
    a, b = g.add_node(INPUT), g.add_node(INPUT)
    o = g.add_node(OR2, (a, b))
    na, nb = g.add_node(NOT, (a,)), g.add_node(NOT, (b,))
    n = g.add_node(NOT, (g.add_node(AND2, (na, nb)),))
    out = propagate_activity(g, _seeded(g, {a: (p1, d1), b: (p2, d2)}))
    assert out.P[o] == pytest.approx(out.P[n], abs=1e-12)
    assert out.D[o] == pytest.approx(out.D[n], abs=1e-12)
