import pytest

from sogppa.saif import SaifError, load_saif, parse_saif, saif_seed
from sogppa.sog import INPUT, REG, SogGraph
from sogppa.cli import DATA_DIR

import os

TEXT = """(SAIFILE (SAIFVERSION "2.0") (TIMESCALE 1 ns) (DURATION 1000)
  (INSTANCE top (NET (a\\[0\\] (T0 500) (T1 500) (TC 20)) (b (T0 1000) (T1 0) (TC 0)))))"""


def _graph():
    g = SogGraph()
    g.add_node(INPUT, name="a[0]")
    g.add_node(INPUT, name="b")
    for i in range(5):
        g.add_node(REG, (0,), name=f"r[{i}]")
    return g


def test_direct_formula(tech):
    data = parse_saif(TEXT)
    assert data.warnings == []
    act = saif_seed(data, _graph(), tech, clock=10.0)
    assert act.source == "saif"
    assert act.P[0] == pytest.approx(0.5) and act.D[0] == pytest.approx(0.2)


def test_zero_toggles(tech):
    act = saif_seed(parse_saif(TEXT), _graph(), tech, clock=10.0)
    assert act.D[1] == 0.0


def test_missing_registers_default_filled(tech):
    text = TEXT.replace("(b (T0", "(r\\[0\\] (T1 10) (TC 1)) (r\\[1\\] (T1 10) (TC 1)) "
                                 "(r\\[2\\] (T1 10) (TC 1)) (b (T0")
    act = saif_seed(parse_saif(text), _graph(), tech, clock=10.0)
    assert act.missing == ["r[3]", "r[4]"]
    assert act.D[g_idx("r[4]")] == tech.default_tr


def g_idx(name):
    return {v: k for k, v in _graph().names.items()}[name]


def test_timescale_conversion(tech):
    text = TEXT.replace("1 ns", "1 ps")
    act = saif_seed(parse_saif(text), _graph(), tech, clock=0.01)
    assert act.D[0] == pytest.approx(0.2)


def test_unknown_construct_warns():
    data = parse_saif(TEXT.replace("(DURATION 1000)", "(DURATION 1000) (FOO 1)"))
    assert any("FOO" in w for w in data.warnings)


@pytest.mark.parametrize("text", [
    "(SAIFILE (DURATION 10) (INSTANCE t (NET (a (T1 20) (TC 1)))))",
    "(SAIFILE (INSTANCE t (NET (a (T1 2) (TC 1)))))",
    "(SAIFILE (DURATION 10)",
    "(SAIFILE (DURATION 10) (INSTANCE t (NET (a (T1 x) (TC 1)))))",
    "(FOO)",
])
def test_malformed(text):
    with pytest.raises(SaifError):
        parse_saif(text)


def test_shipped_fixture_covers_design(tech):
    from sogppa.netlist import load_netlist
    from sogppa.pipeline import build_sog
    g = build_sog(load_netlist(os.path.join(DATA_DIR, "designs", "cpu_w8_r4.json")))
    data = load_saif(os.path.join(DATA_DIR, "cpu_w8_r4.saif"))
    act = saif_seed(data, g, tech)
    assert act.missing == []
    assert data.warnings == []
