import json

import pytest

from sogppa.builder import DesignBuilder
from sogppa.netlist import (HISTOGRAM_KINDS, NetlistError, emit_netlist, flatten_with_provenance, parse_netlist,
                            word_op_histogram)

from conftest import adder_netlist, hier_design


def _hist(n):
    return dict(zip(HISTOGRAM_KINDS, word_op_histogram(n)))


def test_minimal_not_module():
    text = json.dumps({"top": "t", "modules": {"t": {
        "ports": {"a": {"dir": "input", "width": 1, "bits": [2]}, "y": {"dir": "output", "width": 1, "bits": [3]}},
        "cells": {"n0": {"kind": "not", "params": {"width": 1}, "conns": {"A": [2], "Y": [3]}}}}}})
    n = parse_netlist(text)
    assert len(n.modules) == 1
    assert len(n.top_module.cells) == 1


def test_undeclared_net_is_named():
    text = json.dumps({"top": "t", "modules": {"t": {
        "ports": {"y": {"dir": "output", "width": 1, "bits": [3]}},
        "cells": {"n0": {"kind": "not", "params": {"width": 1}, "conns": {"A": ["x"], "Y": [3]}}}}}})
    with pytest.raises(NetlistError, match="'x'"):
        parse_netlist(text)


def test_undriven_and_double_driven():
    b = DesignBuilder("t")
    m = b.module("t")
    a = m.input("a", 1)
    m.output("y", m.not_(a))
    d = b.to_dict()
    d["modules"]["t"]["cells"]["not0"]["conns"]["A"] = [99]
    with pytest.raises(NetlistError, match="undriven"):
        parse_netlist(json.dumps(d))
    d = b.to_dict()
    d["modules"]["t"]["cells"]["not0"]["conns"]["Y"] = a
    with pytest.raises(NetlistError, match="driven by both"):
        parse_netlist(json.dumps(d))


def test_width_mismatch_rejected():
    b = DesignBuilder("t")
    m = b.module("t")
    m.output("y", m.add(m.input("a", 4), m.input("b", 4)))
    d = b.to_dict()
    d["modules"]["t"]["cells"]["add0"]["params"]["width"] = 3
    with pytest.raises(NetlistError, match="width"):
        parse_netlist(json.dumps(d))


def test_adder_fixture_round_trip():
    n = adder_netlist()
    cells = list(n.top_module.cells.values())
    assert [c.kind for c in cells] == ["add"] and cells[0].width == 4
    again = parse_netlist(emit_netlist(n))
    assert emit_netlist(again) == emit_netlist(n)


def test_histogram_counts():
    b = DesignBuilder("t")
    m = b.module("t")
    a, c, s = m.input("a", 2), m.input("c", 2), m.input("s", 1)
    x = m.add(a, c)
    m.output("y", m.mux(s, m.mux(s, x, a), c))
    h = _hist(b.build())
    assert h["add"] == 1 and h["mux"] == 2
    assert sum(h.values()) == 3


def test_empty_module_histogram():
    b = DesignBuilder("t")
    b.module("t")
    assert word_op_histogram(b.build()) == [0] * len(HISTOGRAM_KINDS)


def test_histogram_counts_instances():
    b = DesignBuilder("top")
    sub = b.module("adder")
    sub.output("y", sub.add(sub.input("a", 4), sub.input("b", 4)))
    top = b.module("top")
    a, c = top.input("a", 4), top.input("b", 4)
    for i in range(3):
        a = top.instance(sub, {"a": a, "b": c}, name=f"u{i}")["y"]
    top.output("y", a)
    assert _hist(b.build())["add"] == 3


def test_recursive_hierarchy_rejected():
    d = {"top": "a", "modules": {"a": {"instances": {"u": {"module": "a", "conns": {}}}}}}
    with pytest.raises(NetlistError, match="recursive"):
        parse_netlist(json.dumps(d))


def test_flat_design_single_tag():
    flat, prov = flatten_with_provenance(adder_netlist())
    assert set(prov.tags.values()) == {"top"}
    assert prov.multiplicity == {"top": 1}


def test_level1_provenance():
    flat, prov = flatten_with_provenance(hier_design().build())
    assert prov.instance_modules == {"alu1": "alu", "alu2": "alu", "dec1": "dec"}
    assert prov.multiplicity["alu"] == 2 and prov.multiplicity["dec"] == 1
    assert set(prov.tags.values()) == {"alu1", "alu2", "dec1", "top"}
    assert flat.is_flat


def test_nested_cells_tagged_with_level1_instance():
    b = DesignBuilder("top")
    rf = b.module("regfile")
    rf.output("q", rf.reg(rf.input("d", 2)))
    alu = b.module("alu")
    x = alu.input("x", 2)
    alu.output("s", alu.instance(rf, {"d": alu.not_(x)}, name="rf")["q"])
    top = b.module("top")
    top.output("o", top.instance(alu, {"x": top.input("a", 2)}, name="alu0")["s"])
    flat, prov = flatten_with_provenance(b.build())
    nested = [c for c in prov.tags if c.startswith("alu0.rf.")]
    assert nested and all(prov.tags[c] == "alu0" for c in nested)
