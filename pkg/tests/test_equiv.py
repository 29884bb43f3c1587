import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sogppa.builder import DesignBuilder
from sogppa.equiv import EquivalenceCapError, check_equivalence, eval_cell
from sogppa.netlist import flatten_with_provenance
from sogppa.pipeline import build_sog

from conftest import adder_netlist
from oracles import int_semantics

BINARY = ["add", "sub", "and", "or", "xor", "eq", "lt", "ge", "mul"]


def _words(vals):
    return np.asarray(vals, dtype=np.uint64)


@pytest.mark.parametrize("kind,signed", [(k, False) for k in BINARY] + [(k, True) for k in ("mul", "lt", "ge")])
def test_cell_semantics_exhaustive_3bit(kind, signed):
    params = {"width": 3, "signed": signed}
    if kind == "mul":
        params["y_width"] = 5
    pairs = list(itertools.product(range(8), repeat=2))
    got = eval_cell(kind, params, {"A": _words([a for a, _ in pairs]), "B": _words([b for _, b in pairs])})
    assert got.tolist() == [int_semantics(kind, params, a, b) for a, b in pairs]


@pytest.mark.parametrize("kind,signed", [("shl", False), ("shr", False), ("shr", True)])
def test_shift_semantics(kind, signed):
    params = {"width": 4, "b_width": 3, "signed": signed}
    pairs = list(itertools.product(range(16), range(8)))
    got = eval_cell(kind, params, {"A": _words([a for a, _ in pairs]), "B": _words([b for _, b in pairs])})
    assert got.tolist() == [int_semantics(kind, params, a, b) for a, b in pairs]


@pytest.mark.parametrize("kind", ["not", "reduce_and", "reduce_or", "reduce_xor"])
def test_unary_semantics(kind):
    params = {"width": 4}
    got = eval_cell(kind, params, {"A": _words(range(16))})
    assert got.tolist() == [int_semantics(kind, params, a) for a in range(16)]


def test_exhaustive_cap():
    b = DesignBuilder("t")
    m = b.module("t")
    m.output("y", m.add(m.input("a", 9), m.input("b", 9)))
    flat, _ = flatten_with_provenance(b.build())
    with pytest.raises(EquivalenceCapError):
        check_equivalence(flat, build_sog(b.build()), "exhaustive")


def test_sampled_mode_seeded():
    n = adder_netlist(16)
    flat, _ = flatten_with_provenance(n)
    r = check_equivalence(flat, build_sog(n), "sampled", samples=500, seed=3)
    assert r.equivalent and r.vectors == 500


@settings(max_examples=40, deadline=None)
@given(w=st.integers(1, 8), a=st.integers(0, 255), b=st.integers(0, 255))
def test_sub_semantics(w, a, b):
    a, b = a % (1 << w), b % (1 << w)
    got = eval_cell("sub", {"width": w}, {"A": _words([a]), "B": _words([b])})
    assert int(got[0]) == (a - b) % (1 << w)
