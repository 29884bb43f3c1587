import os
import sys

import numpy as np
import pytest

from sogppa.builder import DesignBuilder
from sogppa.pipeline import build_sog
from sogppa.sog import INPUT, NOT, OUTPUT, REG, SogGraph
from sogppa.tech import load_tech, tech_from_dict

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, "tools"))


@pytest.fixture(scope="session")
def tech():
    return load_tech()


@pytest.fixture
def not_tech():
    """NOT delay 1.0 + 0.5 * fanout, zero clock-to-Q."""
    return tech_from_dict({"cells": {"NOT": {"a": 1.0, "b": 0.5}, "REG": {"a": 0.0, "b": 0.0}}})


def adder_netlist(width=4):
    b = DesignBuilder("adder")
    m = b.module("adder")
    m.output("y", m.add(m.input("a", width), m.input("b", width)))
    return b.build()


@pytest.fixture
def adder():
    n = adder_netlist()
    return n, build_sog(n)


def reg_not_not_reg():
    """REG -> NOT -> NOT -> REG (the second register closes the loop on itself)."""
    g = SogGraph()
    r0 = g.add_node(REG, (0,), name="r0[0]")
    n1 = g.add_node(NOT, (r0,))
    n2 = g.add_node(NOT, (n1,))
    r1 = g.add_node(REG, (n2,), name="r1[0]")
    g.fanins[r0] = (r1,)
    g._invalidate()
    return g, (r0, n1, n2, r1)


def hier_design():
    """Top with two ``alu`` instances and one ``dec`` instance."""
    b = DesignBuilder("top")
    alu = b.module("alu")
    x, y = alu.input("x", 2), alu.input("y", 2)
    alu.output("s", alu.xor(x, y))
    dec = b.module("dec")
    dec.output("z", dec.not_(dec.input("a", 2)))
    top = b.module("top")
    a, c = top.input("a", 2), top.input("c", 2)
    s1 = top.instance(alu, {"x": a, "y": c}, name="alu1")["s"]
    s2 = top.instance(alu, {"x": s1, "y": a}, name="alu2")["s"]
    z = top.instance(dec, {"a": s2}, name="dec1")["z"]
    top.output("o", top.and_(z, a))
    return b


def rng(seed=0):
    return np.random.default_rng(seed)


@pytest.fixture(scope="session")
def corpus(tech):
    """Analyses and labels of the shipped design set."""
    from sogppa.cli import DEFAULT_DESIGNS, DEFAULT_LABELS, _analyze_dir
    from sogppa.labels import load_labels
    from sogppa.pipeline import StageTimer

    labels = load_labels(DEFAULT_LABELS)
    return _analyze_dir(DEFAULT_DESIGNS, sorted(labels), None, 1, StageTimer()), labels


@pytest.fixture(scope="session")
def bundle(corpus, tech):
    from sogppa.pipeline import train_all

    analyses, labels = corpus
    return train_all(analyses, labels, tech, seed=0)


ACCEPTANCE_LINES: list[str] = []


def criterion(cid: int, ok: bool, detail: str, soft: bool = False) -> bool:
    """Record one pass/fail line for the acceptance summary."""
    tag = ("SOFT-" if soft else "") + ("PASS" if ok else "FAIL")
    line = f"{tag} criterion {cid}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
