import numpy as np
import pytest

from sogppa.area import comb_area_features, comb_area_label, predict_area, sequential_area, train_area_model
from sogppa.evaluation import metric_mape, metric_r
from sogppa.labels import InsufficientDataError
from sogppa.pipeline import build_sog
from sogppa.sog import AND2, INPUT, NOT, REG, SogGraph
from sogppa.tech import tech_from_dict

from conftest import adder_netlist


def _regs(n, t):
    g = SogGraph()
    for _ in range(n):
        g.add_node(REG, (0,))
    return sequential_area(g, t)


def test_sequential_area():
    t = tech_from_dict({"cells": {"REG": {"area": 4.5}}})
    assert _regs(10, t) == 45.0
    assert _regs(0, t) == 0.0


def test_sequential_area_fixture(tech):
    assert _regs(128, tech) == 128 * tech.cells["REG"].area


def test_analytical_comb_sum():
    t = tech_from_dict({"cells": {"AND2": {"area": 1.0}, "NOT": {"area": 0.5}}})
    g = SogGraph()
    a = g.add_node(INPUT)
    for _ in range(3):
        g.add_node(AND2, (a, a))
    for _ in range(2):
        g.add_node(NOT, (a,))
    assert comb_area_features(g, t)[0] == 4.0


def test_empty_graph_features(tech):
    assert comb_area_features(SogGraph(), tech).tolist() == [0.0] * 7


def test_adder_comb_sum(tech):
    f = comb_area_features(build_sog(adder_netlist()), tech)
    c = tech.cells
    assert f[0] == pytest.approx(7 * c["AND2"].area + 3 * c["OR2"].area + 7 * c["XOR2"].area)


def _designs(n=40, seed=0, tech=None):
    rng = np.random.default_rng(seed)
    counts = rng.integers(0, 400, size=(n, 6)).astype(float)
    areas = np.array([1.0, 1.1, 1.6, 0.5, 1.9])
    return np.column_stack([counts[:, :5] @ areas, counts])


def test_model_recovers_sum():
    X = _designs()
    m = train_area_model(X, X[:, 0])
    assert metric_r(X[:, 0], m.predict(X[:, :6])) >= 0.999


def test_model_scaling():
    X = _designs(seed=1)
    y = 1.3 * X[:, 0]
    assert metric_mape(y, train_area_model(X, y).predict(X[:, :6])) < 5.0


def test_model_constant():
    X = _designs(seed=2)
    assert np.allclose(train_area_model(X, np.full(len(X), 7.0)).predict(X[:, :6]), 7.0)


def test_floor():
    X = _designs(5)
    with pytest.raises(InsufficientDataError):
        train_area_model(X, X[:, 0])


def test_total_is_seq_plus_comb(tech):
    X = _designs()
    m = train_area_model(X, X[:, 0])
    g = build_sog(adder_netlist())
    for _ in range(3):
        g.add_node(REG, (0,))
    r = predict_area(g, tech, m)
    assert r.total == r.sequential + r.comb
    assert r.sequential == 3 * tech.dff_area


def test_label_split(tech):
    g = SogGraph()
    g.add_node(REG, (0,))
    assert comb_area_label(10.0, None, None, g, tech) == 10.0 - tech.dff_area
    assert comb_area_label(10.0, 4.0, None, g, tech) == 6.0
    assert comb_area_label(10.0, 4.0, 5.5, g, tech) == 5.5
