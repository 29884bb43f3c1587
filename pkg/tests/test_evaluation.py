import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sogppa.evaluation import (all_metrics, emit_scatter, format_report, kfold_splits, metric_mape, metric_r,
                               metric_rrse, parse_split, plot_scatter, select, split_by_family)
from sogppa.labels import LabelError, labels_from_dict, labels_to_dict, load_labels, require
from sogppa.cli import DEFAULT_LABELS


def test_perfect_prediction():
    y = [1.0, 2.0, 4.0]
    assert metric_r(y, y) == pytest.approx(1.0, abs=1e-12)
    assert metric_mape(y, y) == 0.0 and metric_rrse(y, y) == 0.0


def test_hand_example():
    assert metric_mape([1, 2, 3], [2, 2, 2]) == pytest.approx((100 + 0 + 100 / 3) / 3, abs=1e-9)
    assert metric_rrse([1, 2, 3], [2, 2, 2]) == pytest.approx(1.0, abs=1e-9)


def test_mape_cap():
    assert metric_mape([1.0, 1.0], [5.0, 1.0]) == pytest.approx(50.0, abs=1e-9)


def test_r_undefined_on_constant():
    assert math.isnan(metric_r([1, 1, 1], [1, 2, 3]))


def test_rrse_bar_variant():
    y, p = [1.0, 2.0, 3.0], [1.0, 2.0, 3.0]
    assert metric_rrse(y, p, bar=True) == pytest.approx(1.0)


def test_metrics_need_two_points():
    with pytest.raises(ValueError):
        metric_r([1.0], [1.0])
    with pytest.raises(ValueError):
        metric_mape([0.0, 1.0], [1.0, 1.0])


def test_negative_truth_uses_magnitude():
    assert metric_mape([-2.0, -4.0], [-1.0, -4.0]) == pytest.approx(25.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3).filter(lambda v: abs(v) > 1e-3), min_size=2, max_size=30),
       st.floats(0.1, 10), st.floats(-5, 5))
def test_r_affine_invariant(y, a, b):
    y = np.asarray(y)
    p = y + np.random.default_rng(len(y)).normal(0, 1, len(y))
    r1 = metric_r(y, p)
    if not math.isnan(r1):
        assert metric_r(y, a * p + b) == pytest.approx(r1, abs=1e-6)
    assert 0.0 <= metric_mape(y, p) <= 100.0


def test_kfold_one_per_fold():
    names = [f"d{i}" for i in range(10)]
    folds = kfold_splits(names, 10, 0)
    assert all(len(te) == 1 for _, te in folds)
    assert sorted(n for _, te in folds for n in te) == sorted(names)


def test_kfold_deterministic_and_disjoint():
    names = [f"d{i}" for i in range(23)]
    a, b = kfold_splits(names, 5, 7), kfold_splits(names, 5, 7)
    assert a == b
    for tr, te in a:
        assert not set(tr) & set(te) and len(tr) + len(te) == 23


def test_family_split():
    tags = {"a": ["cpu"], "b": ["misc"], "c": ["cpu", "misc"], "d": ["dsp"]}
    tr, te = split_by_family(tags, {}, *parse_split("family:cpu"))
    assert tr == ["a", "c"] and te == ["b", "d"]


def test_size_split_median():
    tags = {n: [] for n in "abcd"}
    sizes = {"a": 10, "b": 40, "c": 20, "d": 30}
    assert select(tags, sizes, "size:large") == ["b", "d"]
    assert select(tags, sizes, "size:small") == ["a", "c"]


def test_overlapping_filters():
    tags = {"a": ["cpu"], "b": ["misc"]}
    with pytest.raises(ValueError, match="overlap"):
        split_by_family(tags, {}, "cpu", "cpu")


def test_scatter_rows(tmp_path):
    p = tmp_path / "s.csv"
    emit_scatter(["x", "y", "z"], [1, 2, 3], [1.5, 2, 2.5], p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["design", "truth", "prediction"] and len(rows) == 4


def test_empty_report_header_only():
    assert format_report([], "csv", ["task", "r"]) == "task,r\n"


def test_json_report_nan_is_null():
    assert '"r": null' in format_report([{"r": float("nan")}], "json")


def test_plot_writes_png(tmp_path):
    p = tmp_path / "s.png"
    plot_scatter([1, 2, 3], [1, 2, 2], p, "area")
    assert p.read_bytes()[:4] == b"\x89PNG"


def test_all_metrics_keys():
    m = all_metrics([1, 2, 3], [1, 2, 4])
    assert set(m) == {"n", "r", "mape", "rrse"}


def test_shipped_labels_load():
    labels = load_labels(DEFAULT_LABELS)
    assert len(labels) >= 30
    assert sum("cpu" in l.tags for l in labels.values()) >= 5
    l = next(iter(labels.values()))
    assert l.clock > 0 and l.paths and l.modules and l.placement


def test_label_round_trip():
    labels = load_labels(DEFAULT_LABELS)
    again = labels_from_dict(labels_to_dict(labels))
    assert again == labels


def test_label_errors():
    with pytest.raises(LabelError, match="clock"):
        labels_from_dict({"designs": {"a": {"tns": 1}}})
    with pytest.raises(LabelError, match="a, b"):
        require(labels_from_dict({"designs": {"a": {"clock": 1}, "b": {"clock": 1}}}), ["a", "b"], ["power"])
