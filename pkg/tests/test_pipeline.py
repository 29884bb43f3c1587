import os

import numpy as np
import pytest

from sogppa.activity import default_activity
from sogppa.area import predict_area
from sogppa.labels import InsufficientDataError
from sogppa.mlcore import ModelFileError
from sogppa.pipeline import (MODEL_FILES, TASKS, ModelBundle, analyze_design, augmentation_ablation,
                             predict_design, raw_power, raw_timing, train_all)
from sogppa.rtlgen import GenConfig
from sogppa.timing import LAYOUT_TARGETS, train_layout_calibration
from sogppa.evaluation import metric_mape


def test_bundle_has_every_model(bundle):
    assert bundle.path and bundle.tns and bundle.wns and bundle.module_power and bundle.power_calib and bundle.area
    assert set(bundle.layout) == set(LAYOUT_TARGETS)
    assert bundle.summary["path_skipped"] == 0


def test_report_fields(corpus, bundle, tech):
    analyses, labels = corpus
    name = sorted(analyses)[0]
    r = predict_design(analyses[name], bundle, tech, labels[name].clock, layout=True)
    for k in ("tns", "wns", "power", "area", "tns_raw", "wns_raw", "power_raw", "area_seq", "placement"):
        assert k in r
    assert r["activity_source"] == "default"
    assert r["area"] == r["area_seq"] + r["area_comb"]


def test_raw_timing_is_literal_sum(corpus, bundle):
    analyses, labels = corpus
    for name in sorted(analyses)[:10]:
        a = analyses[name]
        rep = raw_timing(a, bundle.path, labels[name].clock)
        slacks = labels[name].clock - bundle.path.predict(a.path_features)
        assert rep.tns_raw == pytest.approx(float(np.sum(slacks)), rel=1e-12)
        assert rep.wns_raw == float(np.min(slacks))


def test_power_is_weighted_module_sum(corpus, bundle, tech):
    analyses, _ = corpus
    for name in sorted(analyses)[:10]:
        rep = raw_power(analyses[name], bundle.module_power, tech)
        assert rep.total_raw == sum(m["k"] * m["power"] for m in rep.modules)


def test_bundle_round_trip(tmp_path, corpus, bundle, tech):
    analyses, labels = corpus
    written = bundle.save(tmp_path)
    assert len(written) == len(MODEL_FILES)
    b2 = ModelBundle.load(tmp_path)
    name = sorted(analyses)[3]
    r1 = predict_design(analyses[name], bundle, tech, labels[name].clock, layout=True)
    r2 = predict_design(analyses[name], b2, tech, labels[name].clock, layout=True)
    assert r1 == r2


def test_empty_bundle_dir(tmp_path):
    with pytest.raises(ModelFileError):
        ModelBundle.load(tmp_path)


def test_missing_layout_model_warns(corpus, bundle, tech, caplog):
    analyses, labels = corpus
    b = ModelBundle(bundle.path, bundle.tns, bundle.wns, bundle.module_power, bundle.power_calib, bundle.area)
    name = sorted(analyses)[0]
    r = predict_design(analyses[name], b, tech, labels[name].clock, layout=True)
    assert "placement" not in r and "layout" in caplog.text


def test_area_floor(corpus, tech):
    analyses, labels = corpus
    few = {n: analyses[n] for n in sorted(analyses)[:5]}
    with pytest.raises(InsufficientDataError, match="5 < 20"):
        train_all(few, labels, tech, tasks=("area",))


def test_layout_identity_and_scaling():
    rng = np.random.default_rng(0)
    synth = {f"d{i}": {"tns": -rng.uniform(1, 50), "wns": -rng.uniform(0.1, 2), "power": rng.uniform(10, 500),
                       "area": rng.uniform(100, 5000)} for i in range(40)}
    models, excluded = train_layout_calibration(synth, {n: dict(r) for n, r in synth.items()})
    assert excluded == 0
    X = np.array([[synth[n][k] for k in LAYOUT_TARGETS] for n in sorted(synth)])
    for i, k in enumerate(LAYOUT_TARGETS):
        assert metric_mape(X[:, i], models[k].predict(X)) < 5.0
    scaled = {n: {**r, "power": 1.2 * r["power"]} for n, r in synth.items()}
    models, _ = train_layout_calibration(synth, scaled)
    assert metric_mape(1.2 * X[:, 2], models["power"].predict(X)) < 5.0


def test_layout_missing_field_excluded():
    synth = {f"d{i}": {k: float(i + 1) for k in LAYOUT_TARGETS} for i in range(8)}
    pl = {n: dict(r) for n, r in synth.items()}
    del pl["d0"]["area"]
    _, excluded = train_layout_calibration(synth, pl)
    assert excluded == 1


def test_analysis_uses_given_activity(corpus, tech):
    analyses, _ = corpus
    a = analyses[sorted(analyses)[0]]
    seed = default_activity(a.g, tech)
    seed.D[:] = np.where(np.isnan(seed.D), np.nan, 0.05)
    seed.source = "saif"
    b = analyze_design(a.name, a.g, tech, seed=seed)
    assert b.activity.source == "saif"
    assert b.module_dyn[:, 0].sum() < a.module_dyn[:, 0].sum()


def test_ablation_small(corpus, tech):
    analyses, labels = corpus
    sub = {n: analyses[n] for n in sorted(analyses)[:24]}
    rows = augmentation_ablation(sub, labels, tech, GenConfig(n_nodes=40), n_generated=5)
    assert len(rows) == 6
    assert {r["augmented"] for r in rows} == {False, True}
