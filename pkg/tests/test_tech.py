import json

import pytest

from sogppa.tech import TECH_KINDS, TechError, emit_tech, load_tech, node_delay, parse_tech, tech_from_dict


def test_shipped_file_has_every_kind(tech):
    assert set(tech.cells) == set(TECH_KINDS)
    assert tech.warnings == ()


def test_negative_slope_rejected():
    with pytest.raises(TechError, match="AND2.b"):
        tech_from_dict({"cells": {"AND2": {"a": 0.1, "b": -1, "area": 1, "static": 0.1}}})


def test_empty_file_defaults_with_six_warnings():
    t = parse_tech("")
    assert len(t.warnings) == 6
    assert t.default_p == 0.5 and t.default_tr == 0.2


def test_malformed_json():
    with pytest.raises(TechError):
        parse_tech("{not json")


def test_unknown_kind_rejected():
    with pytest.raises(TechError, match="unknown"):
        tech_from_dict({"cells": {"NAND9": {}}})


def test_emit_round_trip(tech):
    assert parse_tech(emit_tech(tech)) == tech


def test_env_override(tmp_path, monkeypatch):
    p = tmp_path / "t.json"
    p.write_text(json.dumps({"clock_period": 3.0}))
    monkeypatch.setenv("SOGPPA_TECH", str(p))
    assert load_tech().clock_period == 3.0


def test_node_delay_examples():
    t = tech_from_dict({"cells": {"NOT": {"a": 1.0, "b": 0.5}, "AND2": {"a": 0.2, "b": 0.05}}})
    assert node_delay("NOT", 1, t) == 1.5
    assert node_delay("NOT", 0, t) == 1.0
    assert node_delay("AND2", 10, t) == pytest.approx(0.7, abs=1e-12)


def test_io_nodes_have_no_delay(tech):
    for k in ("INPUT", "OUTPUT", "CONST0", "CONST1"):
        assert node_delay(k, 5, tech) == 0.0


def test_scaled_delays(tech):
    s = tech.scaled_delays(2.0)
    assert node_delay("XOR2", 3, s) == pytest.approx(2 * node_delay("XOR2", 3, tech))
    assert s.cells["XOR2"].area == tech.cells["XOR2"].area
