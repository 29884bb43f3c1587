"""Simplified technology data: per-operator delay, area and leakage.

File format::

    {"clock_period": 1.0, "default_p": 0.5, "default_tr": 0.2, "dyn_scale": 1.0,
     "cells": {"AND2": {"a": ..., "b": ..., "area": ..., "static": ...}, ..., "REG": {...}}}

Delay units are ns, area um^2, static power uW.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .sog import KIND_CODES, KIND_NAMES, REG, INPUT, OUTPUT, CONST0, CONST1, SogGraph

log = logging.getLogger(__name__)

TECH_KINDS = ("AND2", "OR2", "XOR2", "NOT", "MUX2", "REG")
TECH_ENV = "SOGPPA_TECH"

# Rounded from the open 45nm cell library (X1 drive): intrinsic delay at a
# nominal load, slope = drive resistance x one input pin capacitance.
DEFAULT_CELLS = {
    "AND2": {"a": 0.030, "b": 0.0060, "area": 1.064, "static": 0.0250},
    "OR2": {"a": 0.038, "b": 0.0065, "area": 1.064, "static": 0.0230},
    "XOR2": {"a": 0.045, "b": 0.0080, "area": 1.596, "static": 0.0360},
    "NOT": {"a": 0.012, "b": 0.0045, "area": 0.532, "static": 0.0140},
    "MUX2": {"a": 0.055, "b": 0.0070, "area": 1.862, "static": 0.0600},
    "REG": {"a": 0.085, "b": 0.0050, "area": 4.522, "static": 0.0800},
}


class TechError(ValueError):
    """Malformed or out-of-range technology configuration."""


@dataclass(frozen=True)
class CellParams:
    a: float
    b: float
    area: float
    static: float


@dataclass(frozen=True)
class TechConfig:
    cells: dict[str, CellParams]
    clock_period: float = 1.0
    default_p: float = 0.5
    default_tr: float = 0.2
    dyn_scale: float = 1.0
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def dff_area(self) -> float:
        return self.cells["REG"].area

    def scaled_delays(self, c: float) -> "TechConfig":
        cells = {k: replace(v, a=v.a * c, b=v.b * c) for k, v in self.cells.items()}
        return replace(self, cells=cells)

    def coefficient_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-kind-code intrinsic and slope arrays (zeros for I/O and constants)."""
        a, b = np.zeros(10), np.zeros(10)
        for name, p in self.cells.items():
            a[KIND_CODES[name]] = p.a
            b[KIND_CODES[name]] = p.b
        return a, b


def _check(name: str, value, lo: float = 0.0, hi: float = math.inf, strict: bool = False) -> float:
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise TechError(f"{name}: not a number ({value!r})") from None
    if not math.isfinite(v) or v < lo or v > hi or (strict and v == lo):
        raise TechError(f"{name}: value {v} out of range")
    return v


def tech_from_dict(data: dict) -> TechConfig:
    if not isinstance(data, dict):
        raise TechError("technology config must be a JSON object")
    warns = []
    cells = {}
    raw_cells = data.get("cells", {})
    unknown = set(raw_cells) - set(TECH_KINDS)
    if unknown:
        raise TechError(f"unknown cell kinds {sorted(unknown)}")
    for kind in TECH_KINDS:
        if kind not in raw_cells:
            warns.append(f"{kind}: missing, using default coefficients")
            cells[kind] = CellParams(**DEFAULT_CELLS[kind])
            continue
        entry = {**DEFAULT_CELLS[kind], **{k: v for k, v in raw_cells[kind].items() if not k.startswith("_")}}
        cells[kind] = CellParams(**{k: _check(f"{kind}.{k}", entry[k]) for k in ("a", "b", "area", "static")})
    cfg = TechConfig(
        cells=cells,
        clock_period=_check("clock_period", data.get("clock_period", 1.0), strict=True),
        default_p=_check("default_p", data.get("default_p", 0.5), hi=1.0),
        default_tr=_check("default_tr", data.get("default_tr", 0.2)),
        dyn_scale=_check("dyn_scale", data.get("dyn_scale", 1.0)),
        warnings=tuple(warns),
    )
    for w in warns:
        log.warning(w)
    return cfg


def parse_tech(text: str) -> TechConfig:
    if not text.strip():
        return tech_from_dict({})
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise TechError(f"malformed technology file: {e}") from None
    return tech_from_dict(data)


def load_tech(path=None) -> TechConfig:
    """Load a config file; ``None`` uses ``$SOGPPA_TECH`` or the shipped 45nm approximation."""
    if path is None:
        path = os.environ.get(TECH_ENV) or default_tech_path()
    with open(path) as f:
        return parse_tech(f.read())


def default_tech_path() -> str:
    return os.path.join(os.path.dirname(__file__), "data", "nangate45-approx.json")


def tech_to_dict(t: TechConfig) -> dict:
    return {
        "clock_period": t.clock_period,
        "default_p": t.default_p,
        "default_tr": t.default_tr,
        "dyn_scale": t.dyn_scale,
        "cells": {k: {"a": c.a, "b": c.b, "area": c.area, "static": c.static} for k, c in t.cells.items()},
    }


def emit_tech(t: TechConfig) -> str:
    return json.dumps(tech_to_dict(t), indent=2) + "\n"


def node_delay(kind: str | int, fanout: int, t: TechConfig) -> float:
    """Linear fan-out delay ``a + b * fanout``; registers give clock-to-Q only."""
    code = KIND_CODES[kind] if isinstance(kind, str) else kind
    if code in (INPUT, OUTPUT, CONST0, CONST1):
        return 0.0
    p = t.cells[KIND_NAMES[code]]
    if code == REG:
        return p.a
    return p.a + p.b * fanout


def node_delays(g: SogGraph, t: TechConfig) -> np.ndarray:
    """Vectorized :func:`node_delay` over every node of ``g``."""
    a, b = t.coefficient_arrays()
    k = g.kind_array.astype(np.int64)
    slope = np.where(k == REG, 0.0, b[k])
    return a[k] + slope * g.fanout_counts
