"""Ground-truth label files.

Layout::

    {"designs": {"<name>": {"clock": 1.0, "tns": -0.4, "wns": -0.1, "power": 12.3,
                            "area": {"total": 900.0, "seq": 300.0, "comb": 600.0},
                            "modules": {"alu0": {"power": 3.1, "count": 1}},
                            "paths": [{"start": "r.q[0]", "end": "s.q[3]", "delay": 0.8}],
                            "placement": {"tns": ..., "wns": ..., "power": ..., "area": ...},
                            "tags": ["cpu"]}}}

Every field other than ``clock`` is optional; consumers check what they need
with :func:`require`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field


class LabelError(ValueError):
    """Malformed label data or labels missing for a requested task."""


class InsufficientDataError(ValueError):
    """Too few designs or rows to train a model."""


@dataclass(frozen=True)
class PathLabel:
    start: str
    end: str
    delay: float


@dataclass
class DesignLabels:
    name: str
    clock: float
    tns: float | None = None
    wns: float | None = None
    power: float | None = None
    area: float | None = None
    area_seq: float | None = None
    area_comb: float | None = None
    modules: dict[str, dict] = field(default_factory=dict)
    paths: list[PathLabel] = field(default_factory=list)
    placement: dict[str, float] | None = None
    tags: list[str] = field(default_factory=list)


def _num(design: str, key: str, v, positive: bool = False) -> float:
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise LabelError(f"{design}: {key} is not a number ({v!r})") from None
    if not math.isfinite(x):
        raise LabelError(f"{design}: {key} is not finite")
    if positive and x <= 0:
        raise LabelError(f"{design}: {key} must be > 0")
    return x


def _opt(design: str, d: dict, key: str) -> float | None:
    return None if d.get(key) is None else _num(design, key, d[key])


def design_labels_from_dict(name: str, d: dict) -> DesignLabels:
    if not isinstance(d, dict):
        raise LabelError(f"{name}: label entry must be an object")
    if "clock" not in d:
        raise LabelError(f"{name}: missing clock")
    area = d.get("area")
    if isinstance(area, dict):
        a_tot, a_seq, a_comb = (_opt(name, area, k) for k in ("total", "seq", "comb"))
        if a_tot is None and a_seq is not None and a_comb is not None:
            a_tot = a_seq + a_comb
    else:
        a_tot, a_seq, a_comb = _opt(name, d, "area"), None, None
    modules = {}
    for m, md in (d.get("modules") or {}).items():
        entry = {"power": _num(name, f"modules.{m}.power", md["power"]), "count": int(md.get("count", 1))}
        for k in ("dynamic", "static"):
            if md.get(k) is not None:
                entry[k] = _num(name, f"modules.{m}.{k}", md[k])
        if entry["count"] < 1:
            raise LabelError(f"{name}: modules.{m}.count must be >= 1")
        modules[m] = entry
    paths = []
    for i, p in enumerate(d.get("paths") or []):
        try:
            paths.append(PathLabel(str(p["start"]), str(p["end"]), _num(name, f"paths[{i}].delay", p["delay"])))
        except (KeyError, TypeError):
            raise LabelError(f"{name}: paths[{i}] needs start, end and delay") from None
    placement = None
    if d.get("placement") is not None:
        placement = {k: _num(name, f"placement.{k}", v) for k, v in d["placement"].items() if v is not None}
    return DesignLabels(
        name=name,
        clock=_num(name, "clock", d["clock"], positive=True),
        tns=_opt(name, d, "tns"),
        wns=_opt(name, d, "wns"),
        power=_opt(name, d, "power"),
        area=a_tot,
        area_seq=a_seq,
        area_comb=a_comb,
        modules=modules,
        paths=paths,
        placement=placement,
        tags=[str(t) for t in d.get("tags", [])],
    )


def labels_from_dict(data: dict) -> dict[str, DesignLabels]:
    if not isinstance(data, dict) or not isinstance(data.get("designs"), dict):
        raise LabelError("label file must contain a 'designs' object")
    return {n: design_labels_from_dict(n, d) for n, d in sorted(data["designs"].items())}


def load_labels(path) -> dict[str, DesignLabels]:
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise LabelError(f"malformed label file {path}: {e}") from None
    return labels_from_dict(data)


def labels_to_dict(labels: dict[str, DesignLabels]) -> dict:
    out = {}
    for n, l in labels.items():
        d: dict = {"clock": l.clock}
        for k in ("tns", "wns", "power"):
            if getattr(l, k) is not None:
                d[k] = getattr(l, k)
        area = {k: v for k, v in (("total", l.area), ("seq", l.area_seq), ("comb", l.area_comb)) if v is not None}
        if area:
            d["area"] = area
        if l.modules:
            d["modules"] = l.modules
        if l.paths:
            d["paths"] = [{"start": p.start, "end": p.end, "delay": p.delay} for p in l.paths]
        if l.placement is not None:
            d["placement"] = l.placement
        d["tags"] = l.tags
        out[n] = d
    return {"designs": out}


def require(labels: dict[str, DesignLabels], names, fields) -> None:
    """Raise :class:`LabelError` naming every design missing one of ``fields``."""
    for f in fields:
        missing = [n for n in names if n not in labels or not _has(labels[n], f)]
        if missing:
            raise LabelError(f"label field '{f}' missing for designs: {', '.join(missing)}")


def _has(l: DesignLabels, f: str) -> bool:
    v = getattr(l, f)
    return bool(v) if isinstance(v, (list, dict)) else v is not None


def require_min(n: int, floor: int, what: str = "designs") -> None:
    if n < floor:
        raise InsufficientDataError(f"insufficient {what}: {n} < {floor}")
