"""Analytical arrival propagation, critical-path extraction and timing models.

Node delays come from :func:`sogppa.tech.node_delays`. Arrival times are the
longest-path sums over a topological traversal; each endpoint's critical path
is recovered by backtracking the recorded argmax predecessor. A forest maps
path features to netlist delay, and boosted models calibrate design-level
TNS/WNS.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .labels import DesignLabels, InsufficientDataError, LabelError, require_min
from .mlcore import TrainConfig, fit_forest, fit_gbt
from .sog import AND2, INPUT, MUX2, OUTPUT, REG, SOURCE_KINDS, SogGraph, sog_feature_vector
from .tech import TechConfig, node_delays

log = logging.getLogger(__name__)

PATH_FEATURE_NAMES = (
    "n_ops", "n_and2", "n_or2", "n_xor2", "n_not", "n_mux2",
    "delay", "fanout_sum", "fanout_max", "fanout_mean",
)
CALIB_FEATURE_NAMES = (
    "n_and2", "n_or2", "n_xor2", "n_not", "n_mux2", "n_reg",
    "tns_raw", "wns_raw", "slack_worst", "slack_p10", "slack_p50", "slack_p90",
)
PATH_MODEL_CONFIG = TrainConfig(n_trees=80, max_depth=20)
CALIB_MODEL_CONFIG = TrainConfig(n_trees=45, max_depth=8)
MIN_PATH_ROWS = 50
MIN_CALIB_DESIGNS = 20
MIN_LAYOUT_DESIGNS = 5
PAIR_FLOOR = 10
WORST_SET_FLOOR = 4
LAYOUT_TARGETS = ("tns", "wns", "power", "area")


class TimingError(ValueError):
    """Invalid timing query."""


@dataclass
class ArrivalAnnotation:
    arrival: np.ndarray  # -inf where unreachable (restricted propagation)
    pred: np.ndarray  # -1 at sources
    delay: np.ndarray


@dataclass
class CriticalPath:
    start: int
    end: int
    nodes: list[int]
    delay: float


def _best_pred(fanins, arrival) -> tuple[int, float]:
    best, best_t = -1, -math.inf
    for u in fanins:
        tu = arrival[u]
        if tu > best_t or (tu == best_t and u < best):
            best, best_t = u, tu
    return best, best_t


def propagate_arrivals(g: SogGraph, t: TechConfig, delays: np.ndarray | None = None) -> ArrivalAnnotation:
    """Single topological pass; ties in the max go to the lowest fan-in id."""
    d = node_delays(g, t) if delays is None else delays
    dl = d.tolist()
    n = len(g)
    arrival = [0.0] * n
    pred = [-1] * n
    kinds, fanins = g.kinds, g.fanins
    for v in g._topo:
        k = kinds[v]
        if k in SOURCE_KINDS:
            arrival[v] = dl[v]
            continue
        p, tp = _best_pred(fanins[v], arrival)
        pred[v] = p
        arrival[v] = dl[v] + tp
    return ArrivalAnnotation(np.asarray(arrival), np.asarray(pred, dtype=np.int64), d)


def endpoints(g: SogGraph) -> list[int]:
    """Register D-pins first, then primary outputs, each in node-id order."""
    return list(g.regs) + list(g.outputs)


def _backtrack(g: SogGraph, ann: ArrivalAnnotation, end: int) -> CriticalPath:
    if g.kinds[end] == REG:
        first = g.fanins[end][0]
        tail = [end]
    else:
        first = end
        tail = []
    nodes = []
    v = first
    while v >= 0:
        nodes.append(v)
        if g.kinds[v] in SOURCE_KINDS:
            break
        v = int(ann.pred[v])
    nodes.reverse()
    nodes.extend(tail)
    return CriticalPath(nodes[0], end, nodes, float(ann.arrival[first]))


def extract_endpoint_paths(g: SogGraph, ann: ArrivalAnnotation) -> list[CriticalPath]:
    return [_backtrack(g, ann, e) for e in endpoints(g)]


def _cone(g: SogGraph, start: int) -> set[int]:
    """Combinational forward cone of ``start`` (registers stop the search)."""
    seen = {start}
    stack = [start]
    fo = g.fanout_lists
    while stack:
        u = stack.pop()
        for v in fo[u]:
            if v not in seen:
                seen.add(v)
                if g.kinds[v] != REG:
                    stack.append(v)
    return seen


def restricted_arrivals(g: SogGraph, start: int, delays: np.ndarray) -> ArrivalAnnotation:
    """Arrivals with ``start`` as the only source (every other source at -inf)."""
    n = len(g)
    arrival = np.full(n, -math.inf)
    pred = np.full(n, -1, dtype=np.int64)
    cone = _cone(g, start)
    pos = _topo_pos(g)
    arrival[start] = delays[start]
    for v in sorted(cone - {start}, key=pos.__getitem__):
        if g.kinds[v] == REG:
            continue
        p, tp = _best_pred(g.fanins[v], arrival)
        pred[v] = p
        arrival[v] = delays[v] + tp
    return ArrivalAnnotation(arrival, pred, delays)


def _topo_pos(g: SogGraph) -> dict[int, int]:
    pos = g.__dict__.get("_topo_pos")
    if pos is None or len(pos) != len(g):
        pos = {v: i for i, v in enumerate(g._topo)}
        g.__dict__["_topo_pos"] = pos
    return pos


def extract_pair_path(g: SogGraph, t: TechConfig, start: int, end: int,
                      delays: np.ndarray | None = None, ann: ArrivalAnnotation | None = None) -> CriticalPath | None:
    """Maximum-delay path from ``start`` (REG/INPUT) to ``end`` (REG/OUTPUT), or None."""
    if not 0 <= start < len(g) or g.kinds[start] not in (REG, INPUT):
        raise TimingError(f"node {start} is not a REG or INPUT start point")
    if not 0 <= end < len(g) or g.kinds[end] not in (REG, OUTPUT):
        raise TimingError(f"node {end} is not a REG or OUTPUT endpoint")
    if ann is None:
        d = node_delays(g, t) if delays is None else delays
        ann = restricted_arrivals(g, start, d)
    first = g.fanins[end][0]
    if ann.arrival[first] == -math.inf:
        return None
    # backtrack until the restricted source is reached
    nodes = []
    v = first
    while True:
        nodes.append(v)
        if v == start:
            break
        v = int(ann.pred[v])
    nodes.reverse()
    if g.kinds[end] == REG:
        nodes.append(end)
    return CriticalPath(start, end, nodes, float(ann.arrival[first]))


def path_features(p: CriticalPath, g: SogGraph, fanout: np.ndarray | None = None) -> np.ndarray:
    fo = g.fanout_counts if fanout is None else fanout
    counts = np.zeros(5)
    for v in p.nodes[1:-1]:
        k = g.kinds[v]
        if k <= MUX2:
            counts[k - AND2] += 1
    f = fo[p.nodes[:-1]] if len(p.nodes) > 1 else fo[p.nodes]
    return np.array([counts.sum(), *counts, p.delay, f.sum(), f.max(), f.mean()], dtype=float)


def path_feature_matrix(paths: list[CriticalPath], g: SogGraph) -> np.ndarray:
    fo = g.fanout_counts
    if not paths:
        return np.zeros((0, len(PATH_FEATURE_NAMES)))
    return np.vstack([path_features(p, g, fo) for p in paths])


# path-level dataset -------------------------------------------------------

@dataclass
class PathDataset:
    X: np.ndarray
    y: np.ndarray
    groups: list[str]
    generated: np.ndarray
    skipped: int = 0

    def __len__(self) -> int:
        return len(self.y)

    def subset(self, mask) -> "PathDataset":
        mask = np.asarray(mask)
        return PathDataset(self.X[mask], self.y[mask], [g for g, m in zip(self.groups, mask) if m],
                           self.generated[mask], self.skipped)

    def extend(self, other: "PathDataset") -> "PathDataset":
        return PathDataset(np.vstack([self.X, other.X]), np.concatenate([self.y, other.y]),
                           self.groups + other.groups, np.concatenate([self.generated, other.generated]),
                           self.skipped + other.skipped)


def empty_path_dataset() -> PathDataset:
    return PathDataset(np.zeros((0, len(PATH_FEATURE_NAMES))), np.zeros(0), [], np.zeros(0, bool))


def _resolve(g: SogGraph, name: str, kinds: tuple[int, ...], design: str, role: str) -> int:
    idx = g.__dict__.get("_ep_index")
    if idx is None:
        idx = {}
        for k in (REG, INPUT, OUTPUT):
            idx[k] = {}
        for nid, nm in g.names.items():
            if g.kinds[nid] in idx:
                idx[g.kinds[nid]][nm] = nid
        g.__dict__["_ep_index"] = idx
    for k in kinds:
        if name in idx[k]:
            return idx[k][name]
    raise LabelError(f"{design}: path {role} '{name}' does not name a register or port bit in the SOG")


def build_path_training_set(designs: dict[str, SogGraph], labels: dict[str, DesignLabels],
                            t: TechConfig) -> PathDataset:
    """Features of the SOG pair path for each labeled netlist path.

    Pairs with no SOG path are skipped and counted.
    """
    rows, ys, groups = [], [], []
    skipped = 0
    for name in sorted(designs):
        lab = labels.get(name)
        if lab is None or not lab.paths:
            continue
        g = designs[name]
        n_ep = len(g.regs) + len(g.outputs)
        want = min(max(math.ceil(0.01 * n_ep), PAIR_FLOOR), n_ep)
        if len(lab.paths) < want:
            log.warning("%s: %d labeled paths, expected at least %d", name, len(lab.paths), want)
        delays = node_delays(g, t)
        fo = g.fanout_counts
        by_start: dict[int, list] = {}
        for pl in lab.paths:
            s = _resolve(g, pl.start, (REG, INPUT), name, "start")
            e = _resolve(g, pl.end, (REG, OUTPUT), name, "end")
            by_start.setdefault(s, []).append((e, pl.delay))
        for s in sorted(by_start):
            ann = restricted_arrivals(g, s, delays)
            for e, delay in by_start[s]:
                p = extract_pair_path(g, t, s, e, ann=ann)
                if p is None:
                    skipped += 1
                    continue
                rows.append(path_features(p, g, fo))
                ys.append(delay)
                groups.append(name)
    if skipped:
        log.warning("%d labeled path(s) had no SOG path and were skipped", skipped)
    X = np.vstack(rows) if rows else np.zeros((0, len(PATH_FEATURE_NAMES)))
    return PathDataset(X, np.asarray(ys, dtype=float), groups, np.zeros(len(ys), bool), skipped)


def train_path_model(X, y, seed: int = 0, cfg: TrainConfig | None = None):
    require_min(len(y), MIN_PATH_ROWS, "path rows")
    base = cfg or PATH_MODEL_CONFIG
    return fit_forest(X, y, TrainConfig(**{**base.to_dict(), "seed": seed}))


# design-level timing ------------------------------------------------------

@dataclass
class TimingReport:
    clock: float
    tns_raw: float
    tns_raw_negative: float
    wns_raw: float
    slack_worst: float
    slack_p10: float
    slack_p50: float
    slack_p90: float
    endpoint_slacks: np.ndarray
    endpoint_names: list[str] = field(default_factory=list)
    tns: float | None = None
    wns: float | None = None

    def calib_features(self, g: SogGraph) -> np.ndarray:
        return np.concatenate([sog_feature_vector(g).astype(float),
                               [self.tns_raw, self.wns_raw, self.slack_worst,
                                self.slack_p10, self.slack_p50, self.slack_p90]])

    def to_dict(self) -> dict:
        return {
            "clock": self.clock,
            "tns_raw": self.tns_raw,
            "tns_raw_negative": self.tns_raw_negative,
            "wns_raw": self.wns_raw,
            "slack_worst": self.slack_worst,
            "slack_p10": self.slack_p10,
            "slack_p50": self.slack_p50,
            "slack_p90": self.slack_p90,
            "tns": self.tns,
            "wns": self.wns,
            "n_endpoints": len(self.endpoint_slacks),
        }


def nearest_rank(sorted_vals: np.ndarray, pct: float) -> float:
    """Nearest-rank percentile of an ascending array."""
    k = max(1, math.ceil(pct / 100.0 * len(sorted_vals)))
    return float(sorted_vals[k - 1])


def worst_set(slacks: np.ndarray) -> np.ndarray:
    n = len(slacks)
    k = min(n, max(math.ceil(0.01 * n), WORST_SET_FLOOR))
    return np.sort(slacks)[:k]


def slack_summary(slacks: np.ndarray, clock: float) -> TimingReport:
    slacks = np.asarray(slacks, dtype=float)
    if len(slacks) == 0:
        raise TimingError("design has no timing endpoints")
    w = worst_set(slacks)
    return TimingReport(
        clock=clock,
        tns_raw=float(np.sum(slacks)),
        tns_raw_negative=float(np.sum(np.minimum(slacks, 0.0))),
        wns_raw=float(np.min(slacks)),
        slack_worst=float(w[0]),
        slack_p10=nearest_rank(w, 10),
        slack_p50=nearest_rank(w, 50),
        slack_p90=nearest_rank(w, 90),
        endpoint_slacks=slacks,
    )


def design_path_features(g: SogGraph, t: TechConfig) -> tuple[list[CriticalPath], np.ndarray]:
    ann = propagate_arrivals(g, t)
    paths = extract_endpoint_paths(g, ann)
    return paths, path_feature_matrix(paths, g)


def predict_design_timing(g: SogGraph, t: TechConfig, model, clock: float,
                          features: np.ndarray | None = None) -> TimingReport:
    """Raw TNS/WNS from model-predicted endpoint path delays.

    ``tns_raw`` sums every endpoint slack, positive ones included;
    ``tns_raw_negative`` is the conventional negative-only sum.
    """
    if not clock > 0:
        raise TimingError(f"clock period must be > 0, got {clock}")
    if features is None:
        _, features = design_path_features(g, t)
    delays = model.predict(features) if len(features) else np.zeros(0)
    rep = slack_summary(clock - delays, clock)
    rep.endpoint_names = [g.names.get(e, str(e)) for e in endpoints(g)]
    return rep


def train_timing_calibration(features, tns, wns, seed: int = 0, cfg: TrainConfig | None = None):
    """Two boosted models mapping calibration features to true TNS and WNS."""
    X = np.asarray(features, dtype=float)
    require_min(len(X), MIN_CALIB_DESIGNS)
    base = TrainConfig(**{**(cfg or CALIB_MODEL_CONFIG).to_dict(), "seed": seed})
    return fit_gbt(X, tns, base), fit_gbt(X, wns, base)


def train_layout_calibration(synth_rows: dict[str, dict], placement: dict[str, dict | None],
                             seed: int = 0, cfg: TrainConfig | None = None) -> tuple[dict, int]:
    """One boosted model per placement target from the four synthesis-level predictions.

    Returns ``(models, excluded)`` where ``excluded`` counts designs dropped for
    missing fields.
    """
    names, X, Y = [], [], []
    excluded = 0
    for n in sorted(synth_rows):
        row, pl = synth_rows[n], placement.get(n)
        if pl is None or any(pl.get(k) is None for k in LAYOUT_TARGETS) \
                or any(row.get(k) is None for k in LAYOUT_TARGETS):
            excluded += 1
            continue
        names.append(n)
        X.append([row[k] for k in LAYOUT_TARGETS])
        Y.append([pl[k] for k in LAYOUT_TARGETS])
    if not names:
        raise LabelError("no design has complete placement labels")
    if excluded:
        log.warning("%d design(s) excluded from layout calibration for missing fields", excluded)
    require_min(len(names), MIN_LAYOUT_DESIGNS)
    base = TrainConfig(**{**(cfg or CALIB_MODEL_CONFIG).to_dict(), "seed": seed})
    X, Y = np.asarray(X), np.asarray(Y)
    return {k: fit_gbt(X, Y[:, i], base) for i, k in enumerate(LAYOUT_TARGETS)}, excluded


__all__ = [
    "ArrivalAnnotation", "CriticalPath", "InsufficientDataError", "PathDataset", "TimingError", "TimingReport",
    "build_path_training_set", "design_path_features", "extract_endpoint_paths", "extract_pair_path",
    "path_features", "predict_design_timing", "propagate_arrivals", "train_layout_calibration",
    "train_path_model", "train_timing_calibration",
]
