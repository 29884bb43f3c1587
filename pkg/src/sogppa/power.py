"""Module-level power models and design-level power calibration.

The SOG is split by level-1 module definition. Each definition is featurized
once on a representative instance, a dynamic and a static model predict its
power, and the design total before calibration is the multiplicity-weighted
sum over definitions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .activity import ActivityMap
from .labels import DesignLabels, require_min
from .mlcore import TrainConfig, fit_gbt
from .sog import SogGraph, sog_feature_vector
from .tech import TECH_KINDS, TechConfig

log = logging.getLogger(__name__)

DYN_FEATURE_NAMES = ("toggle_sum", "toggle_mean", "fanout_toggle_sum", "n_nodes")
STAT_FEATURE_NAMES = ("n_and2", "n_or2", "n_xor2", "n_not", "n_mux2", "n_reg", "static_sum")
MODULE_MODEL_CONFIG = TrainConfig(n_trees=30, max_depth=6)
CALIB_MODEL_CONFIG = TrainConfig(n_trees=45, max_depth=8)
MIN_MODULE_SAMPLES = 30
MIN_CALIB_DESIGNS = 20
TOP = "top"


@dataclass
class ModulePartition:
    name: str
    nodes: np.ndarray  # every node of every instance
    rep_nodes: np.ndarray  # nodes of the representative instance
    k: int
    instances: list[str] = field(default_factory=list)


def partition_modules(g: SogGraph) -> list[ModulePartition]:
    """One partition per level-1 module definition plus ``top``.

    Nodes belong to the partition of the instance that drives them. The
    representative instance is the lexicographically first one.
    """
    tags = np.asarray(g.tags, dtype=np.int64)
    by_tag = {name: np.flatnonzero(tags == i) for i, name in enumerate(g.tag_names)}
    defs: dict[str, list[str]] = {}
    for inst, mod in g.tag_modules.items():
        defs.setdefault(mod, []).append(inst)
    empty = np.zeros(0, dtype=np.int64)
    parts = [ModulePartition(TOP, by_tag.get(TOP, empty), by_tag.get(TOP, empty), 1, [TOP])]
    for mod in sorted(defs):
        insts = sorted(defs[mod])
        nodes = np.sort(np.concatenate([by_tag.get(i, empty) for i in insts])) if insts else empty
        parts.append(ModulePartition(mod, nodes, by_tag.get(insts[0], empty), len(insts), insts))
    stray = set(g.tag_names) - {TOP} - set(g.tag_modules)
    if stray:
        # tags without a recorded module definition count as their own module
        for inst in sorted(stray):
            parts.append(ModulePartition(inst, by_tag[inst], by_tag[inst], 1, [inst]))
    return parts


def module_power_features(p: ModulePartition, g: SogGraph, act: ActivityMap,
                          t: TechConfig) -> tuple[np.ndarray, np.ndarray]:
    """``(dynamic, static)`` feature vectors over the representative instance."""
    idx = p.rep_nodes
    d = act.D[idx]
    fo = g.fanout_counts[idx]
    n = len(idx)
    dyn = np.array([d.sum(), d.mean() if n else 0.0, float(np.dot(fo, d)), float(n)])
    counts = np.bincount(g.kind_array[idx].astype(np.int64), minlength=10)[:6].astype(float)
    static = np.array([t.cells[k].static for k in TECH_KINDS])
    return dyn, np.concatenate([counts, [float(np.dot(counts, static))]])


def design_module_features(g: SogGraph, act: ActivityMap, t: TechConfig):
    parts = partition_modules(g)
    feats = [module_power_features(p, g, act, t) for p in parts]
    Xd = np.vstack([f[0] for f in feats])
    Xs = np.vstack([f[1] for f in feats])
    return parts, Xd, Xs


@dataclass
class ModuleSamples:
    Xdyn: np.ndarray
    Xstat: np.ndarray
    y: np.ndarray
    y_dyn: np.ndarray  # NaN where no split is labeled
    y_stat: np.ndarray
    groups: list[str]
    modules: list[str]


def collect_module_samples(features: dict[str, tuple], labels: dict[str, DesignLabels]) -> ModuleSamples:
    """Pair partition features with per-module labels.

    ``features`` maps design name to the output of :func:`design_module_features`.
    """
    Xd, Xs, y, yd, ys, groups, mods = [], [], [], [], [], [], []
    for name in sorted(features):
        lab = labels.get(name)
        if lab is None or not lab.modules:
            continue
        parts, fd, fs = features[name]
        for i, p in enumerate(parts):
            ml = lab.modules.get(p.name)
            if ml is None:
                continue
            if ml["count"] != p.k:
                log.warning("%s: module %s labeled count %d, SOG has %d instances", name, p.name, ml["count"], p.k)
            Xd.append(fd[i])
            Xs.append(fs[i])
            y.append(ml["power"])
            yd.append(ml.get("dynamic", np.nan))
            ys.append(ml.get("static", np.nan))
            groups.append(name)
            mods.append(p.name)
    empty = np.zeros((0, len(DYN_FEATURE_NAMES))), np.zeros((0, len(STAT_FEATURE_NAMES)))
    return ModuleSamples(np.vstack(Xd) if Xd else empty[0], np.vstack(Xs) if Xs else empty[1],
                         np.asarray(y, float), np.asarray(yd, float), np.asarray(ys, float), groups, mods)


@dataclass
class ModulePowerModel:
    dynamic: object
    static: object

    def predict(self, Xdyn, Xstat) -> np.ndarray:
        return self.dynamic.predict(Xdyn) + self.static.predict(Xstat)


def train_module_power(Xdyn, Xstat, y, y_dyn=None, y_stat=None, seed: int = 0,
                       cfg: TrainConfig | None = None) -> ModulePowerModel:
    """Boosted dynamic and static models whose sum predicts module power.

    With a labeled dynamic/static split both models fit their own target.
    Otherwise the dynamic model fits power minus the analytical leakage sum
    and the static model fits what the dynamic model leaves over.
    """
    Xdyn, Xstat, y = np.asarray(Xdyn, float), np.asarray(Xstat, float), np.asarray(y, float)
    require_min(len(y), MIN_MODULE_SAMPLES, "module samples")
    c = TrainConfig(**{**(cfg or MODULE_MODEL_CONFIG).to_dict(), "seed": seed})
    split = y_dyn is not None and y_stat is not None and np.isfinite(y_dyn).all() and np.isfinite(y_stat).all()
    if split:
        return ModulePowerModel(fit_gbt(Xdyn, y_dyn, c), fit_gbt(Xstat, y_stat, c))
    dyn = fit_gbt(Xdyn, y - Xstat[:, -1], c)
    stat = fit_gbt(Xstat, y - dyn.predict(Xdyn), c)
    return ModulePowerModel(dyn, stat)


@dataclass
class PowerReport:
    modules: list[dict]
    total_raw: float
    total: float | None = None
    activity_source: str = "default"

    def to_dict(self) -> dict:
        return {"total_raw": self.total_raw, "total": self.total, "activity_source": self.activity_source,
                "modules": self.modules}


def power_calib_features(total_raw: float, g: SogGraph) -> np.ndarray:
    return np.concatenate([[total_raw], sog_feature_vector(g).astype(float)])


def predict_design_power(g: SogGraph, act: ActivityMap, t: TechConfig, model: ModulePowerModel,
                         calib=None, features=None) -> PowerReport:
    parts, Xd, Xs = features if features is not None else design_module_features(g, act, t)
    dyn = model.dynamic.predict(Xd)
    stat = model.static.predict(Xs)
    mods = []
    total = 0.0
    for p, d, s in zip(parts, dyn, stat):
        pw = float(d + s)
        mods.append({"module": p.name, "k": p.k, "dynamic": float(d), "static": float(s), "power": pw})
        total += p.k * pw
    rep = PowerReport(mods, total, activity_source=act.source)
    if calib is not None:
        rep.total = float(calib.predict(power_calib_features(total, g))[0])
    return rep


def train_power_calibration(features, y, seed: int = 0, cfg: TrainConfig | None = None):
    X = np.asarray(features, float)
    require_min(len(X), MIN_CALIB_DESIGNS)
    return fit_gbt(X, y, TrainConfig(**{**(cfg or CALIB_MODEL_CONFIG).to_dict(), "seed": seed}))
