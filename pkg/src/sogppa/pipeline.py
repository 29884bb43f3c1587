"""End-to-end analysis, training, prediction and cross-validation."""

from __future__ import annotations

import logging
import math
import os
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from . import area as area_mod
from . import power as power_mod
from . import timing as timing_mod
from .activity import ActivityMap, default_activity, propagate_activity
from .evaluation import all_metrics, kfold_splits, split_by_family
from .labels import DesignLabels, InsufficientDataError, LabelError, require
from .mlcore import ModelFileError, load_model, save_model
from .netlist import WordNetlist, flatten_with_provenance
from .sog import SogGraph, lower_to_sog, sog_feature_vector
from .tech import TechConfig

log = logging.getLogger(__name__)

TASKS = ("tns", "wns", "power", "area")
MODEL_FILES = {
    "path_delay": "path_delay.json",
    "timing_tns": "timing_tns.json",
    "timing_wns": "timing_wns.json",
    "power_dynamic": "power_dynamic.json",
    "power_static": "power_static.json",
    "power_calib": "power_calib.json",
    "area": "area.json",
    **{f"layout_{k}": f"layout_{k}.json" for k in timing_mod.LAYOUT_TARGETS},
}


class StageTimer:
    """Wall-clock accounting per named stage."""

    def __init__(self):
        self.totals: dict[str, float] = {}

    @contextmanager
    def __call__(self, stage: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.totals[stage] = self.totals.get(stage, 0.0) + time.perf_counter() - t0

    def lines(self) -> list[str]:
        return [f"{k}: {v:.3f} s" for k, v in self.totals.items()]


_NULL_TIMER = StageTimer()


@dataclass
class DesignAnalysis:
    """Everything the models need from one design, computed once."""

    name: str
    g: SogGraph
    sog_counts: np.ndarray
    path_features: np.ndarray
    activity: ActivityMap
    partitions: list
    module_dyn: np.ndarray
    module_stat: np.ndarray
    area_features: np.ndarray
    analytical_delay_max: float = 0.0

    @property
    def n_nodes(self) -> int:
        return len(self.g)


def build_sog(netlist: WordNetlist) -> SogGraph:
    flat, prov = flatten_with_provenance(netlist)
    return lower_to_sog(flat, prov)


def analyze_design(name: str, src: WordNetlist | SogGraph, t: TechConfig, seed: ActivityMap | None = None,
                   timer: StageTimer | None = None) -> DesignAnalysis:
    timer = timer or _NULL_TIMER
    with timer("sog"):
        g = build_sog(src) if isinstance(src, WordNetlist) else src
        g._topo  # noqa: B018  (forces the cycle check)
    with timer("timing features"):
        _, F = timing_mod.design_path_features(g, t)
    with timer("activity"):
        act = propagate_activity(g, seed if seed is not None else default_activity(g, t))
    with timer("power features"):
        parts, Xd, Xs = power_mod.design_module_features(g, act, t)
    with timer("area features"):
        A = area_mod.comb_area_features(g, t)
    return DesignAnalysis(name, g, sog_feature_vector(g), F, act, parts, Xd, Xs, A,
                          float(F[:, 6].max()) if len(F) else 0.0)


# models ----------------------------------------------------------------------------

@dataclass
class ModelBundle:
    path: object = None
    tns: object = None
    wns: object = None
    module_power: power_mod.ModulePowerModel | None = None
    power_calib: object = None
    area: object = None
    layout: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    def save(self, directory) -> list[str]:
        os.makedirs(directory, exist_ok=True)
        items = {
            "path_delay": self.path, "timing_tns": self.tns, "timing_wns": self.wns,
            "power_dynamic": self.module_power.dynamic if self.module_power else None,
            "power_static": self.module_power.static if self.module_power else None,
            "power_calib": self.power_calib, "area": self.area,
            **{f"layout_{k}": v for k, v in self.layout.items()},
        }
        written = []
        for key, model in items.items():
            if model is not None:
                path = os.path.join(directory, MODEL_FILES[key])
                save_model(model, path, {"task": key})
                written.append(path)
        return written

    @classmethod
    def load(cls, directory) -> "ModelBundle":
        loaded = {}
        for key, fname in MODEL_FILES.items():
            path = os.path.join(directory, fname)
            if os.path.exists(path):
                loaded[key], _ = load_model(path)
        b = cls(path=loaded.get("path_delay"), tns=loaded.get("timing_tns"), wns=loaded.get("timing_wns"),
                power_calib=loaded.get("power_calib"), area=loaded.get("area"),
                layout={k: loaded[f"layout_{k}"] for k in timing_mod.LAYOUT_TARGETS if f"layout_{k}" in loaded})
        if "power_dynamic" in loaded and "power_static" in loaded:
            b.module_power = power_mod.ModulePowerModel(loaded["power_dynamic"], loaded["power_static"])
        if not any([b.path, b.tns, b.wns, b.module_power, b.power_calib, b.area, b.layout]):
            raise ModelFileError(f"no model files found in {directory}")
        return b


class AnalyticalDelayModel:
    """Stand-in path model that returns the accumulated analytical delay."""

    n_features = len(timing_mod.PATH_FEATURE_NAMES)

    def predict(self, X):
        return np.asarray(X, float)[:, timing_mod.PATH_FEATURE_NAMES.index("delay")]


def path_dataset(analyses: dict[str, DesignAnalysis], labels: dict[str, DesignLabels], t: TechConfig):
    return timing_mod.build_path_training_set({n: a.g for n, a in analyses.items()}, labels, t)


def raw_timing(a: DesignAnalysis, path_model, clock: float) -> timing_mod.TimingReport:
    return timing_mod.predict_design_timing(a.g, None, path_model, clock, features=a.path_features)


def train_path(analyses, labels, t, seed: int = 0, extra=None):
    ds = path_dataset(analyses, labels, t)
    if extra is not None:
        ds = ds.extend(extra)
    return timing_mod.train_path_model(ds.X, ds.y, seed), ds


def train_timing_calib(analyses, labels, path_model, seed: int = 0):
    names = sorted(analyses)
    require(labels, names, ["tns", "wns"])
    X = [raw_timing(analyses[n], path_model, labels[n].clock).calib_features(analyses[n].g) for n in names]
    return timing_mod.train_timing_calibration(X, [labels[n].tns for n in names],
                                               [labels[n].wns for n in names], seed)


def train_module_power(analyses, labels, seed: int = 0):
    feats = {n: (a.partitions, a.module_dyn, a.module_stat) for n, a in analyses.items()}
    s = power_mod.collect_module_samples(feats, labels)
    return power_mod.train_module_power(s.Xdyn, s.Xstat, s.y, s.y_dyn, s.y_stat, seed)


def raw_power(a: DesignAnalysis, model: power_mod.ModulePowerModel, t: TechConfig) -> power_mod.PowerReport:
    return power_mod.predict_design_power(a.g, a.activity, t, model, None,
                                          features=(a.partitions, a.module_dyn, a.module_stat))


def train_power_calib(analyses, labels, module_model, t, seed: int = 0):
    names = sorted(analyses)
    require(labels, names, ["power"])
    X = [power_mod.power_calib_features(raw_power(analyses[n], module_model, t).total_raw, analyses[n].g)
         for n in names]
    return power_mod.train_power_calibration(X, [labels[n].power for n in names], seed)


def train_area(analyses, labels, t, seed: int = 0):
    names = sorted(analyses)
    require(labels, names, ["area"])
    X = [analyses[n].area_features for n in names]
    y = [area_mod.comb_area_label(labels[n].area, labels[n].area_seq, labels[n].area_comb, analyses[n].g, t)
         for n in names]
    return area_mod.train_area_model(X, y, seed)


def train_all(analyses: dict[str, DesignAnalysis], labels: dict[str, DesignLabels], t: TechConfig,
              seed: int = 0, tasks=TASKS, layout: bool = True, extra_paths=None) -> ModelBundle:
    """Train every model the requested tasks need, in dependency order."""
    b = ModelBundle()
    if "tns" in tasks or "wns" in tasks:
        b.path, ds = train_path(analyses, labels, t, seed, extra_paths)
        b.summary["path_rows"] = len(ds)
        b.summary["path_skipped"] = ds.skipped
        b.summary["path_oob_r"] = b.path.oob_r
        b.tns, b.wns = train_timing_calib(analyses, labels, b.path, seed)
    if "power" in tasks:
        b.module_power = train_module_power(analyses, labels, seed)
        b.power_calib = train_power_calib(analyses, labels, b.module_power, t, seed)
    if "area" in tasks:
        b.area = train_area(analyses, labels, t, seed)
    if layout and all(k in tasks for k in TASKS):
        pl = {n: labels[n].placement for n in analyses if n in labels}
        if any(v for v in pl.values()):
            rows = {n: predict_design(analyses[n], b, t, labels[n].clock) for n in analyses}
            synth = {n: {k: r[k] for k in TASKS} for n, r in rows.items()}
            try:
                b.layout, excluded = timing_mod.train_layout_calibration(synth, pl, seed)
                b.summary["layout_excluded"] = excluded
            except (InsufficientDataError, LabelError) as e:
                log.warning("layout calibration skipped: %s", e)
    return b


def predict_design(a: DesignAnalysis, b: ModelBundle, t: TechConfig, clock: float,
                   layout: bool = False, tasks=TASKS) -> dict:
    """Unified report with raw and calibrated values side by side.

    Missing models are warned about only for quantities listed in ``tasks``.
    """
    want_timing = "tns" in tasks or "wns" in tasks
    out: dict = {"design": a.name, "clock": clock, "activity_source": a.activity.source,
                 "n_nodes": a.n_nodes, "n_reg": int(a.sog_counts[5])}
    if b.path is not None:
        rep = raw_timing(a, b.path, clock)
        out.update({k: v for k, v in rep.to_dict().items() if k not in ("tns", "wns", "clock")})
        if b.tns is not None and b.wns is not None:
            x = rep.calib_features(a.g)[None, :]
            out["tns"] = float(b.tns.predict(x)[0])
            out["wns"] = float(b.wns.predict(x)[0])
        elif want_timing:
            log.warning("timing calibration models missing; reporting raw timing only")
    elif want_timing:
        log.warning("path delay model missing; timing skipped")
    if b.module_power is not None:
        pr = power_mod.predict_design_power(a.g, a.activity, t, b.module_power, b.power_calib,
                                            features=(a.partitions, a.module_dyn, a.module_stat))
        out["power_raw"] = pr.total_raw
        if pr.total is not None:
            out["power"] = pr.total
        out["power_modules"] = pr.modules
    elif "power" in tasks:
        log.warning("module power models missing; power skipped")
    if b.area is not None:
        ar = area_mod.predict_area(a.g, t, b.area, a.area_features)
        out.update({"area": ar.total, "area_seq": ar.sequential, "area_comb": ar.comb,
                    "area_comb_analytical": ar.comb_analytical})
    elif "area" in tasks:
        log.warning("area model missing; area skipped")
    if layout:
        if not b.layout:
            log.warning("no layout model; reporting synthesis-level predictions only")
        elif all(out.get(k) is not None for k in TASKS):
            x = np.array([[out[k] for k in timing_mod.LAYOUT_TARGETS]])
            out["placement"] = {k: float(m.predict(x)[0]) for k, m in b.layout.items()}
    return out


# experiments ------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    names: dict[str, list[str]]
    truth: dict[str, np.ndarray]
    pred: dict[str, np.ndarray]
    raw: dict[str, np.ndarray]
    folds: list[dict] = field(default_factory=list)

    def metrics(self) -> dict[str, dict]:
        out = {}
        for task in self.truth:
            if len(self.truth[task]) >= 2:
                out[task] = all_metrics(self.truth[task], self.pred[task])
        return out

    def metric_rows(self) -> list[dict]:
        rows = []
        for task, m in self.metrics().items():
            rows.append({"task": task, **m})
        return rows


def _truth(l: DesignLabels, task: str):
    return getattr(l, task)


def _evaluate(train: list[str], test: list[str], analyses, labels, t, seed: int, tasks, result: ExperimentResult,
              fold: int, extra_paths=None) -> None:
    tr = {n: analyses[n] for n in train}
    b = train_all(tr, labels, t, seed, tasks, layout=False, extra_paths=extra_paths)
    for n in test:
        r = predict_design(analyses[n], b, t, labels[n].clock, tasks=tasks)
        for task in tasks:
            y = _truth(labels[n], task)
            if y is None or task not in r:
                continue
            result.names[task].append(n)
            result.truth[task] = np.append(result.truth[task], y)
            result.pred[task] = np.append(result.pred[task], r[task])
            raw_key = {"tns": "tns_raw", "wns": "wns_raw", "power": "power_raw", "area": "area"}[task]
            result.raw[task] = np.append(result.raw[task], r.get(raw_key, np.nan))
    result.folds.append({"fold": fold, "train": len(train), "test": len(test)})


def _empty_result(tasks) -> ExperimentResult:
    return ExperimentResult({k: [] for k in tasks}, {k: np.zeros(0) for k in tasks},
                            {k: np.zeros(0) for k in tasks}, {k: np.zeros(0) for k in tasks})


def cross_validate(analyses: dict[str, DesignAnalysis], labels: dict[str, DesignLabels], t: TechConfig,
                   k: int = 10, seed: int = 0, tasks=TASKS) -> ExperimentResult:
    """Design-grouped k-fold CV; metrics are computed over pooled test predictions."""
    res = _empty_result(tasks)
    for i, (train, test) in enumerate(kfold_splits(sorted(analyses), k, seed)):
        _evaluate(train, test, analyses, labels, t, seed, tasks, res, i)
    return res


def family_split(analyses, labels, t, train_filter: str, test_filter: str, seed: int = 0,
                 tasks=TASKS) -> ExperimentResult:
    tags = {n: labels[n].tags for n in analyses}
    sizes = {n: a.n_nodes for n, a in analyses.items()}
    train, test = split_by_family(tags, sizes, train_filter, test_filter)
    res = _empty_result(tasks)
    _evaluate(train, test, analyses, labels, t, seed, tasks, res, 0)
    return res


def augmentation_ablation(analyses, labels, t, gen_cfg, fractions=(1.0, 0.5, 0.25), n_generated: int = 50,
                          test_fraction: float = 0.25, seed: int = 0) -> list[dict]:
    """Path-model accuracy on held-out designs with and without generated training rows."""
    from .rtlgen import augment_path_dataset

    names = sorted(n for n in analyses if labels.get(n) is not None and labels[n].paths)
    rng = np.random.default_rng(seed)
    perm = [names[i] for i in rng.permutation(len(names))]
    n_test = max(1, int(round(test_fraction * len(names))))
    test, pool = perm[:n_test], perm[n_test:]
    test_ds = path_dataset({n: analyses[n] for n in test}, labels, t)
    generated = augment_path_dataset(timing_mod.empty_path_dataset(), n_generated, gen_cfg, t, seed)
    rows = []
    for frac in fractions:
        train = pool[:max(1, int(math.ceil(frac * len(pool))))]
        real = path_dataset({n: analyses[n] for n in train}, labels, t)
        for aug in (False, True):
            ds = real.extend(generated) if aug else real
            try:
                model = timing_mod.train_path_model(ds.X, ds.y, seed)
            except InsufficientDataError as e:
                rows.append({"fraction": frac, "augmented": aug, "train_designs": len(train),
                             "train_rows": len(ds), "error": str(e)})
                continue
            m = all_metrics(test_ds.y, model.predict(test_ds.X))
            rows.append({"fraction": frac, "augmented": aug, "train_designs": len(train),
                         "train_rows": len(ds), "generated_rows": int(ds.generated.sum()),
                         "test_rows": len(test_ds), **m})
    return rows
