"""Metrics, design-level data splits and report emission."""

from __future__ import annotations

import csv
import io
import json
import math
import os

import numpy as np

from .labels import DesignLabels, LabelError, load_labels  # noqa: F401  (re-exported)

MAPE_CAP = 100.0


def _pair(y, yhat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if len(y) != len(yhat):
        raise ValueError(f"length mismatch: {len(y)} truths vs {len(yhat)} predictions")
    if len(y) < 2:
        raise ValueError("metrics need at least 2 samples")
    return y, yhat


def metric_r(y, yhat) -> float:
    """Pearson correlation; NaN when either side has zero variance."""
    y, yhat = _pair(y, yhat)
    dy, dp = y - y.mean(), yhat - yhat.mean()
    den = math.sqrt(float(np.dot(dy, dy)) * float(np.dot(dp, dp)))
    if den == 0:
        return float("nan")
    return float(np.dot(dy, dp)) / den


def metric_mape(y, yhat) -> float:
    """Mean absolute percentage error with each term capped at 100%."""
    y, yhat = _pair(y, yhat)
    if np.any(y == 0):
        raise ValueError("MAPE is undefined for zero-valued truths")
    terms = np.minimum(np.abs(y - yhat) / np.abs(y) * 100.0, MAPE_CAP)
    return float(terms.mean())


def metric_rrse(y, yhat, bar: bool = False) -> float:
    """Root relative squared error.

    ``bar=True`` replaces each prediction in the numerator by the mean
    prediction (a literal reading of an alternative notation).
    """
    y, yhat = _pair(y, yhat)
    den = float(np.sum((y - y.mean()) ** 2))
    if den == 0:
        return float("nan")
    pred = np.full_like(yhat, yhat.mean()) if bar else yhat
    return math.sqrt(float(np.sum((y - pred) ** 2)) / den)


def all_metrics(y, yhat) -> dict:
    y, yhat = _pair(y, yhat)
    try:
        mape = metric_mape(y, yhat)
    except ValueError:
        mape = float("nan")
    return {"n": len(y), "r": metric_r(y, yhat), "mape": mape, "rrse": metric_rrse(y, yhat)}


# splits ------------------------------------------------------------------------

def kfold_splits(names, k: int = 10, seed: int = 0) -> list[tuple[list[str], list[str]]]:
    """Design-level folds: ``[(train, test), ...]`` covering every design once as test."""
    names = sorted(names)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(names) < k:
        raise ValueError(f"{len(names)} designs is fewer than k={k}")
    perm = np.random.default_rng(seed).permutation(len(names))
    folds = np.array_split(perm, k)
    out = []
    for f in folds:
        test = sorted(names[i] for i in f)
        ts = set(test)
        out.append(([n for n in names if n not in ts], test))
    return out


def _matches(name: str, tags: set[str], term: str, large: set[str]) -> bool:
    neg = term.startswith("!")
    term = term[1:] if neg else term
    if term.startswith("size:"):
        which = term[5:]
        if which not in ("large", "small"):
            raise ValueError(f"unknown size class {which!r}")
        hit = (name in large) == (which == "large")
    else:
        hit = term in tags
    return hit != neg


def select(tags: dict[str, list[str]], sizes: dict[str, int], expr: str) -> list[str]:
    """Designs matching every comma-separated term (``cpu``, ``!cpu``, ``size:large``).

    ``size:large`` is the top half by SOG node count (ties broken by name).
    """
    order = sorted(tags, key=lambda n: (sizes.get(n, 0), n))
    large = set(order[len(order) // 2:])
    terms = [t.strip() for t in expr.split(",") if t.strip()]
    if not terms:
        raise ValueError("empty filter")
    return [n for n in sorted(tags) if all(_matches(n, set(tags[n]), t, large) for t in terms)]


def split_by_family(tags: dict[str, list[str]], sizes: dict[str, int], train_filter: str,
                    test_filter: str) -> tuple[list[str], list[str]]:
    train = select(tags, sizes, train_filter)
    test = select(tags, sizes, test_filter)
    if not train:
        raise ValueError(f"train filter {train_filter!r} selects no designs")
    if not test:
        raise ValueError(f"test filter {test_filter!r} selects no designs")
    both = set(train) & set(test)
    if both:
        raise ValueError(f"filters overlap on {sorted(both)}")
    return train, test


def parse_split(spec: str) -> tuple[str, str]:
    """``family:cpu`` -> (``cpu``, ``!cpu``); ``A/B`` -> (A, B)."""
    if spec.startswith("family:"):
        f = spec[7:]
        return f, ("!" + f) if not f.startswith("!") else f[1:]
    if "/" in spec:
        a, b = spec.split("/", 1)
        return a, b
    raise ValueError(f"bad split spec {spec!r}")


# emission ------------------------------------------------------------------------

def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


def format_report(rows: list[dict], fmt: str = "csv", columns: list[str] | None = None) -> str:
    if columns is None:
        columns = []
        for r in rows:
            for c in r:
                if c not in columns:
                    columns.append(c)
    if fmt == "json":
        return json.dumps([{c: _jsonable(r.get(c)) for c in columns} for r in rows], indent=2) + "\n"
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c, "")) for c in columns])
    return buf.getvalue()


def _write(path, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        raise OSError(f"cannot write {path}: directory does not exist")
    with open(path, "w") as f:
        f.write(text)


def emit_report(rows: list[dict], path, fmt: str = "csv", columns: list[str] | None = None) -> None:
    _write(path, format_report(rows, fmt, columns))


def emit_scatter(names, y, yhat, path) -> None:
    rows = [{"design": n, "truth": float(a), "prediction": float(b)} for n, a, b in zip(names, y, yhat)]
    emit_report(rows, path, "csv", ["design", "truth", "prediction"])


def plot_scatter(y, yhat, path, title: str = "", unit: str = "") -> None:
    """Truth vs prediction scatter with the identity line, saved as PNG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    y, yhat = np.asarray(y, float), np.asarray(yhat, float)
    fig, ax = plt.subplots(figsize=(4, 4), dpi=100)
    ax.scatter(y, yhat, s=14, alpha=0.8)
    if len(y):
        lo, hi = float(min(y.min(), yhat.min())), float(max(y.max(), yhat.max()))
        ax.plot([lo, hi], [lo, hi], "k--", lw=0.8)
    ax.set_xlabel(f"truth {unit}".strip())
    ax.set_ylabel(f"prediction {unit}".strip())
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
