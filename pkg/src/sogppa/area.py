"""Area: exact sequential area plus a learned combinational area model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .labels import require_min
from .mlcore import TrainConfig, fit_gbt
from .sog import COMB_KINDS, SogGraph, sog_feature_vector
from .tech import TechConfig

AREA_FEATURE_NAMES = ("comb_area_sum", "n_and2", "n_or2", "n_xor2", "n_not", "n_mux2", "n_reg")
# the register count is reported but not fed to the model, so adding
# registers changes only the sequential term
MODEL_COLUMNS = np.array([0, 1, 2, 3, 4, 5])
AREA_MODEL_CONFIG = TrainConfig(n_trees=45, max_depth=12)
MIN_AREA_DESIGNS = 20


@dataclass
class AreaReport:
    sequential: float
    comb: float
    total: float
    comb_analytical: float

    def to_dict(self) -> dict:
        return {"sequential": self.sequential, "comb": self.comb, "total": self.total,
                "comb_analytical": self.comb_analytical}


def sequential_area(g: SogGraph, t: TechConfig) -> float:
    return len(g.regs) * t.dff_area


def comb_area_features(g: SogGraph, t: TechConfig) -> np.ndarray:
    counts = sog_feature_vector(g).astype(float)
    areas = np.array([t.cells[k].area for k in COMB_KINDS])
    return np.concatenate([[float(np.dot(counts[:5], areas))], counts])


def comb_area_label(total: float, seq: float | None, comb: float | None, g: SogGraph, t: TechConfig) -> float:
    """Combinational target: the labeled split if present, else total minus computed sequential area."""
    if comb is not None:
        return comb
    return total - (seq if seq is not None else sequential_area(g, t))


def train_area_model(X, y, seed: int = 0, cfg: TrainConfig | None = None):
    X = np.asarray(X, float)
    require_min(len(X), MIN_AREA_DESIGNS)
    c = TrainConfig(**{**(cfg or AREA_MODEL_CONFIG).to_dict(), "seed": seed})
    return fit_gbt(X[:, MODEL_COLUMNS], y, c)


def predict_area(g: SogGraph, t: TechConfig, model, features: np.ndarray | None = None) -> AreaReport:
    f = comb_area_features(g, t) if features is None else features
    seq = sequential_area(g, t)
    comb = float(model.predict(f[MODEL_COLUMNS][None, :])[0])
    return AreaReport(seq, comb, seq + comb, float(f[0]))


__all__ = ["AreaReport", "comb_area_features", "comb_area_label", "predict_area", "sequential_area",
           "train_area_model"]
