"""Tree-ensemble regressors written on numpy."""

from .ensemble import BoostedModel, ForestModel, fit_forest, fit_gbt
from .persist import ModelFileError, dumps_model, load_model, loads_model, save_model
from .tree import DecisionTree, TrainConfig, best_split, fit_tree


def predict(model, X):
    return model.predict(X)


__all__ = [
    "BoostedModel", "DecisionTree", "ForestModel", "ModelFileError", "TrainConfig",
    "best_split", "dumps_model", "fit_forest", "fit_gbt", "fit_tree", "load_model",
    "loads_model", "predict", "save_model",
]
