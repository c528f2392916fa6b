"""From-scratch classifiers sharing one fit / predict / predict_proba contract."""

from __future__ import annotations

import json

from .base import Classifier, NotFittedError, softmax
from .forest import ForestModel, RandomForest, fit_forest
from .gbt import GbtModel, GradientBoostedTrees, fit_gbt, log_loss
from .knn import KNearestNeighbors, KnnModel, euclidean, knn_predict
from .naive_bayes import NaiveBayes, NaiveBayesModel, fit_naive_bayes
from .tree import DecisionTree, TreeArrays, best_split, fit_tree, gini

MODELS: dict[str, type[Classifier]] = {
    "tree": DecisionTree,
    "forest": RandomForest,
    "gbt": GradientBoostedTrees,
    "nb": NaiveBayes,
    "knn": KNearestNeighbors,
}


def make_model(kind: str, **params) -> Classifier:
    try:
        cls = MODELS[kind]
    except KeyError:
        raise ValueError(f"unknown model {kind!r}; choose from {sorted(MODELS)}") from None
    return cls(**params)


def model_from_dict(d: dict) -> Classifier:
    return MODELS[d["kind"]].from_dict(d)


def model_to_json(model: Classifier) -> str:
    return json.dumps(model.to_dict(), sort_keys=True)


def model_from_json(text: str) -> Classifier:
    return model_from_dict(json.loads(text))


__all__ = [
    "Classifier", "NotFittedError", "softmax", "DecisionTree", "TreeArrays", "RandomForest",
    "ForestModel", "GradientBoostedTrees", "GbtModel", "NaiveBayes", "NaiveBayesModel",
    "KNearestNeighbors", "KnnModel", "best_split", "gini", "fit_tree", "fit_forest", "fit_gbt",
    "fit_naive_bayes", "knn_predict", "euclidean", "log_loss", "MODELS", "make_model",
    "model_from_dict", "model_to_json", "model_from_json",
]
