"""Classifiers, evaluation metrics and k-means clustering."""

from __future__ import annotations

import warnings
from typing import Mapping

from .data import Dataset, stratified_kfold, stratified_split
from .kmeans import ClusterLabel, Clustering, ElbowResult, elbow, kmeans, label_clusters
from .logistic import LogisticRegression
from .metrics import EvalReport, UndefinedF1, auc, confusion, evaluate
from .trees import DecisionTree, GradientBoostedTrees, RandomForest

KINDS = ("blr", "tree", "forest", "gbt")


class SingleClassTrain(UserWarning):
    """Training labels hold one class; the model predicts that class's rate."""


def make_classifier(kind: str, params: Mapping | None = None, seed: int = 0):
    params = dict(params or {})
    if kind == "blr":
        return LogisticRegression(**params)
    if kind == "tree":
        return DecisionTree(seed=seed, **params)
    if kind == "forest":
        return RandomForest(seed=seed, **params)
    if kind == "gbt":
        return GradientBoostedTrees(seed=seed, **params)
    raise ValueError(f"unknown classifier kind {kind!r}; expected one of {KINDS}")


def train(kind: str, data: Dataset, params: Mapping | None = None, seed: int = 0):
    """Fit a classifier of ``kind`` on the training rows of ``data``."""
    model = make_classifier(kind, params, seed)
    model.fit(data.X_train, data.y_train)
    if model.single_class:
        warnings.warn(SingleClassTrain(f"{kind}: training labels hold a single class"), stacklevel=2)
    return model


def importances(model):
    return model.importances()


__all__ = [
    "KINDS",
    "ClusterLabel",
    "Clustering",
    "Dataset",
    "DecisionTree",
    "ElbowResult",
    "EvalReport",
    "GradientBoostedTrees",
    "LogisticRegression",
    "RandomForest",
    "SingleClassTrain",
    "UndefinedF1",
    "auc",
    "confusion",
    "elbow",
    "evaluate",
    "importances",
    "kmeans",
    "label_clusters",
    "make_classifier",
    "stratified_kfold",
    "stratified_split",
    "train",
]
