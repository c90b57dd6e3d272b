"""Classifier evaluation: accuracy, F1 of the win class, rank-statistic AUC."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..analytics.stats import midranks


class UndefinedF1(UserWarning):
    """No positive predictions and no positive labels; F1 reported as 1."""


@dataclass(frozen=True, eq=False)
class EvalReport:
    accuracy: float
    f1: float
    auc: float
    confusion: np.ndarray  # [[TN, FP], [FN, TP]]
    importances: np.ndarray
    f1_undefined: bool = False
    flags: tuple[str, ...] = field(default=())

    @property
    def tp(self) -> int:
        return int(self.confusion[1, 1])

    @property
    def fp(self) -> int:
        return int(self.confusion[0, 1])

    @property
    def fn(self) -> int:
        return int(self.confusion[1, 0])

    @property
    def tn(self) -> int:
        return int(self.confusion[0, 0])


def confusion(y_true, y_pred) -> np.ndarray:
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    return np.array(
        [
            [np.sum(~y_true & ~y_pred), np.sum(~y_true & y_pred)],
            [np.sum(y_true & ~y_pred), np.sum(y_true & y_pred)],
        ],
        dtype=int,
    )


def f1_from_confusion(cm: np.ndarray) -> tuple[float, bool]:
    """Returns (F1, undefined) where undefined marks the 0/0 case."""
    tp, fp, fn = cm[1, 1], cm[0, 1], cm[1, 0]
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 1.0, True
    return float(2 * tp / denom), False


def auc(y_true, scores) -> float:
    """Mann-Whitney statistic with midranks; 0.5 when a class is absent."""
    y = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=float)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return 0.5
    r = midranks(s)
    return float((r[y].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def evaluate(model, data, threshold: float = 0.5) -> EvalReport:
    if data.test.size == 0:
        raise ValueError("test split is empty")
    y = data.y_test.astype(bool)
    prob = model.predict_proba(data.X_test)
    cm = confusion(y, prob >= threshold)
    f1, undefined = f1_from_confusion(cm)
    flags = []
    if undefined:
        flags.append("undefined_f1")
    if getattr(model, "single_class", False):
        flags.append("single_class_train")
    return EvalReport(
        accuracy=float(np.trace(cm) / cm.sum()),
        f1=f1,
        auc=auc(y, prob),
        confusion=cm,
        importances=model.importances(),
        f1_undefined=undefined,
        flags=tuple(flags),
    )
