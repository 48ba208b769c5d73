"""Classification metrics, cross-method tables and relative gain.

The positive class is deforestation (label 1) throughout.
"""

import math
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
from scipy.stats import rankdata


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise MetricError("confusion counts must be nonnegative")
        if self.total == 0:
            raise MetricError("empty confusion matrix")

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_labels(cls, truth, pred):
        t = np.asarray(truth).astype(bool)
        p = np.asarray(pred).astype(bool)
        if t.shape != p.shape:
            raise MetricError(f"truth {t.shape} and prediction {p.shape} differ in length")
        return cls(int((t & p).sum()), int((~t & p).sum()), int((~t & ~p).sum()), int((t & ~p).sum()))


def round_half_up(x: float, ndigits: int) -> float:
    """Decimal half-up rounding of the shortest repr of ``x``; -0.0 becomes 0.0."""
    q = Decimal(1).scaleb(-ndigits)
    r = float(Decimal(repr(float(x))).quantize(q, rounding=ROUND_HALF_UP))
    return r + 0.0


def balanced_accuracy(c: Confusion) -> float:
    """Mean of sensitivity and specificity, in percent."""
    if c.tp + c.fn == 0 or c.tn + c.fp == 0:
        raise MetricError("balanced accuracy undefined: a class is absent from the truth")
    return 100.0 * (c.tp / (c.tp + c.fn) + c.tn / (c.tn + c.fp)) / 2.0


def balanced_accuracy_labels(truth, pred) -> float:
    return balanced_accuracy(Confusion.from_labels(truth, pred))


def auc(truth, scores) -> float:
    """Area under the ROC curve by the rank statistic, ties sharing mid-ranks."""
    t = np.asarray(truth).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    n1 = int(t.sum())
    n0 = t.size - n1
    if n1 == 0 or n0 == 0:
        raise MetricError("AUC undefined: a class is absent from the truth")
    r = rankdata(s, method="average")
    return float((r[t].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def metric_suite(c: Confusion, truth=None, scores=None) -> dict:
    """Accuracy, precision, recall, F1, kappa, MCC (fractions) and AUC when
    ``scores`` are given (NaN otherwise)."""
    tp, fp, tn, fn = c.tp, c.fp, c.tn, c.fn
    n = c.total
    acc = (tp + tn) / n
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if tp + fp and prec + rec else 0.0
    pe = ((tp + fp) * (tp + fn) + (tn + fn) * (tn + fp)) / (n * n)
    kappa = (acc - pe) / (1 - pe) if pe < 1 else 0.0
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = (tp * tn - fp * fn) / math.sqrt(den) if den else 0.0
    out = {"accuracy": acc, "precision": prec, "recall": rec, "f1": f1,
           "kappa": kappa, "mcc": mcc, "auc": float("nan")}
    if scores is not None:
        out["auc"] = auc(truth, scores)
    return {k: v + 0.0 for k, v in out.items()}


def mean_std(values):
    """Mean and sample (n-1) standard deviation; std is 0 for a single value."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise MetricError("no values")
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return float(v.mean()), sd


@dataclass
class CrossMethodTable:
    """Balanced accuracy (%) of column models on row test sets."""

    rows: list
    cols: list
    cells: np.ndarray

    @property
    def mean(self):
        return np.array([mean_std(self.cells[:, j])[0] for j in range(len(self.cols))])

    @property
    def std(self):
        return np.array([mean_std(self.cells[:, j])[1] for j in range(len(self.cols))])


def cross_method_table(models: dict, testsets: dict, predict) -> CrossMethodTable:
    """Evaluate every column model on every row test set.

    ``models`` maps a column name to a model, ``testsets`` maps a row name to
    ``(features, truth)`` and ``predict(model, features)`` returns labels.
    """
    rows = list(testsets)
    cols = list(models)
    cells = np.zeros((len(rows), len(cols)))
    for i, r in enumerate(rows):
        X, y = testsets[r]
        for j, c in enumerate(cols):
            cells[i, j] = balanced_accuracy_labels(y, predict(models[c], X))
    return CrossMethodTable(rows, cols, cells)


def relative_gain(ensemble_acc: float, best_single_acc: float) -> float:
    """``100 (ensemble - best) / best``, half-up rounded to one decimal."""
    if not best_single_acc > 0:
        raise MetricError("relative gain needs a positive baseline")
    return round_half_up(100.0 * (ensemble_acc - best_single_acc) / best_single_acc, 1)
