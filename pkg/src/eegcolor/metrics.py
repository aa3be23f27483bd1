"""Classification metrics: accuracy, ROC/AUC (binary and pairwise
multiclass), multiclass MCC and macro F1."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import rankdata

from .errors import ClassMissing, EmptyInput, LengthMismatch, SingleClass


def _pair(y_true, y_pred):
    a, b = np.asarray(y_true), np.asarray(y_pred)
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(f"{a.shape[0]} labels vs {b.shape[0]} predictions")
    if a.shape[0] == 0:
        raise EmptyInput("no samples")
    return a, b


def accuracy(y_true, y_pred):
    a, b = _pair(y_true, y_pred)
    return float(np.mean(a == b))


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[i, k]``: samples of true class i predicted as k."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("confusion matrix must be square")
        if np.any(c < 0):
            raise ValueError("confusion counts must be non-negative")
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def K(self):
        return self.counts.shape[0]

    @property
    def true_counts(self):
        return self.counts.sum(axis=1)

    @property
    def predicted_counts(self):
        return self.counts.sum(axis=0)

    @property
    def correct(self):
        return int(np.trace(self.counts))

    @property
    def total(self):
        return int(self.counts.sum())


def confusion_matrix(y_true, y_pred, n_classes=None):
    a, b = _pair(y_true, y_pred)
    a, b = a.astype(int), b.astype(int)
    K = n_classes or int(max(a.max(), b.max())) + 1
    counts = np.bincount(a * K + b, minlength=K * K).reshape(K, K)
    return ConfusionMatrix(counts)


def mcc(cm):
    """Multiclass Matthews correlation from a confusion matrix.

    (c s - sum p_k t_k) / sqrt((s^2 - sum p_k^2)(s^2 - sum t_k^2)); 0 when
    either factor under the root vanishes.
    """
    if not isinstance(cm, ConfusionMatrix):
        cm = ConfusionMatrix(cm)
    t = cm.true_counts.astype(float)
    p = cm.predicted_counts.astype(float)
    c, s = float(cm.correct), float(cm.total)
    if s < 1:
        raise EmptyInput("empty confusion matrix")
    cov_pp = s * s - p @ p
    cov_tt = s * s - t @ t
    if cov_pp == 0 or cov_tt == 0:
        return 0.0
    return float((c * s - p @ t) / np.sqrt(cov_pp * cov_tt))


def mcc_score(y_true, y_pred, n_classes=None):
    return mcc(confusion_matrix(y_true, y_pred, n_classes))


def _binary_inputs(scores, y):
    s = np.asarray(scores, dtype=float)
    t = np.asarray(y).astype(bool)
    if s.shape != t.shape:
        raise LengthMismatch("scores and labels differ in length")
    n_pos = int(t.sum())
    if n_pos == 0 or n_pos == t.size:
        raise SingleClass("AUC needs both positive and negative samples")
    return s, t


def roc_curve(scores, y):
    """ROC points swept over every distinct threshold, highest first.

    Returns (thresholds, fpr, tpr) with a leading (inf, 0, 0) point.
    """
    s, t = _binary_inputs(scores, y)
    order = np.argsort(-s, kind="mergesort")
    s, t = s[order], t[order]
    last = np.r_[np.flatnonzero(np.diff(s)), s.size - 1]
    tp = np.cumsum(t)[last]
    fp = (last + 1) - tp
    tpr = np.r_[0.0, tp / t.sum()]
    fpr = np.r_[0.0, fp / (~t).sum()]
    return np.r_[np.inf, s[last]], fpr, tpr


def binary_auc(scores, y):
    """Trapezoidal area under the ROC curve (ties count as half)."""
    _, fpr, tpr = roc_curve(scores, y)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))


def binary_auc_rank(scores, y):
    """Mann-Whitney form of the AUC with mid-ranks for ties."""
    s, t = _binary_inputs(scores, y)
    ranks = rankdata(s)
    n_pos = t.sum()
    n_neg = t.size - n_pos
    return float((ranks[t].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def multiclass_auc(scores, y):
    """Pairwise multiclass AUC.

    For every unordered class pair {j, k}, restricted to samples of those
    two classes, AUC(j|k) ranks the class-j score column with j positive
    and AUC(k|j) the class-k column with k positive; the result is the
    mean of all 2 * C(c, 2) directed values.
    """
    S = np.asarray(scores, dtype=float)
    y = np.asarray(y).astype(int)
    if S.ndim != 2 or S.shape[0] != y.shape[0]:
        raise LengthMismatch("scores must be (samples, classes)")
    present = np.unique(y)
    if present.size < 2:
        raise ClassMissing("multiclass AUC needs at least two classes present")
    total = 0.0
    pairs = list(combinations(present, 2))
    for j, k in pairs:
        sel = (y == j) | (y == k)
        total += binary_auc(S[sel, j], y[sel] == j)
        total += binary_auc(S[sel, k], y[sel] == k)
    c = present.size
    return float(total / (c * (c - 1)))


def macro_f1(y_true, y_pred, n_classes=None):
    """Unweighted mean of per-class F1; a class never true nor predicted scores 0."""
    cm = confusion_matrix(y_true, y_pred, n_classes).counts.astype(float)
    tp = np.diag(cm)
    denom = cm.sum(axis=0) + cm.sum(axis=1)
    f1 = np.divide(2 * tp, denom, out=np.zeros_like(tp), where=denom > 0)
    return float(f1.mean())
