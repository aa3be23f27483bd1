import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eegcolor import metrics
from eegcolor.errors import ClassMissing, EmptyInput, LengthMismatch, SingleClass


def test_accuracy_examples():
    assert metrics.accuracy([0, 1, 2], [0, 1, 2]) == 1.0
    assert metrics.accuracy([0, 1, 2], [1, 2, 0]) == 0.0
    assert metrics.accuracy([0, 1, 2, 0], [0, 1, 1, 0]) == 0.75
    with pytest.raises(LengthMismatch):
        metrics.accuracy([0, 1], [0])
    with pytest.raises(EmptyInput):
        metrics.accuracy([], [])


def test_binary_auc_examples():
    y = np.array([0, 0, 1, 1, 1])
    assert metrics.binary_auc([0.1, 0.2, 0.5, 0.7, 0.9], y) == 1.0
    assert metrics.binary_auc(np.ones(5), y) == 0.5
    with pytest.raises(SingleClass):
        metrics.binary_auc([0.1, 0.2], [1, 1])
    rng = np.random.default_rng(0)
    s, t = rng.random(1000), rng.random(1000) < 0.4
    assert abs(metrics.binary_auc(s, t) - metrics.binary_auc_rank(s, t)) < 1e-12


def test_roc_curve_endpoints():
    thr, fpr, tpr = metrics.roc_curve([0.9, 0.8, 0.8, 0.1], [1, 0, 1, 0])
    assert thr[0] == np.inf
    assert (fpr[0], tpr[0], fpr[-1], tpr[-1]) == (0.0, 0.0, 1.0, 1.0)
    assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)


def test_multiclass_auc_examples():
    y = np.array([0, 1, 2, 0, 1, 2])
    assert metrics.multiclass_auc(np.eye(3)[y], y) == 1.0
    assert metrics.multiclass_auc(np.full((6, 3), 0.3), y) == 0.5
    with pytest.raises(ClassMissing):
        metrics.multiclass_auc(np.eye(3)[[0, 0]], [0, 0])


def test_multiclass_auc_thirty_samples_enumeration():
    rng = np.random.default_rng(1)
    y = np.repeat([0, 1, 2], 10)
    S = rng.random((30, 3))
    directed = []
    for j in range(3):
        for k in range(3):
            if j == k:
                continue
            pos, neg = S[y == j, j], S[y == k, j]
            directed.append(np.mean([1.0 if a > b else 0.5 if a == b else 0.0
                                     for a in pos for b in neg]))
    assert abs(metrics.multiclass_auc(S, y) - np.mean(directed)) < 1e-12


def test_two_class_auc_is_mean_of_directed():
    rng = np.random.default_rng(2)
    y = rng.integers(0, 2, 40)
    S = rng.random((40, 2))
    ref = (metrics.binary_auc(S[:, 0], y == 0) + metrics.binary_auc(S[:, 1], y == 1)) / 2
    assert metrics.multiclass_auc(S, y) == pytest.approx(ref, abs=1e-15)


def test_mcc_examples():
    assert metrics.mcc(np.diag([2, 2, 2])) == 1.0
    assert metrics.mcc(np.array([[1, 1], [1, 1]])) == 0.0
    C = np.array([[5, 1, 0], [2, 4, 0], [0, 1, 5]])
    # independent triple-sum evaluation: 144 / sqrt(216 * 214)
    assert metrics.mcc(C) == pytest.approx(144 / math.sqrt(216 * 214), abs=1e-15)


def test_macro_f1():
    y, p = [0, 0, 1, 1, 2, 2], [0, 1, 1, 1, 2, 0]
    f = [2 * 1 / (2 + 2), 2 * 2 / (2 + 3), 2 * 1 / (2 + 1)]
    assert metrics.macro_f1(y, p, 3) == pytest.approx(np.mean(f), abs=1e-15)
    assert metrics.macro_f1([0, 1], [0, 1], 3) == pytest.approx(2 / 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from(["exp", "cube", "affine"]))
def test_auc_monotone_invariance(seed, kind):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=30)
    t = np.r_[True, False, rng.random(28) < 0.5]
    f = {"exp": np.exp, "cube": lambda v: v ** 3, "affine": lambda v: 3 * v - 2}[kind]
    assert metrics.binary_auc(f(s), t) == pytest.approx(metrics.binary_auc(s, t), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_mcc_relabel_invariance(seed):
    rng = np.random.default_rng(seed)
    C = rng.integers(0, 9, (3, 3))
    C[0, 0] += 1
    perm = rng.permutation(3)
    assert metrics.mcc(C[np.ix_(perm, perm)]) == pytest.approx(metrics.mcc(C), abs=1e-12)
