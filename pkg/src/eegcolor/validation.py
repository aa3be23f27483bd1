"""Cross-validation splitters."""

from __future__ import annotations

import numpy as np

from .errors import ClassTooSmall, SingleSubject


def stratified_kfold(y, k=5, seed=0):
    """Stratified k-fold split.

    Each class is shuffled with a seeded generator and dealt round-robin into
    the folds, with the starting fold rotating from class to class so fold
    sizes stay balanced. Returns a list of (train_idx, test_idx) pairs.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValueError("k must be at least 2")
    classes, counts = np.unique(y, return_counts=True)
    if np.any(counts < k):
        small = classes[counts < k][0]
        raise ClassTooSmall(f"class {small} has {counts[classes == small][0]} "
                            f"samples, fewer than {k} folds")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(y.size, dtype=int)
    offset = 0
    for c in classes:
        members = rng.permutation(np.flatnonzero(y == c))
        fold_of[members] = (offset + np.arange(members.size)) % k
        offset = (offset + members.size) % k
    idx = np.arange(y.size)
    return [(idx[fold_of != f], idx[fold_of == f]) for f in range(k)]


def group_kfold(groups):
    """One fold per distinct group value (e.g. per trial), in sorted order."""
    groups = np.asarray(groups)
    idx = np.arange(groups.size)
    return [(idx[groups != g], idx[groups == g]) for g in np.unique(groups)]


def loso_split(subject_ids):
    """Leave-one-subject-out: (training subjects, held-out subject) per subject."""
    subjects = sorted(set(subject_ids))
    if len(subjects) < 2:
        raise SingleSubject("leave-one-subject-out needs at least two subjects")
    return [([s for s in subjects if s != held], held) for held in subjects]


def loso_indices(subject_ids):
    """Row-index form of :func:`loso_split`."""
    subject_ids = np.asarray(subject_ids)
    idx = np.arange(subject_ids.size)
    return [(idx[subject_ids != held], idx[subject_ids == held])
            for _, held in loso_split(subject_ids.tolist())]
