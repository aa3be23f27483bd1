"""Fixtures shared by several test modules."""

import numpy as np

PATTERN = np.array([[-1, 0, 1], [0, 1, -1], [1, -1, 0]]).T


def informative_fixture(seed, n_per_class=100, shift=0.75):
    """86 N(0, 1) columns; 10 of them carry class mean shifts, placed at random."""
    rng = np.random.default_rng(seed)
    y = np.repeat(np.arange(3), n_per_class)
    X = rng.normal(size=(y.size, 86))
    for j in range(10):
        X[:, j] += PATTERN[y, j % 3] * shift
    perm = rng.permutation(86)
    X = X[:, perm]
    informative = set(np.flatnonzero(perm < 10).tolist())
    return X, y, informative
