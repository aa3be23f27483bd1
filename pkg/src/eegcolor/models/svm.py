"""RBF-kernel SVM trained by SMO, one-vs-rest for multiclass."""

import numpy as np

from .knn import squared_distances
from .trees import softmax


def rbf_kernel(A, B, gamma):
    return np.exp(-gamma * squared_distances(A, B))


def smo(K, y, C, tol=1e-3, max_iter=None):
    """Solve the soft-margin dual for labels ``y`` in {-1, +1}.

    Working-set selection picks the maximal violating pair each iteration;
    the loop ends when the KKT gap ``max_{I_up} -y G - min_{I_low} -y G``
    drops below ``tol`` or after ``max_iter`` (default ``100 n + 10000``)
    updates. Returns (alpha, bias, gap).
    """
    n = y.size
    max_iter = max_iter or 100 * n + 10000
    alpha = np.zeros(n)
    G = -np.ones(n)
    pos = y > 0
    diag = np.diag(K)
    gap = np.inf
    for _ in range(max_iter):
        at_upper, at_lower = alpha >= C, alpha <= 0
        up = np.where(pos, ~at_upper, ~at_lower)
        low = np.where(pos, ~at_lower, ~at_upper)
        v = -y * G
        i = int(np.argmax(np.where(up, v, -np.inf)))
        j = int(np.argmin(np.where(low, v, np.inf)))
        gap = v[i] - v[j]
        if gap < tol:
            break
        a = max(diag[i] + diag[j] - 2 * K[i, j], 1e-12)
        delta = gap / a
        delta = min(delta, C - alpha[i] if y[i] > 0 else alpha[i])
        delta = min(delta, alpha[j] if y[j] > 0 else C - alpha[j])
        alpha[i] += y[i] * delta
        alpha[j] -= y[j] * delta
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        G += y * delta * (K[:, i] - K[:, j])
    v = -y * G
    free = (alpha > 0) & (alpha < C)
    if free.any():
        bias = float(v[free].mean())
    else:
        at_upper, at_lower = alpha >= C, alpha <= 0
        up = np.where(pos, ~at_upper, ~at_lower)
        low = np.where(pos, ~at_lower, ~at_upper)
        bias = float((v[up].max(initial=-np.inf) + v[low].min(initial=np.inf)) / 2)
        if not np.isfinite(bias):
            bias = 0.0
    return alpha, bias, float(gap)


class SVM:
    """One-vs-rest RBF SVMs; the class with the largest decision value wins.

    ``predict_scores`` returns the softmax of the decision values. ``gamma``
    defaults to 1 / n_features.
    """

    family = "svm"

    def __init__(self, C=1.0, gamma=None, tol=1e-3, max_iter=None, seed=0):
        self.C = float(C)
        self.gamma = None if gamma is None else float(gamma)
        self.tol = float(tol)
        self.max_iter = max_iter

    def fit(self, X, y, n_classes):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.intp)
        self.n_classes = n_classes
        self.gamma_ = self.gamma if self.gamma is not None else 1.0 / X.shape[1]
        K = rbf_kernel(X, X, self.gamma_)
        self.support, self.coef, self.bias, self.gaps = [], [], [], []
        for c in range(n_classes):
            yc = np.where(y == c, 1.0, -1.0)
            alpha, bias, gap = smo(K, yc, self.C, self.tol, self.max_iter)
            sv = alpha > 0
            self.support.append(X[sv])
            self.coef.append(alpha[sv] * yc[sv])
            self.bias.append(bias)
            self.gaps.append(gap)
        return self

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        out = np.empty((X.shape[0], self.n_classes))
        for c in range(self.n_classes):
            if self.coef[c].size:
                out[:, c] = rbf_kernel(X, self.support[c], self.gamma_) @ self.coef[c]
            else:
                out[:, c] = 0.0
            out[:, c] += self.bias[c]
        return out

    def predict_scores(self, X):
        return softmax(self.decision_function(X))

    def get_state(self):
        return {"gamma": self.gamma_, "support": [s.tolist() for s in self.support],
                "coef": [c.tolist() for c in self.coef], "bias": list(self.bias)}

    def set_state(self, state, n_classes):
        self.n_classes = n_classes
        self.gamma_ = state["gamma"]
        self.coef = [np.asarray(c, dtype=float) for c in state["coef"]]
        self.support = [np.asarray(s, dtype=float).reshape(len(c), -1)
                        for s, c in zip(state["support"], self.coef)]
        self.bias = list(state["bias"])
