"""Multinomial logistic regression by proximal gradient descent."""

import numpy as np

from ..errors import SingularData
from .trees import softmax


def lr_smooth_loss_grad(W, b, X, Y, lam, penalty):
    """Mean cross-entropy plus the L2 term (if any) and its gradient.

    The L1 term is not smooth and is handled by the proximal step.
    """
    n = X.shape[0]
    Z = X @ W + b
    Zs = Z - Z.max(axis=1, keepdims=True)
    logp = Zs - np.log(np.exp(Zs).sum(axis=1, keepdims=True))
    loss = -(Y * logp).sum() / n
    G = (np.exp(logp) - Y) / n
    gW = X.T @ G
    gb = G.sum(axis=0)
    if penalty == "l2":
        loss += 0.5 * lam * (W * W).sum()
        gW = gW + lam * W
    return loss, gW, gb


def soft_threshold(W, t):
    return np.sign(W) * np.maximum(np.abs(W) - t, 0.0)


class LogisticRegression:
    """Softmax regression with an L1 or L2 penalty on the weights.

    The objective is ``mean cross-entropy + penalty / (C n)`` where the
    penalty is ``||W||_1`` or ``0.5 ||W||^2``; the intercept is not
    penalized. Full-batch gradient steps with backtracking line search; L1
    uses soft-thresholding (proximal gradient). Deterministic.
    """

    family = "lr"

    def __init__(self, penalty="l1", C=1.0, max_iter=500, tol=1e-6, seed=0):
        self.penalty = str(penalty).lower()
        if self.penalty not in ("l1", "l2"):
            raise ValueError(f"unknown penalty {penalty!r}")
        self.C = float(C)
        self.max_iter = int(max_iter)
        self.tol = float(tol)

    def fit(self, X, y, n_classes):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.intp)
        n, p = X.shape
        self.n_classes = n_classes
        Y = np.eye(n_classes)[y]
        lam = 1.0 / (self.C * n)
        l1 = lam if self.penalty == "l1" else 0.0
        W = np.zeros((p, n_classes))
        b = np.log(np.clip(Y.mean(axis=0), 1e-12, None))
        b -= b.mean()
        step = 1.0
        loss, gW, gb = lr_smooth_loss_grad(W, b, X, Y, lam, self.penalty)
        for _ in range(self.max_iter):
            while True:
                W_new = soft_threshold(W - step * gW, step * l1) if l1 else W - step * gW
                b_new = b - step * gb
                new_loss, ngW, ngb = lr_smooth_loss_grad(W_new, b_new, X, Y, lam, self.penalty)
                dW, db = W_new - W, b_new - b
                bound = (loss + (gW * dW).sum() + (gb * db).sum()
                         + ((dW * dW).sum() + (db * db).sum()) / (2 * step))
                if new_loss <= bound + 1e-12 or step < 1e-12:
                    break
                step *= 0.5
            if not np.isfinite(new_loss):
                raise SingularData("logistic regression diverged")
            change = np.sqrt((dW * dW).sum() + (db * db).sum())
            W, b, loss, gW, gb = W_new, b_new, new_loss, ngW, ngb
            if change <= self.tol * max(1.0, np.sqrt((W * W).sum() + (b * b).sum())):
                break
            step *= 1.5
        self.W, self.b = W, b
        return self

    def predict_scores(self, X):
        return softmax(np.asarray(X, dtype=float) @ self.W + self.b)

    def get_state(self):
        return {"W": self.W.tolist(), "b": self.b.tolist()}

    def set_state(self, state, n_classes):
        self.n_classes = n_classes
        self.W = np.asarray(state["W"], dtype=float).reshape(-1, n_classes)
        self.b = np.asarray(state["b"], dtype=float)
