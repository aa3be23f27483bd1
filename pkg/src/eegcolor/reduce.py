"""Reduction to ten features: wrapper forward selection and a stacked
autoencoder."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateClass, DimensionMismatch, InsufficientData,
                     NonFiniteLoss)
from .metrics import macro_f1
from .models import ModelSpec, derive_seed, fit, predict
from .validation import stratified_kfold

AE_FORMAT_VERSION = 1


@dataclass
class FeatureSubset:
    indices: list
    names: list
    trace: list = field(default_factory=list)

    def __len__(self):
        return len(self.indices)

    def to_text(self):
        lines = ["# eegcolor feature subset v1", "# rank\tindex\tname\tf1_after_step"]
        lines += [f"{r}\t{i}\t{n}\t{repr(float(t))}"
                  for r, (i, n, t) in enumerate(zip(self.indices, self.names, self.trace))]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        rows = [ln.split("\t") for ln in text.splitlines() if ln and not ln.startswith("#")]
        return cls([int(r[1]) for r in rows], [r[2] for r in rows],
                   [float(r[3]) for r in rows])


def cv_f1(X, y, spec, splits, n_classes, seed_parts=()):
    """Mean macro F1 of ``spec`` over the given (train, test) splits."""
    scores = []
    for fi, (tr, te) in enumerate(splits):
        model = fit(spec.with_seed(derive_seed(*seed_parts, fi)), X[tr], y[tr], n_classes)
        scores.append(macro_f1(y[te], predict(model, X[te]), n_classes))
    return float(np.mean(scores))


def forward_select(X, y, model_spec=None, k=10, folds=5, seed=0, names=None,
                   n_classes=None):
    """Greedy forward selection scored by cross-validated macro F1.

    Every step tries each unchosen column together with the chosen ones and
    keeps the best (lowest column index on ties). The folds are drawn once
    from ``seed``; all candidates of a step share the model seeds.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    n, p = X.shape
    if not 1 <= k <= p:
        raise ValueError(f"k must be in 1..{p}")
    if folds < 2:
        raise ValueError("folds must be at least 2")
    K = n_classes or int(y.max()) + 1
    counts = np.bincount(y, minlength=K)
    if np.any(counts < folds):
        raise InsufficientData(f"each class needs at least {folds} rows, got {counts.tolist()}")
    splits = stratified_kfold(y, folds, seed)
    for tr, te in splits:
        if np.any(np.bincount(y[tr], minlength=K) == 0):
            raise DegenerateClass("a class is absent from a training fold")
    spec = model_spec or ModelSpec("lr")
    names = list(names) if names is not None else [str(i) for i in range(p)]
    chosen, trace = [], []
    remaining = list(range(p))
    for step in range(k):
        best_score, best_col = -np.inf, None
        for col in remaining:
            score = cv_f1(X[:, chosen + [col]], y, spec, splits, K, (seed, step))
            if score > best_score:
                best_score, best_col = score, col
        chosen.append(best_col)
        remaining.remove(best_col)
        trace.append(best_score)
    return FeatureSubset(chosen, [names[i] for i in chosen], trace)


# --------------------------------------------------------------------------
# stacked autoencoder

@dataclass
class AutoencoderModel:
    """Layer sizes [d, h, latent, h, d]; tanh on every hidden layer, linear output."""

    layer_sizes: list
    weights: list
    biases: list
    activation: str = "tanh"
    config: dict = field(default_factory=dict)
    loss_curve: list = field(default_factory=list)
    final_mse: float = float("nan")

    @property
    def latent(self):
        return self.layer_sizes[len(self.layer_sizes) // 2]

    def params(self):
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def to_json(self):
        return json.dumps({
            "format": "eegcolor-autoencoder", "version": AE_FORMAT_VERSION,
            "layer_sizes": list(self.layer_sizes), "activation": self.activation,
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "config": self.config, "loss_curve": list(self.loss_curve),
            "final_mse": self.final_mse}, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("format") != "eegcolor-autoencoder" or d.get("version") != AE_FORMAT_VERSION:
            raise ValueError("not an eegcolor autoencoder document of a supported version")
        return cls(d["layer_sizes"], [np.asarray(w, dtype=float) for w in d["weights"]],
                   [np.asarray(b, dtype=float) for b in d["biases"]], d["activation"],
                   d["config"], d["loss_curve"], d["final_mse"])


def _ae_forward(params, X):
    acts = [X]
    n_layers = len(params) // 2
    for i in range(n_layers):
        z = acts[-1] @ params[2 * i] + params[2 * i + 1]
        acts.append(np.tanh(z) if i < n_layers - 1 else z)
    return acts


def ae_loss_grad(params, X):
    """Mean squared reconstruction error over all entries, with gradients."""
    acts = _ae_forward(params, X)
    diff = acts[-1] - X
    # overflow surfaces as a non-finite loss, which the trainer reports
    with np.errstate(over="ignore", invalid="ignore"):
        loss = float(np.mean(diff ** 2))
    delta = 2.0 * diff / diff.size
    grads = [None] * len(params)
    for i in range(len(params) // 2 - 1, -1, -1):
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = (delta @ params[2 * i].T) * (1.0 - acts[i] ** 2)
    return loss, grads


def _init_ae(sizes, rng):
    weights, biases = [], []
    for a, b in zip(sizes, sizes[1:]):
        bound = np.sqrt(3.0 / a)
        weights.append(rng.uniform(-bound, bound, (a, b)))
        biases.append(np.zeros(b))
    return weights, biases


def autoencoder_train(X, latent=10, hidden=32, epochs=200, lr=0.005, batch_size=32,
                      seed=0):
    """Train a stacked autoencoder on (z-scored) rows of ``X``.

    The first 90% of epochs run mini-batch Adam; the last 10% run
    full-batch gradient descent with Armijo backtracking, so the training
    loss never increases over that final stretch. The loss after every
    epoch is recorded in ``loss_curve``.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    if not 0 < latent < d:
        raise ValueError(f"latent width must be in 1..{d - 1}")
    rng = np.random.default_rng(seed)
    sizes = [d, hidden, latent, hidden, d]
    weights, biases = _init_ae(sizes, rng)
    params = []
    for W, b in zip(weights, biases):
        params += [W, b]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    n_adam = epochs - max(1, epochs // 10) if epochs > 1 else 0
    bs = min(batch_size, n)
    curve = []
    t = 0

    def check(loss):
        if not np.isfinite(loss):
            raise NonFiniteLoss("autoencoder loss diverged; lower the learning rate")

    loss0, _ = ae_loss_grad(params, X)
    check(loss0)
    for _ in range(n_adam):
        order = rng.permutation(n)
        for s in range(0, n, bs):
            idx = order[s:s + bs]
            _, grads = ae_loss_grad(params, X[idx])
            t += 1
            for i, g in enumerate(grads):
                m[i] = b1 * m[i] + (1 - b1) * g
                v[i] = b2 * v[i] + (1 - b2) * g * g
                params[i] = params[i] - lr * (m[i] / (1 - b1 ** t)) / (np.sqrt(v[i] / (1 - b2 ** t)) + eps)
        loss, _ = ae_loss_grad(params, X)
        check(loss)
        curve.append(loss)
    step = 1.0
    loss, grads = ae_loss_grad(params, X)
    for _ in range(epochs - n_adam):
        g2 = sum((g * g).sum() for g in grads)
        while True:
            trial = [p - step * g for p, g in zip(params, grads)]
            new_loss, new_grads = ae_loss_grad(trial, X)
            if new_loss <= loss - 0.5 * step * g2 or step < 1e-12:
                break
            step *= 0.5
        if new_loss <= loss:
            params, loss, grads = trial, new_loss, new_grads
        check(loss)
        curve.append(loss)
        step *= 2.0
    model = AutoencoderModel(sizes, params[0::2], params[1::2], "tanh",
                             {"epochs": epochs, "lr": lr, "batch_size": batch_size,
                              "seed": seed, "hidden": hidden, "latent": latent},
                             [loss0] + curve, loss)
    return model


def autoencoder_encode(model, X):
    """Forward pass through the encoder half (input -> latent)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.layer_sizes[0]:
        raise DimensionMismatch(
            f"autoencoder expects {model.layer_sizes[0]} columns, got {X.shape[-1]}")
    h = X
    for W, b in zip(model.weights[:len(model.weights) // 2], model.biases):
        h = np.tanh(h @ W + b)
    return h


def autoencoder_reconstruct(model, X):
    return _ae_forward(model.params(), np.asarray(X, dtype=float))[-1]
