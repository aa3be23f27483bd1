"""Six classifier families behind one fit/predict contract, plus grid search.

Class indices are fixed everywhere: Red=0, Green=1, Blue=2.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ClassMissing, DimensionMismatch
from ..metrics import accuracy
from ..validation import stratified_kfold
from .knn import KNN
from .linear import LogisticRegression
from .mlp import MLP
from .svm import SVM
from .trees import GradientBoosting, RandomForest

FAMILIES = {"knn": KNN, "lr": LogisticRegression, "rf": RandomForest,
            "mlp": MLP, "svm": SVM, "gb": GradientBoosting}
FAMILY_ORDER = ("knn", "svm", "lr", "rf", "mlp", "gb")
ALIASES = {"kneighbors": "knn", "logisticregression": "lr", "logistic": "lr",
           "randomforest": "rf", "neuralnetwork": "mlp", "nn": "mlp",
           "gradientboosting": "gb"}

DEFAULT_PARAMS = {
    "knn": {"k": 5},
    "lr": {"penalty": "l1", "C": 1.0},
    "rf": {"n_estimators": 100},
    "mlp": {"hidden": (300, 100), "alpha": 1e-4},
    "svm": {"C": 1.0, "gamma": None},
    "gb": {"n_estimators": 100, "learning_rate": 0.1, "max_depth": 3},
}

DEFAULT_GRID = {
    "knn": {"k": [4, 5, 6, 7, 8]},
    "lr": {"penalty": ["l1", "l2"], "C": [0.01, 0.1, 1.0, 10.0, 100.0]},
    "rf": {"n_estimators": list(range(10, 101, 10))},
    "mlp": {"hidden": [(300, 100)], "alpha": [1e-4]},
    "svm": {"C": [0.001, 0.01, 0.1, 1.0, 10.0, 100.0], "gamma": [0.01, 0.1, 1.0, 10.0]},
    "gb": {"n_estimators": list(range(10, 101, 10))},
}

MODEL_FORMAT_VERSION = 1


def canonical_family(name):
    key = str(name).lower().replace("_", "").replace("-", "").replace(" ", "")
    key = ALIASES.get(key, key)
    if key not in FAMILIES:
        raise ValueError(f"unknown model family {name!r}")
    return key


@dataclass(frozen=True)
class ModelSpec:
    family: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        fam = canonical_family(self.family)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "params", {**DEFAULT_PARAMS[fam], **dict(self.params)})

    def with_seed(self, seed):
        return replace(self, seed=int(seed))

    def build(self):
        return FAMILIES[self.family](**self.params, seed=self.seed)


@dataclass
class TrainedModel:
    spec: ModelSpec
    estimator: object
    n_classes: int
    n_features: int
    feature_names: tuple = ()
    normalization_id: str | None = None

    @property
    def family(self):
        return self.spec.family

    @property
    def classes(self):
        return list(range(self.n_classes))


def fit(spec, X, y, n_classes=None, feature_names=(), normalization_id=None):
    """Train ``spec`` on (X, y). Every class in ``range(n_classes)`` must occur."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise DimensionMismatch("X must be (n_samples, n_features) matching y")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains NaN or infinite values")
    K = n_classes or int(y.max()) + 1
    missing = sorted(set(range(K)) - set(np.unique(y).tolist()))
    if missing:
        raise ClassMissing(f"classes {missing} absent from training labels")
    est = spec.build().fit(X, y, K)
    return TrainedModel(spec, est, K, X.shape[1], tuple(feature_names), normalization_id)


def predict_scores(model, X):
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(
            f"model expects {model.n_features} features, got {X.shape[-1]}")
    return model.estimator.predict_scores(X)


def predict(model, X):
    """Argmax of the class scores (lowest class index on ties)."""
    return np.argmax(predict_scores(model, X), axis=1)


def expand_grid(grid):
    """Grid points in declared key order, last key varying fastest."""
    keys = list(grid)
    return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]


def grid_search(family, grid, X, y, folds=5, seed=0, n_classes=None):
    """Stratified k-fold mean accuracy for every grid point.

    Returns the best :class:`ModelSpec` (first point on ties) and the score
    table as a list of ``{"params", "mean_accuracy", "fold_accuracy"}``.
    """
    family = canonical_family(family)
    grid = DEFAULT_GRID[family] if grid in (None, "default") else grid
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    K = n_classes or int(y.max()) + 1
    splits = stratified_kfold(y, folds, seed)
    table = []
    for gi, params in enumerate(expand_grid(grid)):
        scores = []
        for fi, (tr, te) in enumerate(splits):
            spec = ModelSpec(family, params, derive_seed(seed, gi, fi))
            m = fit(spec, X[tr], y[tr], K)
            scores.append(accuracy(y[te], predict(m, X[te])))
        table.append({"params": params, "mean_accuracy": float(np.mean(scores)),
                      "fold_accuracy": scores})
    best = max(range(len(table)), key=lambda i: (table[i]["mean_accuracy"], -i))
    return ModelSpec(family, table[best]["params"], seed), table


def derive_seed(*parts):
    """Integer seed from a tuple of non-negative integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def model_to_json(model):
    doc = {"format": "eegcolor-model", "version": MODEL_FORMAT_VERSION,
           "family": model.family, "params": _jsonable(model.spec.params),
           "seed": model.spec.seed, "n_classes": model.n_classes,
           "n_features": model.n_features, "feature_names": list(model.feature_names),
           "normalization_id": model.normalization_id,
           "state": _jsonable(model.estimator.get_state())}
    return json.dumps(doc, sort_keys=True)


def model_from_json(text):
    doc = json.loads(text)
    if doc.get("format") != "eegcolor-model" or doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError("not an eegcolor model document of a supported version")
    params = doc["params"]
    if "hidden" in params:
        params["hidden"] = tuple(params["hidden"])
    spec = ModelSpec(doc["family"], params, doc["seed"])
    est = spec.build()
    est.set_state(doc["state"], doc["n_classes"])
    return TrainedModel(spec, est, doc["n_classes"], doc["n_features"],
                        tuple(doc["feature_names"]), doc["normalization_id"])


__all__ = ["FAMILIES", "FAMILY_ORDER", "DEFAULT_GRID", "DEFAULT_PARAMS", "ModelSpec",
           "TrainedModel", "fit", "predict", "predict_scores", "grid_search",
           "expand_grid", "derive_seed", "model_to_json", "model_from_json",
           "canonical_family"]
