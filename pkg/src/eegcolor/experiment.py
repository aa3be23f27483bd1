"""Cross-validation harness: windows x feature sets x regimes x families.

The unit of work is one (window, regime, split) job. Inside a job the
training rows are z-scored (statistics from the training rows only), the
feature-set transform is fitted on the training rows, and every requested
family is trained and scored on the held-out rows. Seeds are derived from
the master seed and the *canonical* position of each axis value, so a cell
gets the same numbers whatever else the config asks for, and serial and
parallel runs agree bit for bit.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
import multiprocessing

import numpy as np

from .errors import EEGColorError
from .features import (PAPER_WINDOWS_MS, DEFAULT_N_CYCLES, FeatureMatrix, WindowConfig,
                       ZScore, assemble, epoch_band_series)
from .ingest import (StimulusProtocol, detect_start_marker, epoch_trials,
                     generate_synthetic_recording, make_schedule)
from .metrics import accuracy, mcc_score, multiclass_auc
from .models import (DEFAULT_GRID, FAMILY_ORDER, ModelSpec, canonical_family,
                     derive_seed, fit, grid_search, predict_scores)
from .reduce import autoencoder_encode, autoencoder_train, forward_select
from .validation import group_kfold, loso_indices, stratified_kfold

log = logging.getLogger(__name__)

FEATURE_SETS = ("all", "forward10", "ae10")
REGIMES = ("intra", "inter")
METRICS = ("accuracy", "auc", "mcc")
N_CLASSES = 3


class ExperimentError(EEGColorError):
    """Some jobs failed; ``manifest`` points at the failure manifest (if written)."""

    def __init__(self, message, failures, manifest=None):
        super().__init__(message)
        self.failures = failures
        self.manifest = manifest


@dataclass
class ExperimentConfig:
    windows: tuple = PAPER_WINDOWS_MS
    feature_sets: tuple = FEATURE_SETS
    families: tuple = FAMILY_ORDER
    regimes: tuple = REGIMES
    folds: int = 5
    seed: int = 0
    selection_wrapper: str = "same"
    selection_k: int = 10
    selection_folds: int = 5
    group_by_trial: bool = False
    tune: bool = False
    model_params: dict = field(default_factory=dict)
    ae_params: dict = field(default_factory=dict)
    jobs: int = 1
    table_window: int = 200

    def __post_init__(self):
        self.windows = tuple(int(w) for w in self.windows)
        for w in self.windows:
            if w not in PAPER_WINDOWS_MS:
                raise ValueError(f"window {w} ms not in {PAPER_WINDOWS_MS}")
        self.feature_sets = tuple(self.feature_sets)
        for f in self.feature_sets:
            if f not in FEATURE_SETS:
                raise ValueError(f"unknown feature set {f!r}")
        self.families = tuple(canonical_family(f) for f in self.families)
        self.regimes = tuple(self.regimes)
        for r in self.regimes:
            if r not in REGIMES:
                raise ValueError(f"unknown regime {r!r}")
        if self.selection_wrapper != "same":
            self.selection_wrapper = canonical_family(self.selection_wrapper)
        self.model_params = {canonical_family(k): dict(v) for k, v in self.model_params.items()}
        if not (self.windows and self.feature_sets and self.families and self.regimes):
            raise ValueError("every experiment axis needs at least one value")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")

    def to_dict(self):
        d = asdict(self)
        d["windows"] = list(self.windows)
        return d

    def spec(self, family, seed):
        return ModelSpec(family, self.model_params.get(family, {}), seed)


# --------------------------------------------------------------------------
# data

def synthetic_epochs(n_subjects=8, n_trials=1, repetitions=20, seed=0,
                     class_band_gains=None, noise_sigma=5.0):
    """Epochs of a synthetic cohort: one recording per (subject, trial).

    Subject ids are ``s01, s02, ...`` and trial ids ``t1, t2, ...``.
    """
    protocol = StimulusProtocol.with_repetitions(repetitions)
    out = []
    for s in range(n_subjects):
        for t in range(n_trials):
            sched = make_schedule(protocol, derive_seed(seed, 0, s, t))
            rec, _ = generate_synthetic_recording(derive_seed(seed, 1, s, t), sched,
                                                  class_band_gains, noise_sigma)
            out += epoch_trials(rec, sched, detect_start_marker(rec),
                                f"s{s + 1:02d}", f"t{t + 1}")
    return out


def build_feature_matrices(epochs, windows=PAPER_WINDOWS_MS, artifact_threshold="auto",
                           n_cycles=DEFAULT_N_CYCLES):
    """Raw (not normalized) feature matrix per window; the wavelet step runs
    once per epoch."""
    series = [epoch_band_series(ep, artifact_threshold, n_cycles) for ep in epochs]
    return {int(w): assemble(epochs, WindowConfig(w), band_series=series)
            for w in windows}


# --------------------------------------------------------------------------
# splits and jobs

def regime_splits(fm, regime, config):
    """List of (group id, fold index, train rows, test rows)."""
    subjects = np.asarray(fm.subjects).astype(str)
    if regime == "inter":
        return [(str(subjects[te[0]]), 0, tr, te) for tr, te in loso_indices(subjects)]
    out = []
    for si, subj in enumerate(sorted(set(subjects.tolist()))):
        rows = np.flatnonzero(subjects == subj)
        if config.group_by_trial:
            folds = group_kfold(np.asarray(fm.trials).astype(str)[rows])
        else:
            folds = stratified_kfold(fm.labels[rows], config.folds,
                                     derive_seed(config.seed, 1, si))
        out += [(subj, fi, rows[tr], rows[te]) for fi, (tr, te) in enumerate(folds)]
    return out


@dataclass
class FoldResult:
    window: int
    feature_set: str
    regime: str
    family: str
    group: str
    fold: int
    accuracy: float
    auc: float
    mcc: float
    y_true: np.ndarray
    scores: np.ndarray
    selected: tuple = ()


def _ids(config, window, regime, fset=None, family=None):
    ids = [PAPER_WINDOWS_MS.index(window), REGIMES.index(regime)]
    if fset is not None:
        ids.append(FEATURE_SETS.index(fset))
    if family is not None:
        ids.append(FAMILY_ORDER.index(family))
    return ids


def _fit_family(config, family, Xtr, ytr, seed):
    if config.tune:
        spec, _ = grid_search(family, DEFAULT_GRID[family], Xtr, ytr, config.selection_folds,
                              seed, N_CLASSES)
        spec = spec.with_seed(seed)
    else:
        spec = config.spec(family, seed)
    return fit(spec, Xtr, ytr, N_CLASSES)


def run_job(config, fm, window, regime, split_id, split):
    """All feature sets and families for one train/test split."""
    group, fold, tr, te = split
    z = ZScore().fit(fm.X[tr])
    Xtr, Xte = z.transform(fm.X[tr]), z.transform(fm.X[te])
    ytr, yte = fm.labels[tr], fm.labels[te]
    base = _ids(config, window, regime) + [split_id]
    results = []
    shared_subset = None
    for fset in config.feature_sets:
        fs_seed = base + [FEATURE_SETS.index(fset)]
        if fset == "ae10":
            ae = autoencoder_train(Xtr, latent=config.selection_k,
                                   seed=derive_seed(config.seed, 3, *fs_seed),
                                   **config.ae_params)
            Ftr, Fte = autoencoder_encode(ae, Xtr), autoencoder_encode(ae, Xte)
        for family in config.families:
            selected = ()
            if fset == "all":
                Ftr, Fte = Xtr, Xte
            elif fset == "forward10":
                wrapper = family if config.selection_wrapper == "same" else config.selection_wrapper
                if config.selection_wrapper == "same" or shared_subset is None:
                    sel_seed = derive_seed(config.seed, 2, *fs_seed, FAMILY_ORDER.index(wrapper))
                    subset = forward_select(Xtr, ytr, config.spec(wrapper, sel_seed),
                                            config.selection_k, config.selection_folds,
                                            sel_seed, fm.names, N_CLASSES)
                    if config.selection_wrapper != "same":
                        shared_subset = subset
                else:
                    subset = shared_subset
                selected = tuple(subset.names)
                Ftr, Fte = Xtr[:, subset.indices], Xte[:, subset.indices]
            seed = derive_seed(config.seed, 4, *fs_seed, FAMILY_ORDER.index(family))
            model = _fit_family(config, family, Ftr, ytr, seed)
            S = predict_scores(model, Fte)
            pred = np.argmax(S, axis=1)
            try:
                auc = multiclass_auc(S, yte)
            except EEGColorError:
                auc = float("nan")
            results.append(FoldResult(window, fset, regime, family, group, fold,
                                      accuracy(yte, pred), auc,
                                      mcc_score(yte, pred, N_CLASSES), yte, S, selected))
    return results


@dataclass
class JobFailure:
    window: int
    regime: str
    group: str
    fold: int
    error: str
    message: str


_WORKER = {}


def _init_worker(config, matrices):
    _WORKER["config"] = config
    _WORKER["matrices"] = matrices


def _job_entry(key):
    window, regime, split_id, split = key
    config, fm = _WORKER["config"], _WORKER["matrices"][window]
    try:
        return run_job(config, fm, window, regime, split_id, split)
    except Exception as exc:  # reported through the failure manifest
        return JobFailure(window, regime, split[0], split[1], type(exc).__name__, str(exc))


# --------------------------------------------------------------------------
# aggregation

@dataclass
class CVReport:
    """Per-group fold values of the three metrics for one cell."""

    window: int
    feature_set: str
    regime: str
    family: str
    groups: tuple
    values: dict          # metric -> list (per group) of fold value lists

    @property
    def n_folds(self):
        return sum(len(v) for v in self.values["accuracy"])

    def group_means(self, metric):
        return np.array([np.mean(v) for v in self.values[metric]])

    def average(self, metric):
        """Mean and population std over group means (subjects or held-out subjects)."""
        m = self.group_means(metric)
        return float(np.mean(m)), float(np.std(m))

    def best(self, metric):
        """Group with the highest mean for ``metric``: (group, mean, fold std)."""
        m = self.group_means(metric)
        i = int(np.nanargmax(m)) if np.any(np.isfinite(m)) else 0
        return self.groups[i], float(m[i]), float(np.std(self.values[metric][i]))

    def rows(self, metric):
        """Table rows as (label, mean, std)."""
        if self.regime == "intra":
            mean, std = self.average(metric)
            _, bmean, bstd = self.best(metric)
            return [("Avg Subject", mean, std), ("Best Subject", bmean, bstd)]
        mean, std = self.average(metric)
        return [("Inter-subject", mean, std)]


def cell_key(window, fset, regime, family):
    return (PAPER_WINDOWS_MS.index(window), FEATURE_SETS.index(fset),
            REGIMES.index(regime), FAMILY_ORDER.index(family))


def aggregate(fold_results):
    """Group fold results into CVReports in canonical cell order."""
    cells = {}
    for r in fold_results:
        key = (r.window, r.feature_set, r.regime, r.family)
        cells.setdefault(key, {}).setdefault(r.group, []).append(r)
    reports = []
    for key in sorted(cells, key=lambda k: cell_key(*k)):
        by_group = cells[key]
        groups = tuple(sorted(by_group))
        values = {m: [[getattr(r, m) for r in sorted(by_group[g], key=lambda r: r.fold)]
                      for g in groups] for m in METRICS}
        reports.append(CVReport(*key, groups, values))
    return reports


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    reports: list
    folds: list
    failures: list = field(default_factory=list)
    dataset: dict = field(default_factory=dict)

    def report(self, window, fset, regime, family):
        for r in self.reports:
            if (r.window, r.feature_set, r.regime, r.family) == (window, fset, regime, family):
                return r
        raise KeyError((window, fset, regime, family))


def dataset_summary(matrices):
    out = {}
    for w, fm in sorted(matrices.items()):
        out[str(w)] = {"rows": len(fm), "subjects": sorted(set(map(str, fm.subjects))),
                       "class_counts": np.bincount(fm.labels, minlength=N_CLASSES).tolist(),
                       "dropped_windows": int(fm.dropped)}
    return out


def run_experiment(config, matrices, out_dir=None):
    """Evaluate every (window, feature set, regime, family) cell.

    ``matrices`` maps window length (ms) to a raw :class:`FeatureMatrix`.
    With ``out_dir`` the report files are written there (see
    :mod:`eegcolor.report`). When jobs fail, the finished cells are still
    written, a ``failure_manifest.json`` is added and
    :class:`ExperimentError` is raised.
    """
    missing = [w for w in config.windows if w not in matrices]
    if missing:
        raise ValueError(f"no feature matrix for window(s) {missing}")
    keys = []
    for window in config.windows:
        fm = matrices[window]
        for regime in config.regimes:
            for sid, split in enumerate(regime_splits(fm, regime, config)):
                keys.append((window, regime, sid, split))
    needed = {w: matrices[w] for w in config.windows}
    if config.jobs > 1 and len(keys) > 1:
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(config.jobs, mp_context=ctx, initializer=_init_worker,
                                 initargs=(config, needed)) as pool:
            outcomes = list(pool.map(_job_entry, keys))
    else:
        _init_worker(config, needed)
        outcomes = [_job_entry(k) for k in keys]
    folds, failures = [], []
    for o in outcomes:
        if isinstance(o, JobFailure):
            failures.append(o)
        else:
            folds += o
    result = ExperimentResult(config, aggregate(folds), folds, failures,
                              dataset_summary(needed))
    manifest = None
    if out_dir is not None:
        from .report import render_report
        os.makedirs(out_dir, exist_ok=True)
        if result.reports:
            render_report(result, out_dir)
        if failures:
            manifest = os.path.join(out_dir, "failure_manifest.json")
            write_failure_manifest(manifest, config, failures)
    if failures:
        raise ExperimentError(f"{len(failures)} of {len(keys)} jobs failed "
                              f"(first: {failures[0].error}: {failures[0].message})",
                              failures, manifest)
    return result


def write_failure_manifest(path, config, failures, extra=None):
    doc = {"config": config.to_dict() if config is not None else None,
           "failures": [asdict(f) if not isinstance(f, dict) else f for f in failures]}
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
    return path


# --------------------------------------------------------------------------
# persistence (so ``report`` can re-render without recomputation)

RESULT_FORMAT_VERSION = 1


def result_to_json(result):
    folds = [{"window": f.window, "feature_set": f.feature_set, "regime": f.regime,
              "family": f.family, "group": f.group, "fold": f.fold,
              "accuracy": f.accuracy, "auc": f.auc, "mcc": f.mcc,
              "y_true": f.y_true.tolist(), "scores": f.scores.tolist(),
              "selected": list(f.selected)} for f in result.folds]
    return json.dumps({"format": "eegcolor-results", "version": RESULT_FORMAT_VERSION,
                       "config": result.config.to_dict(), "folds": folds,
                       "failures": [asdict(f) for f in result.failures],
                       "dataset": result.dataset}, sort_keys=True)


def result_from_json(text):
    doc = json.loads(text)
    if doc.get("format") != "eegcolor-results" or doc.get("version") != RESULT_FORMAT_VERSION:
        raise ValueError("not an eegcolor results document of a supported version")
    config = ExperimentConfig(**doc["config"])
    folds = [FoldResult(f["window"], f["feature_set"], f["regime"], f["family"], f["group"],
                        f["fold"], f["accuracy"], f["auc"], f["mcc"],
                        np.asarray(f["y_true"], dtype=int),
                        np.asarray(f["scores"], dtype=float).reshape(len(f["y_true"]), -1),
                        tuple(f["selected"])) for f in doc["folds"]]
    failures = [JobFailure(**f) for f in doc["failures"]]
    return ExperimentResult(config, aggregate(folds), folds, failures, doc["dataset"])
