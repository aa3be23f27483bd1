"""Report files for an experiment: per-metric tables, long-form cells,
window sweeps, ROC curves, a text summary and a manifest.

Everything written here is a pure function of the experiment result, so
two runs with the same config and data produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import os
import platform

import numpy as np
import scipy

from . import __version__
from .errors import EmptyReport
from .ingest import COLORS
from .metrics import roc_curve
from .models import FAMILY_ORDER

METRIC_TITLES = {"accuracy": "accuracy", "auc": "ROC-AUC", "mcc": "MCC"}
ROW_ORDER = ("Avg Subject", "Best Subject", "Inter-subject")


def format_cell(mean, std):
    """``0.625 (0.018)``: three decimals, std in parentheses."""
    if not np.isfinite(mean):
        return "nan"
    return f"{mean:.3f} ({std:.3f})"


def _writer(path):
    fh = open(path, "w", encoding="utf-8", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def table_rows(reports, metric, window, fset):
    """``{row label: {family: (mean, std)}}`` for one table."""
    rows = {}
    for r in reports:
        if r.window != window or r.feature_set != fset:
            continue
        for label, mean, std in r.rows(metric):
            rows.setdefault(label, {})[r.family] = (mean, std)
    return {k: rows[k] for k in ROW_ORDER if k in rows}


def write_table(path, reports, metric, window, fset, families):
    rows = table_rows(reports, metric, window, fset)
    fh, w = _writer(path)
    with fh:
        w.writerow(["metric_row"] + list(families))
        for label, cells in rows.items():
            w.writerow([label] + [format_cell(*cells[f]) if f in cells else ""
                                  for f in families])
    return len(rows)


def best_triple(reports):
    """(family, feature set, window, mean accuracy) with the highest mean accuracy.

    Intra-subject Avg Subject means are used when the intra regime was run,
    otherwise the inter-subject means. Ties keep the first cell in canonical
    order.
    """
    regime = "intra" if any(r.regime == "intra" for r in reports) else "inter"
    best = None
    for r in reports:
        if r.regime != regime:
            continue
        mean = r.average("accuracy")[0]
        if best is None or mean > best[3]:
            best = (r.family, r.feature_set, r.window, mean, regime)
    return best


def _families(reports):
    present = {r.family for r in reports}
    return [f for f in FAMILY_ORDER if f in present]


def _roc_files(result, out_dir, triple):
    family, fset, window = triple[:3]
    roc_dir = os.path.join(out_dir, "roc")
    os.makedirs(roc_dir, exist_ok=True)
    written = []
    for regime in result.config.regimes:
        groups = {}
        for f in result.folds:
            if (f.family, f.feature_set, f.window, f.regime) == (family, fset, window, regime):
                groups.setdefault(f.group, []).append(f)
        for group in sorted(groups):
            folds = sorted(groups[group], key=lambda f: f.fold)
            y = np.concatenate([f.y_true for f in folds])
            S = np.vstack([f.scores for f in folds])
            for c, color in enumerate(COLORS):
                pos = y == c
                if pos.all() or not pos.any():
                    continue
                thr, fpr, tpr = roc_curve(S[:, c], pos)
                path = os.path.join(roc_dir, f"roc_{regime}_{group}_{color}.csv")
                fh, w = _writer(path)
                with fh:
                    w.writerow(["threshold", "fpr", "tpr"])
                    for row in zip(thr, fpr, tpr):
                        w.writerow([repr(float(v)) for v in row])
                written.append(path)
    return written


def render_report(result, out_dir):
    """Write all report files for ``result`` into ``out_dir``; returns the paths."""
    reports = result.reports
    if not reports:
        raise EmptyReport("nothing to report")
    os.makedirs(out_dir, exist_ok=True)
    cfg = result.config
    families = _families(reports)
    windows = sorted({r.window for r in reports})
    fsets = [f for f in cfg.feature_sets if any(r.feature_set == f for r in reports)]
    table_window = cfg.table_window if cfg.table_window in windows else windows[0]
    paths = []
    for metric in METRIC_TITLES:
        for fset in fsets:
            p = os.path.join(out_dir, f"table_{metric}_{fset}.csv")
            write_table(p, reports, metric, table_window, fset, FAMILY_ORDER)
            paths.append(p)
            for window in windows:
                p = os.path.join(out_dir, f"table_{metric}_{fset}_{window}ms.csv")
                write_table(p, reports, metric, window, fset, FAMILY_ORDER)
                paths.append(p)

    p = os.path.join(out_dir, "cells.csv")
    fh, w = _writer(p)
    with fh:
        w.writerow(["window_ms", "feature_set", "regime", "family", "metric", "row",
                    "mean", "std", "n_groups", "n_folds"])
        for r in reports:
            for metric in METRIC_TITLES:
                for label, mean, std in r.rows(metric):
                    w.writerow([r.window, r.feature_set, r.regime, r.family, metric, label,
                                repr(mean), repr(std), len(r.groups), r.n_folds])
    paths.append(p)

    for regime in cfg.regimes:
        sel = [r for r in reports if r.regime == regime]
        if not sel:
            continue
        p = os.path.join(out_dir, f"sweep_{regime}.csv")
        fh, w = _writer(p)
        with fh:
            w.writerow(["window_ms", "feature_set", "family"]
                       + [f"{m}_{s}" for m in METRIC_TITLES for s in ("mean", "std")])
            for r in sel:
                vals = []
                for m in METRIC_TITLES:
                    vals += [repr(v) for v in r.average(m)]
                w.writerow([r.window, r.feature_set, r.family] + vals)
        paths.append(p)

    triple = best_triple(reports)
    if triple is not None:
        paths += _roc_files(result, out_dir, triple)

    p = os.path.join(out_dir, "summary.txt")
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(summary_text(result, triple, table_window, families, fsets))
    paths.append(p)

    p = os.path.join(out_dir, "manifest.json")
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest(result), fh, indent=2, sort_keys=True)
        fh.write("\n")
    paths.append(p)
    return paths


def summary_text(result, triple, table_window, families, fsets):
    lines = ["eegcolor experiment summary", ""]
    if triple is not None:
        fam, fset, window, mean, regime = triple
        lines.append(f"best: family={fam} feature_set={fset} window={window}ms "
                     f"mean_accuracy={mean:.3f} ({regime})")
        lines.append("")
    head = f"{'':<16}" + "".join(f"{f:>16}" for f in families)
    for metric, title in METRIC_TITLES.items():
        for fset in fsets:
            rows = table_rows(result.reports, metric, table_window, fset)
            if not rows:
                continue
            lines.append(f"{title}, feature set {fset}, window {table_window} ms")
            lines.append(head)
            for label, cells in rows.items():
                lines.append(f"{label:<16}" + "".join(
                    f"{format_cell(*cells[f]) if f in cells else '':>16}" for f in families))
            lines.append("")
    if result.failures:
        lines.append(f"failed jobs: {len(result.failures)}")
    return "\n".join(lines).rstrip("\n") + "\n"


def manifest(result):
    """Provenance record. ``jobs`` is left out: it changes scheduling only,
    never the numbers, and the report must not depend on it."""
    cfg = result.config
    config = cfg.to_dict()
    config.pop("jobs", None)
    return {"format": "eegcolor-report", "version": 1,
            "package_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "config": config,
            "master_seed": cfg.seed,
            "seed_scheme": "SeedSequence([master, stage, window_idx, regime_idx, split_idx, "
                           "feature_set_idx, family_idx]) with canonical axis order",
            "dataset": result.dataset,
            "cells": len(result.reports),
            "failed_jobs": len(result.failures)}
