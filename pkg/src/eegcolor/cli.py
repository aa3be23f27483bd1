"""Command line entry point.

Exit codes: 0 success; 1 invalid usage, flag value or config (the message
names the flag); 2 runtime failure (a failure manifest is written and its
path printed).
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import re
import sys
import traceback

import numpy as np

from . import BUILD_ID
from .dsp import DEFAULT_FREQS, cwt_power, emit_spectrogram
from .experiment import (ExperimentConfig, ExperimentError, build_feature_matrices,
                         result_from_json, result_to_json, run_experiment,
                         write_failure_manifest, FEATURE_SETS, REGIMES)
from .features import (DEFAULT_N_CYCLES, PAPER_WINDOWS_MS, ZScore, read_feature_matrix,
                       write_feature_matrix)
from .ingest import (CHANNELS, StimulusProtocol, detect_start_marker, epoch_trials,
                     generate_synthetic_recording, make_schedule, read_epochs,
                     read_recording, read_schedule, write_epochs, write_recording,
                     write_schedule)
from .models import (FAMILY_ORDER, ModelSpec, canonical_family, derive_seed, fit,
                     grid_search, model_to_json)
from .reduce import autoencoder_encode, autoencoder_train, forward_select
from .report import render_report

HELP_VERSION = "cli-help v1"
_REC_RE = re.compile(r"recording_(?P<subject>[^_]+)_(?P<trial>[^_]+)\.csv$")


class UsageError(Exception):
    """Invalid command line or config; exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


# --------------------------------------------------------------------------
# argument types

def _threshold(text):
    if text == "auto":
        return "auto"
    if text == "none":
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, 'auto' or 'none', got {text!r}")
    if not v > 0:
        raise argparse.ArgumentTypeError("threshold must be positive")
    return v


def _window(text):
    try:
        w = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid window {text!r}")
    if w not in PAPER_WINDOWS_MS:
        raise argparse.ArgumentTypeError(
            f"window {w} ms not in {', '.join(map(str, PAPER_WINDOWS_MS))}")
    return w


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}")
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return v


def _family(text):
    try:
        return canonical_family(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _wrapper(text):
    return "same" if text == "same" else _family(text)


# --------------------------------------------------------------------------
# parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE",
                        help="key=value file; command line flags override it")
    common.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    common.add_argument("--jobs", type=_positive_int, default=os.cpu_count() or 1,
                        help="worker processes for experiment evaluation")
    common.add_argument("--artifact-threshold", type=_threshold, default="auto",
                        help="window-variance threshold, 'auto' (5 x median) or 'none'")
    common.add_argument("--n-cycles", type=float, default=DEFAULT_N_CYCLES,
                        help="Morlet wavelet cycles (default 7)")

    p = _Parser(prog="eegcolor", description=f"EEG color-stimulus pipeline ({HELP_VERSION})")
    p.add_argument("--version", action="version", version=BUILD_ID)
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic cohort")
    s.add_argument("--out", required=True)
    s.add_argument("--subjects", type=_positive_int, default=8)
    s.add_argument("--trials", type=_positive_int, default=1)
    s.add_argument("--repetitions", type=_positive_int, default=20,
                   help="presentations per color per trial")
    s.add_argument("--noise", type=float, default=5.0, help="noise sigma (microvolts)")

    s = sub.add_parser("ingest", parents=[common], help="epoch recordings into epochs.csv")
    s.add_argument("--in", dest="inp", required=True,
                   help="directory with recording_<subject>_<trial>.csv and schedule_*.csv")
    s.add_argument("--out", help="output directory (default: --in)")

    s = sub.add_parser("extract", parents=[common], help="feature matrices per window")
    s.add_argument("--in", dest="inp", required=True,
                   help="directory with epochs.csv or recordings")
    s.add_argument("--window", type=_window, action="append",
                   help="window length in ms (repeatable; default all of 100, 200, 500, 1000)")
    s.add_argument("--out", help="output directory (default: --in)")

    s = sub.add_parser("reduce", parents=[common], help="forward selection or autoencoder")
    s.add_argument("--features", required=True, help="feature matrix CSV")
    s.add_argument("--method", choices=("forward", "ae"), default="forward")
    s.add_argument("--family", type=_family, default="lr", help="wrapper model (forward)")
    s.add_argument("--k", type=_positive_int, default=10)
    s.add_argument("--folds", type=_positive_int, default=5)
    s.add_argument("--epochs", type=_positive_int, default=200, help="autoencoder epochs")
    s.add_argument("--out", required=True)

    s = sub.add_parser("train", parents=[common], help="fit one model family")
    s.add_argument("--family", type=_family, required=True)
    s.add_argument("--grid", choices=("default", "none"), default="none")
    s.add_argument("--features", required=True)
    s.add_argument("--folds", type=_positive_int, default=5)
    s.add_argument("--out", required=True)

    s = sub.add_parser("evaluate", parents=[common], help="run the cross-validation grid")
    s.add_argument("--in", dest="inp", default=".", help="directory with features_<w>ms.csv")
    s.add_argument("--out", help="report directory (default: <in>/report)")
    s.add_argument("--family", type=_family, action="append")
    s.add_argument("--feature-set", choices=FEATURE_SETS, action="append")
    s.add_argument("--regime", choices=REGIMES, action="append")
    s.add_argument("--window", type=_window, action="append")
    s.add_argument("--folds", type=_positive_int, default=5)
    s.add_argument("--selection-wrapper", type=_wrapper, default="same")
    s.add_argument("--group-by-trial", action="store_true")
    s.add_argument("--tune", action="store_true", help="grid search inside each training split")
    s.add_argument("--table-window", type=_window, default=200)

    s = sub.add_parser("report", parents=[common], help="re-render report files")
    s.add_argument("--in", dest="inp", required=True, help="results.json from evaluate")
    s.add_argument("--out", required=True)

    s = sub.add_parser("spectrogram", parents=[common], help="wavelet power of one epoch")
    s.add_argument("--epochs", required=True, help="epochs.csv")
    s.add_argument("--subject", required=True)
    s.add_argument("--trial", required=True)
    s.add_argument("--epoch", type=int, required=True)
    s.add_argument("--channel", choices=CHANNELS, default=CHANNELS[0])
    s.add_argument("--out", required=True)
    return p


# --------------------------------------------------------------------------
# config file

def read_config(path):
    """``key = value`` lines; ``#`` starts a comment; quotes around values are stripped."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line or (line.startswith("[") and line.endswith("]")):
                continue
            if "=" not in line:
                raise UsageError(f"--config {path}:{lineno}: expected key=value")
            key, value = (t.strip() for t in line.split("=", 1))
            out[key.replace("-", "_")] = value.strip("\"'")
    return out


def _apply_config(parser, argv, args):
    sub = parser._subparsers._group_actions[0].choices[args.command]
    cfg = read_config(args.config)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        if key not in actions or key in ("help", "config"):
            raise UsageError(f"--config: unknown key {key!r} for '{args.command}'")
        act = actions[key]
        items = [v.strip() for v in value.split(",")] if isinstance(act, argparse._AppendAction) \
            else [value]
        conv = []
        for item in items:
            if isinstance(act, (argparse._StoreTrueAction,)):
                conv.append(item.lower() in ("1", "true", "yes", "on"))
                continue
            try:
                v = act.type(item) if act.type else item
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"--config: invalid value for {key}: {exc}")
            if act.choices is not None and v not in act.choices:
                raise UsageError(f"--config: invalid choice for {key}: {item!r}")
            conv.append(v)
        defaults[key] = conv if isinstance(act, argparse._AppendAction) else conv[0]
    # append actions would extend a list default, so those are filled in only
    # when the command line left them unset
    lists = {k: v for k, v in defaults.items() if isinstance(actions[k], argparse._AppendAction)}
    sub.set_defaults(**{k: v for k, v in defaults.items() if k not in lists})
    args = parser.parse_args(argv)
    for key, value in lists.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    return args


# --------------------------------------------------------------------------
# commands

def _need_dir(path, flag):
    if not os.path.isdir(path):
        raise UsageError(f"{flag}: directory not found: {path}")


def _need_file(path, flag):
    if not os.path.isfile(path):
        raise UsageError(f"{flag}: file not found: {path}")


def cmd_synth(args):
    os.makedirs(args.out, exist_ok=True)
    protocol = StimulusProtocol.with_repetitions(args.repetitions)
    files = []
    for s in range(args.subjects):
        for t in range(args.trials):
            subj, trial = f"s{s + 1:02d}", f"t{t + 1}"
            sched = make_schedule(protocol, derive_seed(args.seed, 0, s, t))
            rec, _ = generate_synthetic_recording(derive_seed(args.seed, 1, s, t), sched,
                                                  noise_sigma=args.noise)
            rp = os.path.join(args.out, f"recording_{subj}_{trial}.csv")
            sp = os.path.join(args.out, f"schedule_{subj}_{trial}.csv")
            write_recording(rec, rp)
            write_schedule(sched, sp)
            files += [os.path.basename(rp), os.path.basename(sp)]
    _write_manifest(args.out, "synth_manifest.json", args, {"files": files})
    print(f"wrote {len(files)} files to {args.out}")


def _ingest_dir(inp):
    paths = sorted(p for p in glob.glob(os.path.join(inp, "recording_*.csv"))
                   if _REC_RE.search(os.path.basename(p)))
    if not paths:
        raise UsageError(f"--in: no recording_<subject>_<trial>.csv files in {inp}")
    epochs = []
    for rp in paths:
        m = _REC_RE.search(os.path.basename(rp))
        sp = os.path.join(inp, f"schedule_{m['subject']}_{m['trial']}.csv")
        _need_file(sp, "--in")
        rec, sched = read_recording(rp), read_schedule(sp)
        epochs += epoch_trials(rec, sched, detect_start_marker(rec), m["subject"], m["trial"])
    return epochs


def cmd_ingest(args):
    _need_dir(args.inp, "--in")
    out = args.out or args.inp
    epochs = _ingest_dir(args.inp)
    os.makedirs(out, exist_ok=True)
    write_epochs(epochs, os.path.join(out, "epochs.csv"))
    print(f"wrote {len(epochs)} epochs to {os.path.join(out, 'epochs.csv')}")


def cmd_extract(args):
    _need_dir(args.inp, "--in")
    out = args.out or args.inp
    ep_path = os.path.join(args.inp, "epochs.csv")
    epochs = read_epochs(ep_path) if os.path.isfile(ep_path) else _ingest_dir(args.inp)
    windows = sorted(set(args.window or PAPER_WINDOWS_MS))
    mats = build_feature_matrices(epochs, windows, args.artifact_threshold, args.n_cycles)
    os.makedirs(out, exist_ok=True)
    for w, fm in mats.items():
        path = os.path.join(out, f"features_{w}ms.csv")
        write_feature_matrix(fm, path)
        print(f"wrote {len(fm)} rows to {path}")
    _write_manifest(out, "extract_manifest.json", args,
                    {"windows": windows, "rows": {str(w): len(m) for w, m in mats.items()}})


def cmd_reduce(args):
    _need_file(args.features, "--features")
    fm = read_feature_matrix(args.features)
    X = ZScore().fit_transform(fm.X)
    if args.method == "forward":
        subset = forward_select(X, fm.labels, ModelSpec(args.family, {}, args.seed), args.k,
                                args.folds, args.seed, fm.names)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(subset.to_text())
        print("selected: " + ", ".join(subset.names))
    else:
        model = autoencoder_train(X, latent=args.k, epochs=args.epochs, seed=args.seed)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(model.to_json())
        print(f"autoencoder final mse {model.final_mse:.4f} "
              f"(width {autoencoder_encode(model, X[:1]).shape[1]})")


def cmd_train(args):
    _need_file(args.features, "--features")
    fm = read_feature_matrix(args.features)
    z = ZScore().fit(fm.X)
    X = z.transform(fm.X)
    if args.grid == "default":
        spec, table = grid_search(args.family, "default", X, fm.labels, args.folds, args.seed, 3)
    else:
        spec, table = ModelSpec(args.family, {}, args.seed), []
    model = fit(spec, X, fm.labels, 3, fm.names, "zscore:training-rows")
    doc = json.loads(model_to_json(model))
    doc["normalization"] = {"mean": z.mean.tolist(), "std": z.std.tolist()}
    doc["grid_table"] = table
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True)
    print(f"trained {spec.family} with {spec.params}")


def _find_matrices(inp, windows):
    found = {}
    for path in sorted(glob.glob(os.path.join(inp, "features_*ms.csv"))):
        m = re.search(r"features_(\d+)ms\.csv$", path)
        if m and int(m.group(1)) in PAPER_WINDOWS_MS:
            found[int(m.group(1))] = path
    if windows:
        missing = [w for w in windows if w not in found]
        if missing:
            raise UsageError(f"--window: no features_{missing[0]}ms.csv in {inp}")
        found = {w: found[w] for w in windows}
    if not found:
        raise UsageError(f"--in: no features_<window>ms.csv files in {inp}")
    return found


def cmd_evaluate(args):
    _need_dir(args.inp, "--in")
    paths = _find_matrices(args.inp, args.window)
    out = args.out or os.path.join(args.inp, "report")
    config = ExperimentConfig(
        windows=tuple(sorted(paths)),
        feature_sets=tuple(args.feature_set or FEATURE_SETS),
        families=tuple(args.family or FAMILY_ORDER),
        regimes=tuple(args.regime or REGIMES),
        folds=args.folds, seed=args.seed, selection_wrapper=args.selection_wrapper,
        group_by_trial=args.group_by_trial, tune=args.tune, jobs=args.jobs,
        table_window=args.table_window)
    mats = {w: read_feature_matrix(p) for w, p in paths.items()}
    result = run_experiment(config, mats, out)
    with open(os.path.join(out, "results.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result_to_json(result))
    print(f"wrote report for {len(result.reports)} cells to {out}")


def cmd_report(args):
    _need_file(args.inp, "--in")
    with open(args.inp, encoding="utf-8") as fh:
        result = result_from_json(fh.read())
    paths = render_report(result, args.out)
    print(f"wrote {len(paths)} files to {args.out}")


def cmd_spectrogram(args):
    _need_file(args.epochs, "--epochs")
    for ep in read_epochs(args.epochs):
        if (ep.subject_id, ep.trial_id, ep.epoch_index) == (args.subject, args.trial, args.epoch):
            seg = ep.channel_segments[CHANNELS.index(args.channel)]
            spec = cwt_power(seg, DEFAULT_FREQS, n_cycles=args.n_cycles, channel=args.channel)
            emit_spectrogram(spec, args.out)
            print(f"wrote {args.out}")
            return
    raise UsageError(f"--epoch: no epoch {args.epoch} for subject {args.subject} "
                     f"trial {args.trial}")


COMMANDS = {"synth": cmd_synth, "ingest": cmd_ingest, "extract": cmd_extract,
            "reduce": cmd_reduce, "train": cmd_train, "evaluate": cmd_evaluate,
            "report": cmd_report, "spectrogram": cmd_spectrogram}


def _jsonable_args(args):
    return {k: v for k, v in sorted(vars(args).items())}


def _write_manifest(out, name, args, extra):
    doc = {"build": BUILD_ID, "command": args.command, "args": _jsonable_args(args),
           "numpy": np.__version__}
    doc.update(extra)
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _failure_dir(args):
    """Output directory of the command, or the directory of its input."""
    out = getattr(args, "out", None)
    if out:
        return (os.path.dirname(out) or ".") if os.path.splitext(out)[1] else out
    inp = getattr(args, "inp", None)
    if inp:
        return inp if os.path.isdir(inp) else (os.path.dirname(inp) or ".")
    return "."


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("eegcolor: error: a command is required "
                             f"({', '.join(COMMANDS)})")
        if args.config:
            if not os.path.isfile(args.config):
                raise UsageError(f"--config: file not found: {args.config}")
            args = _apply_config(parser, argv, args)
        return _run(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1


def _run(args):
    try:
        COMMANDS[args.command](args)
        return 0
    except UsageError:
        raise
    except ExperimentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.manifest:
            print(f"failure manifest: {exc.manifest}", file=sys.stderr)
            return 2
        manifest = _write_failure(args, exc)
        print(f"failure manifest: {manifest}", file=sys.stderr)
        return 2
    except Exception as exc:
        manifest = _write_failure(args, exc)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        print(f"failure manifest: {manifest}", file=sys.stderr)
        return 2


def _write_failure(args, exc):
    out = _failure_dir(args)
    try:
        os.makedirs(out, exist_ok=True)
    except OSError:
        out = "."
    path = os.path.join(out, "failure_manifest.json")
    write_failure_manifest(path, None, [{"command": args.command, "error": type(exc).__name__,
                                         "message": str(exc),
                                         "traceback": traceback.format_exc()}],
                           {"build": BUILD_ID, "args": _jsonable_args(args)})
    return path


if __name__ == "__main__":
    sys.exit(main())
