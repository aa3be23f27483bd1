"""Window features over alpha/beta band-power series.

Each window holds eight aligned series, ordered band-major::

    alpha_TP9 alpha_AF7 alpha_AF8 alpha_TP10 beta_TP9 beta_AF7 beta_AF8 beta_TP10

and yields one 86-value row: 18 spectral, 28 correlation and 40
statistical features. Feature functions accept a single window (8, L) or
a stack (n, 8, L) and compute along the last axis.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from importlib import resources
from itertools import combinations

import numpy as np

from .dsp import DEFAULT_FREQS, DEFAULT_N_CYCLES, band_power_array, multichannel_power
from .errors import DegenerateWindow, MissingColumn, SeriesTooShort, ZeroVariance
from .ingest import CHANNELS, COLORS, LEFT_CHANNELS, RIGHT_CHANNELS
from .preprocess import DEFAULT_WINDOW, apply_flags, flag_channels

log = logging.getLogger(__name__)

PAPER_WINDOWS_MS = (100, 200, 500, 1000)
BANDS = ("alpha", "beta")
SERIES_NAMES = tuple(f"{b}_{ch}" for b in BANDS for ch in CHANNELS)
PAIRS = tuple(combinations(range(len(SERIES_NAMES)), 2))
ENTROPY_BINS = 16
N_SPECTRAL, N_CORRELATION, N_STATISTICAL = 18, 28, 40
N_FEATURES = N_SPECTRAL + N_CORRELATION + N_STATISTICAL
META_COLUMNS = ("label", "subject", "trial", "window")

_LEFT = [CHANNELS.index(c) for c in LEFT_CHANNELS]
_RIGHT = [CHANNELS.index(c) for c in RIGHT_CHANNELS]


def _feature_names():
    names = [f"mean_{s}" for s in SERIES_NAMES]
    names += [f"var_{s}" for s in SERIES_NAMES]
    names += [f"hemdiff_{b}" for b in BANDS]
    names += [f"corr_{SERIES_NAMES[i]}__{SERIES_NAMES[j]}" for i, j in PAIRS]
    for stat in ("kurtosis", "skewness", "entropy", "mobility", "complexity"):
        names += [f"{stat}_{s}" for s in SERIES_NAMES]
    return tuple(names)


FEATURE_NAMES = _feature_names()
assert len(FEATURE_NAMES) == N_FEATURES == 86


def manifest_names():
    """Feature names from the versioned manifest shipped with the package."""
    text = resources.files(__package__).joinpath("feature_names_v1.txt").read_text()
    return tuple(line for line in text.splitlines()
                 if line and not line.startswith("#"))


@dataclass(frozen=True)
class WindowConfig:
    """Window of ``length_ms`` sliding by half its length.

    Non-integer sample counts round down: 200 ms at 256 Hz is 51 samples
    with a step of 25.
    """

    length_ms: float
    sample_rate: float = 256.0
    overlap_fraction: float = 0.5

    def __post_init__(self):
        if self.overlap_fraction != 0.5:
            raise ValueError("overlap is fixed at 50%")
        if self.length < 4:
            raise ValueError(f"window of {self.length_ms} ms has fewer than 4 samples")

    @property
    def length(self):
        return int(self.length_ms * self.sample_rate // 1000)

    @property
    def step(self):
        return self.length // 2

    def count(self, n):
        return 0 if n < self.length else (n - self.length) // self.step + 1


@dataclass(frozen=True)
class Window:
    start: int
    series: np.ndarray


def window_stack(series, cfg):
    """Starts and (n_windows, 8, L) view of all full windows."""
    s = np.asarray(series, dtype=float)
    n = s.shape[-1]
    if n < cfg.length:
        raise SeriesTooShort(f"series of {n} samples is shorter than the "
                             f"{cfg.length}-sample window")
    starts = np.arange(cfg.count(n)) * cfg.step
    idx = starts[:, None] + np.arange(cfg.length)
    return starts, np.moveaxis(s[..., idx], -2, 0)


def slide_windows(band_powers, cfg):
    """Cut the eight band-power series into half-overlapping windows.

    ``band_powers`` is either a sequence of per-channel
    :class:`~eegcolor.dsp.BandPower` (channel order TP9, AF7, AF8, TP10) or
    an array (8, T) already in series order.
    """
    if not isinstance(band_powers, np.ndarray):
        band_powers = np.array([bp.alpha for bp in band_powers]
                               + [bp.beta for bp in band_powers])
    starts, stack = window_stack(band_powers, cfg)
    return [Window(int(s), w) for s, w in zip(starts, stack)]


def _as_stack(w):
    a = np.asarray(getattr(w, "series", w), dtype=float)
    return a, a.ndim == 2


def spectral_features(w):
    """Mean power (8), variance of power (8) and |left - right| mean power
    per band (2)."""
    a, single = _as_stack(w)
    a = a[None] if single else a
    means = a.mean(axis=-1)
    variances = a.var(axis=-1)
    by_band = means.reshape(means.shape[0], 2, len(CHANNELS))
    hem = np.abs(by_band[..., _LEFT].mean(axis=-1) - by_band[..., _RIGHT].mean(axis=-1))
    out = np.concatenate((means, variances, hem), axis=-1)
    return out[0] if single else out


def correlation_features(w):
    """Pearson correlation of every unordered series pair, in ``PAIRS`` order.

    A pair involving a zero-variance series gets correlation 0.
    """
    a, single = _as_stack(w)
    a = a[None] if single else a
    c = a - a.mean(axis=-1, keepdims=True)
    norm = np.sqrt((c * c).sum(axis=-1))
    ok = norm > 0
    z = np.divide(c, norm[..., None], out=np.zeros_like(c), where=ok[..., None])
    corr = np.einsum("nil,njl->nij", z, z)
    i, j = np.array(PAIRS).T
    out = np.clip(corr[:, i, j], -1.0, 1.0)
    return out[0] if single else out


def _moments(a):
    c = a - a.mean(axis=-1, keepdims=True)
    m2 = (c ** 2).mean(axis=-1)
    return c, m2


def kurtosis(y):
    """Fisher excess kurtosis from population moments (Gaussian -> 0)."""
    c, m2 = _moments(np.asarray(y, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        return (c ** 4).mean(axis=-1) / m2 ** 2 - 3.0


def skewness(y):
    """Standardized third central moment (population)."""
    c, m2 = _moments(np.asarray(y, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        return (c ** 3).mean(axis=-1) / m2 ** 1.5


def shannon_entropy(y, bins=ENTROPY_BINS):
    """Entropy in bits of an equal-width histogram over [min, max].

    Bin edges follow ``np.linspace(min, max, bins + 1)``, the last bin is
    closed. A constant series has entropy 0.
    """
    a = np.asarray(y, dtype=float)
    if a.shape[-1] < bins:
        raise SeriesTooShort(f"{a.shape[-1]} values cannot fill {bins} bins")
    flat = a.reshape(-1, a.shape[-1])
    lo = flat.min(axis=1, keepdims=True)
    hi = flat.max(axis=1, keepdims=True)
    span = hi - lo
    const = span[:, 0] == 0
    safe_span = np.where(const[:, None], 1.0, span)
    idx = ((flat - lo) / safe_span * bins).astype(np.intp)
    idx[idx == bins] -= 1
    # the float index may land one bin off an exact edge; compare to the edges
    edges = np.arange(bins + 1) * (safe_span / bins) + lo
    edges[:, -1] = hi[:, 0]
    idx = np.clip(idx, 0, bins - 1)
    rows = np.arange(flat.shape[0])[:, None]
    idx -= flat < edges[rows, idx]
    idx += (flat >= edges[rows, idx + 1]) & (idx != bins - 1)
    counts = np.bincount((rows * bins + idx).ravel(),
                         minlength=flat.shape[0] * bins).reshape(-1, bins)
    p = counts / flat.shape[1]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    h = -terms.sum(axis=1)
    h[const] = 0.0
    h = np.where(h == 0.0, 0.0, h)
    return h.reshape(a.shape[:-1]) if a.ndim > 1 else float(h[0])


def hjorth(y, sample_rate=256.0):
    """Hjorth mobility and complexity.

    The derivative is the forward difference times ``sample_rate``;
    mobility = sqrt(var(y') / var(y)), complexity = mobility(y') / mobility(y).
    """
    a = np.asarray(y, dtype=float)
    if a.shape[-1] < 3:
        raise SeriesTooShort("Hjorth parameters need at least 3 samples")
    d1 = np.diff(a, axis=-1) * sample_rate
    d2 = np.diff(d1, axis=-1) * sample_rate
    v0, v1, v2 = a.var(axis=-1), d1.var(axis=-1), d2.var(axis=-1)
    if np.any(v0 == 0):
        raise ZeroVariance("Hjorth parameters are undefined for a constant series")
    mobility = np.sqrt(v1 / v0)
    with np.errstate(divide="ignore", invalid="ignore"):
        complexity = np.where(v1 > 0, np.sqrt(v2 / np.where(v1 > 0, v1, 1.0)), 0.0) / mobility
    if a.ndim == 1:
        return float(mobility), float(complexity)
    return mobility, complexity


def degenerate_rows(w):
    """True for windows in which some series is constant."""
    a, single = _as_stack(w)
    a = a[None] if single else a
    flat = np.ptp(a, axis=-1) == 0
    return flat.any(axis=-1)


def statistical_features(w, sample_rate=256.0, bins=ENTROPY_BINS):
    """Kurtosis (8), skewness (8), entropy (8), mobility (8), complexity (8)."""
    a, single = _as_stack(w)
    a = a[None] if single else a
    if a.shape[-1] < 4:
        raise SeriesTooShort("statistical features need windows of at least 4 samples")
    if degenerate_rows(a).any():
        raise DegenerateWindow("constant series: kurtosis/skewness undefined")
    mob, comp = hjorth(a, sample_rate)
    out = np.concatenate((kurtosis(a), skewness(a), shannon_entropy(a, bins),
                          mob, comp), axis=-1)
    return out[0] if single else out


def window_features(w, sample_rate=256.0, bins=ENTROPY_BINS):
    """All 86 features for one window or a stack of windows."""
    a, single = _as_stack(w)
    a = a[None] if single else a
    out = np.concatenate((spectral_features(a), correlation_features(a),
                          statistical_features(a, sample_rate, bins)), axis=-1)
    if out.shape[-1] != N_FEATURES:
        raise AssertionError("feature count drifted from 86")
    return out[0] if single else out


# --------------------------------------------------------------------------
# epochs -> band power -> feature matrix

def epoch_band_series(epoch, artifact_threshold="auto", n_cycles=DEFAULT_N_CYCLES,
                      freqs=DEFAULT_FREQS, sample_rate=256.0,
                      flag_window=DEFAULT_WINDOW):
    """Eight band-power series (8, T') of one epoch with flagged spans removed.

    The order is fixed: flags come from the raw segment, the wavelet power is
    computed on the full contiguous segment, and flagged time points are
    deleted from the power afterwards. ``artifact_threshold=None`` disables
    flagging.
    """
    segments = np.asarray(epoch.channel_segments, dtype=float)
    power = multichannel_power(segments, freqs, sample_rate, n_cycles)
    series = band_power_array(power, freqs).reshape(2 * len(CHANNELS), -1)
    if artifact_threshold is None:
        return series
    mask = flag_channels(segments, flag_window, artifact_threshold)
    kept, _ = apply_flags(series, mask)
    return kept


@dataclass
class ZScore:
    """Column standardization fitted on one set and applied unchanged to others.

    Columns with zero spread keep their centered values (scale 1).
    """

    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    def fit(self, X):
        X = np.asarray(X, dtype=float)
        self.mean = X.mean(axis=0)
        std = X.std(axis=0)
        self.std = np.where(std > 0, std, 1.0)
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.std

    def fit_transform(self, X):
        return self.fit(X).transform(X)


@dataclass
class FeatureMatrix:
    X: np.ndarray
    labels: np.ndarray
    subjects: np.ndarray
    trials: np.ndarray
    windows: np.ndarray
    epochs: np.ndarray | None = None
    names: tuple = FEATURE_NAMES
    normalization: ZScore | None = None
    window_ms: float | None = None
    dropped: int = 0

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(-1, len(self.names))
        self.labels = np.asarray(self.labels, dtype=int)
        self.subjects = np.asarray(self.subjects, dtype=object)
        self.trials = np.asarray(self.trials, dtype=object)
        self.windows = np.asarray(self.windows, dtype=int)
        if self.epochs is None:
            self.epochs = np.zeros(len(self.labels), dtype=int)
        self.epochs = np.asarray(self.epochs, dtype=int)
        n = self.X.shape[0]
        for a in (self.labels, self.subjects, self.trials, self.windows, self.epochs):
            if len(a) != n:
                raise ValueError("feature matrix metadata length mismatch")

    def __len__(self):
        return self.X.shape[0]

    def subset(self, rows):
        return FeatureMatrix(self.X[rows], self.labels[rows], self.subjects[rows],
                             self.trials[rows], self.windows[rows], self.epochs[rows],
                             self.names, self.normalization, self.window_ms)

    def normalized(self):
        """Copy z-scored with parameters fitted on all rows of this matrix."""
        z = ZScore().fit(self.X)
        out = self.subset(slice(None))
        out.X = z.transform(self.X)
        out.normalization = z
        return out


def features_from_series(series, cfg, sample_rate=256.0):
    """Feature rows for one epoch's band series; degenerate windows dropped.

    Returns (rows, window indices, dropped count).
    """
    if np.asarray(series).shape[-1] < cfg.length:
        return np.empty((0, N_FEATURES)), np.empty(0, dtype=int), 0
    starts, stack = window_stack(series, cfg)
    bad = degenerate_rows(stack)
    idx = np.flatnonzero(~bad)
    if idx.size == 0:
        return np.empty((0, N_FEATURES)), idx, int(bad.sum())
    return window_features(stack[idx], sample_rate), idx, int(bad.sum())


def assemble(epochs, cfg, artifact_threshold="auto", n_cycles=DEFAULT_N_CYCLES,
             normalize=False, band_series=None):
    """Feature matrix for a list of epochs.

    Rows follow epoch order, then window order. ``band_series`` can carry
    precomputed :func:`epoch_band_series` outputs (one per epoch) so the
    wavelet step runs once for several window lengths.
    """
    if not epochs:
        raise ValueError("no epochs to assemble")
    if band_series is None:
        band_series = [epoch_band_series(ep, artifact_threshold, n_cycles) for ep in epochs]
    rows, labels, subjects, trials, wins, eps = [], [], [], [], [], []
    dropped = 0
    for ep, series in zip(epochs, band_series):
        feats, idx, bad = features_from_series(series, cfg, cfg.sample_rate)
        dropped += bad
        rows.append(feats)
        k = len(idx)
        labels += [ep.label_index] * k
        subjects += [ep.subject_id] * k
        trials += [ep.trial_id] * k
        eps += [ep.epoch_index] * k
        wins += list(idx)
    if dropped:
        log.warning("dropped %d degenerate windows", dropped)
    fm = FeatureMatrix(np.vstack(rows), labels, subjects, trials, wins, eps,
                       window_ms=cfg.length_ms, dropped=dropped)
    if fm.X.shape[1] != N_SPECTRAL + N_CORRELATION + N_STATISTICAL:
        raise AssertionError("feature count drifted from 86")
    return fm.normalized() if normalize else fm


# --------------------------------------------------------------------------
# file format

def write_feature_matrix(fm, path):
    """CSV with the 86 feature names followed by label, subject, trial, window."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(fm.names) + list(META_COLUMNS) + ["epoch"])
        for i in range(len(fm)):
            w.writerow([repr(float(v)) for v in fm.X[i]]
                       + [COLORS[fm.labels[i]], fm.subjects[i], fm.trials[i],
                          int(fm.windows[i]), int(fm.epochs[i])])


def read_feature_matrix(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, [])
        rows = list(reader)
    for required in META_COLUMNS:
        if required not in header:
            raise MissingColumn(required)
    names = tuple(h for h in header if h not in META_COLUMNS and h != "epoch")
    col = {h: i for i, h in enumerate(header)}
    X = np.array([[float(r[col[n]]) for n in names] for r in rows]).reshape(-1, len(names))
    meta = {m: [r[col[m]] for r in rows] for m in META_COLUMNS}
    epochs = [int(r[col["epoch"]]) for r in rows] if "epoch" in col else None
    return FeatureMatrix(X, [COLORS.index(v) for v in meta["label"]], meta["subject"],
                         meta["trial"], [int(v) for v in meta["window"]], epochs, names)
