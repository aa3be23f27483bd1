"""Variance-window artifact flagging.

Raw segments are cut into short windows (12 samples, about 50 ms at
256 Hz); a window whose population variance exceeds the threshold is
flagged. Flagged spans are removed from the band-power series only after
the wavelet transform, so the transform always sees a contiguous signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MaskLengthMismatch, SegmentTooShort

DEFAULT_WINDOW = 12
AUTO_MULTIPLE = 5.0


@dataclass(frozen=True)
class FlagMask:
    window_length: int
    flags: np.ndarray
    threshold: float
    n_samples: int

    def __post_init__(self):
        flags = np.array(self.flags, dtype=bool)
        flags.setflags(write=False)
        object.__setattr__(self, "flags", flags)
        if not self.threshold > 0:
            raise ValueError("threshold must be positive")
        if flags.size != -(-self.n_samples // self.window_length):
            raise MaskLengthMismatch(
                f"{flags.size} flags cannot cover {self.n_samples} samples "
                f"in windows of {self.window_length}")

    def sample_mask(self):
        """Boolean per sample, True where the sample lies in a flagged window."""
        return np.repeat(self.flags, self.window_length)[:self.n_samples]

    def __or__(self, other):
        if (other.window_length, other.n_samples) != (self.window_length, self.n_samples):
            raise MaskLengthMismatch("masks cover different time bases")
        return FlagMask(self.window_length, self.flags | other.flags,
                        min(self.threshold, other.threshold), self.n_samples)


def window_variances(segment, window_length=DEFAULT_WINDOW):
    """Population variance of each consecutive window; the trailing partial
    window is evaluated over the samples it has."""
    x = np.asarray(segment, dtype=float)
    n = x.size
    n_full = n // window_length
    full = x[:n_full * window_length].reshape(n_full, window_length)
    out = list(full.var(axis=1))
    if n % window_length:
        out.append(x[n_full * window_length:].var())
    return np.asarray(out)


def auto_threshold(variances, multiple=AUTO_MULTIPLE):
    """``multiple`` times the median window variance, kept strictly positive."""
    return max(multiple * float(np.median(variances)), np.finfo(float).tiny)


def flag_artifacts(segment, window_length=DEFAULT_WINDOW, threshold="auto"):
    """Flag windows whose variance exceeds ``threshold``.

    ``threshold`` is a variance in uV^2 or ``"auto"`` for
    :func:`auto_threshold` of this segment's own window variances.
    """
    if window_length < 2:
        raise ValueError("window_length must be at least 2")
    x = np.asarray(segment, dtype=float)
    if x.size < window_length:
        raise SegmentTooShort(
            f"segment of {x.size} samples is shorter than one window ({window_length})")
    var = window_variances(x, window_length)
    if threshold is None or threshold == "auto":
        threshold = auto_threshold(var)
    threshold = float(threshold)
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    return FlagMask(window_length, var > threshold, threshold, x.size)


def flag_channels(segments, window_length=DEFAULT_WINDOW, threshold="auto"):
    """Union of per-channel masks: a span flagged on any channel is removed
    from all channels so feature windows stay aligned."""
    masks = [flag_artifacts(s, window_length, threshold) for s in segments]
    merged = masks[0]
    for m in masks[1:]:
        merged = merged | m
    return merged


def apply_flags(power, mask):
    """Delete time points inside flagged windows.

    ``power`` may be 1-D or have time on its last axis. Returns the
    compacted array and the strictly increasing indices that were kept.
    """
    p = np.asarray(power)
    n = p.shape[-1]
    if len(mask.flags) != -(-n // mask.window_length):
        raise MaskLengthMismatch(
            f"mask of {len(mask.flags)} windows does not cover {n} time points")
    keep = ~np.repeat(mask.flags, mask.window_length)[:n]
    retained = np.flatnonzero(keep)
    return p[..., retained], retained
