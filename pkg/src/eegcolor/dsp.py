"""Time-frequency machinery: radix-2 FFT, complex Morlet wavelets and
wavelet band power.

The FFT is an iterative Cooley-Tukey radix-2 transform written on top of
numpy array arithmetic only (no platform FFT library), so results are the
same on every build. It works along the last axis, so a stack of signals
is transformed in one call.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (BandNotCovered, InsufficientSupport, NonPowerOfTwoLength,
                     SegmentTooShort)

DEFAULT_FREQS = tuple(float(f) for f in range(8, 31))
ALPHA_BAND = (8.0, 12.0)
BETA_BAND = (13.0, 30.0)
DEFAULT_N_CYCLES = 7.0
MIN_SUPPORT_SIGMAS = 4.0


def is_power_of_two(n):
    return n >= 1 and n & (n - 1) == 0


def next_power_of_two(n):
    return 1 << max(int(n) - 1, 0).bit_length()


@lru_cache(maxsize=32)
def _bit_reverse(n):
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.setflags(write=False)
    return rev


@lru_cache(maxsize=64)
def _twiddles(m):
    tw = np.exp(-2j * np.pi * np.arange(m // 2) / m)
    tw.setflags(write=False)
    return tw


def fft(x):
    """Unnormalized forward DFT along the last axis (length a power of two)."""
    a = np.asarray(x, dtype=complex)
    n = a.shape[-1]
    if not is_power_of_two(n):
        raise NonPowerOfTwoLength(f"length {n} is not a power of two")
    a = a[..., _bit_reverse(n)]
    lead = a.shape[:-1]
    m = 2
    while m <= n:
        blocks = a.reshape(lead + (n // m, m))
        even = blocks[..., :m // 2]
        odd = blocks[..., m // 2:] * _twiddles(m)
        a = np.concatenate((even + odd, even - odd), axis=-1).reshape(lead + (n,))
        m *= 2
    return a


def ifft(X):
    """Inverse of :func:`fft`, scaled by 1/N."""
    X = np.asarray(X, dtype=complex)
    n = X.shape[-1]
    return np.conj(fft(np.conj(X))) / n


@dataclass(frozen=True)
class MorletParams:
    """Complex Morlet wavelet ``A exp(-t^2 / 2 sigma_t^2) exp(i 2 pi f t)``.

    ``sigma_t = n_cycles / (2 pi f)`` and ``A = (sigma_t sqrt(pi))^(-1/2)``,
    which gives unit energy. ``support_half_width`` defaults to 4 sigma_t.
    """

    freq: float
    n_cycles: float = DEFAULT_N_CYCLES
    sample_rate: float = 256.0
    support_half_width: float | None = None

    def __post_init__(self):
        if not self.freq > 0:
            raise ValueError("frequency must be positive")
        if not self.n_cycles > 0 or not self.sample_rate > 0:
            raise ValueError("n_cycles and sample_rate must be positive")
        if self.support_half_width is None:
            object.__setattr__(self, "support_half_width",
                               MIN_SUPPORT_SIGMAS * self.sigma_t)

    @property
    def sigma_t(self):
        return self.n_cycles / (2 * np.pi * self.freq)

    @property
    def amplitude(self):
        return (self.sigma_t * np.sqrt(np.pi)) ** -0.5

    @property
    def half_samples(self):
        return int(math.ceil(self.support_half_width * self.sample_rate - 1e-9))

    def times(self):
        k = self.half_samples
        return np.arange(-k, k + 1) / self.sample_rate


def morlet_wavelet(p):
    """Sample the wavelet on the symmetric grid ``k / fs``, ``|k| <= half_samples``."""
    if p.half_samples / p.sample_rate < MIN_SUPPORT_SIGMAS * p.sigma_t * (1 - 1e-12):
        raise InsufficientSupport(
            f"support half-width {p.support_half_width:.4g} s is below "
            f"{MIN_SUPPORT_SIGMAS:g} sigma_t = {MIN_SUPPORT_SIGMAS * p.sigma_t:.4g} s")
    t = p.times()
    return (p.amplitude * np.exp(-t ** 2 / (2 * p.sigma_t ** 2))
            * np.exp(2j * np.pi * p.freq * t))


@lru_cache(maxsize=512)
def _wavelet_spectrum(freq, n_cycles, sample_rate, nfft):
    w = morlet_wavelet(MorletParams(freq, n_cycles, sample_rate))
    padded = np.zeros(nfft, dtype=complex)
    padded[:w.size] = w
    spec = fft(padded)
    spec.setflags(write=False)
    return spec, w.size


def wavelet_transform(segment, freqs=DEFAULT_FREQS, sample_rate=256.0,
                      n_cycles=DEFAULT_N_CYCLES, nfft=None):
    """Complex wavelet coefficients by FFT convolution ("same" alignment).

    ``segment`` is 1-D or (channels, n); the result has shape
    (..., len(freqs), n). For each frequency the signal and wavelet are
    zero-padded to the next power of two that holds the full linear
    convolution (or to ``nfft`` if given and large enough), multiplied in
    the frequency domain and transformed back; the central ``n`` samples
    are kept.
    """
    x = np.asarray(segment, dtype=float)
    n = x.shape[-1]
    freqs = [float(f) for f in np.atleast_1d(freqs)]
    out = np.empty(x.shape[:-1] + (len(freqs), n), dtype=complex)
    sizes = [2 * MorletParams(f, n_cycles, sample_rate).half_samples + 1 for f in freqs]
    groups = {}
    for i, size in enumerate(sizes):
        need = n + size - 1
        size_fft = next_power_of_two(need)
        if nfft is not None:
            if nfft < need or not is_power_of_two(nfft):
                raise NonPowerOfTwoLength(
                    f"nfft={nfft} must be a power of two >= {need}")
            size_fft = nfft
        groups.setdefault(size_fft, []).append(i)
    for size_fft, rows in groups.items():
        padded = np.zeros(x.shape[:-1] + (size_fft,))
        padded[..., :n] = x
        sig = fft(padded)
        specs = []
        for i in rows:
            spec, _ = _wavelet_spectrum(freqs[i], float(n_cycles), float(sample_rate), size_fft)
            specs.append(spec)
        full = ifft(sig[..., None, :] * np.stack(specs))
        for j, i in enumerate(rows):
            half = (sizes[i] - 1) // 2
            out[..., i, :] = full[..., j, half:half + n]
    return out


@dataclass(frozen=True)
class PowerSpectrogram:
    freqs: np.ndarray
    power: np.ndarray
    channel: str | None = None

    def __post_init__(self):
        freqs = np.array(self.freqs, dtype=float)
        power = np.array(self.power, dtype=float)
        if power.ndim != 2 or power.shape[0] != freqs.size:
            raise ValueError("power must be a (freqs x time) matrix")
        if np.any(power < 0):
            raise ValueError("power must be non-negative")
        for a in (freqs, power):
            a.setflags(write=False)
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "power", power)

    @property
    def times(self):
        return np.arange(self.power.shape[1])


def cwt_power(segment, freqs=DEFAULT_FREQS, sample_rate=256.0,
              n_cycles=DEFAULT_N_CYCLES, channel=None, nfft=None):
    """Morlet power |W(f, t)|^2 of a 1-D segment, one row per frequency."""
    x = np.asarray(segment, dtype=float)
    longest = max(2 * MorletParams(float(f), n_cycles, sample_rate).half_samples + 1
                  for f in np.atleast_1d(freqs))
    if x.ndim != 1 or x.size < longest:
        raise SegmentTooShort(
            f"segment of {x.shape[-1]} samples is shorter than the longest "
            f"wavelet support ({longest} samples)")
    coef = wavelet_transform(x, freqs, sample_rate, n_cycles, nfft)
    return PowerSpectrogram(np.asarray(freqs, dtype=float),
                            coef.real ** 2 + coef.imag ** 2, channel)


def multichannel_power(segments, freqs=DEFAULT_FREQS, sample_rate=256.0,
                       n_cycles=DEFAULT_N_CYCLES):
    """Power array (channels, freqs, time) for a multi-channel epoch."""
    x = np.asarray(segments, dtype=float)
    longest = max(2 * MorletParams(float(f), n_cycles, sample_rate).half_samples + 1
                  for f in np.atleast_1d(freqs))
    if x.shape[-1] < longest:
        raise SegmentTooShort(
            f"segment of {x.shape[-1]} samples is shorter than the longest "
            f"wavelet support ({longest} samples)")
    coef = wavelet_transform(x, freqs, sample_rate, n_cycles)
    return coef.real ** 2 + coef.imag ** 2


@dataclass(frozen=True)
class BandPower:
    alpha: np.ndarray
    beta: np.ndarray
    channel: str | None = None


def band_rows(freqs):
    """Row masks for the alpha (8-12 Hz) and beta (13-30 Hz) bands."""
    f = np.asarray(freqs, dtype=float)
    out = []
    for name, (lo, hi) in (("alpha", ALPHA_BAND), ("beta", BETA_BAND)):
        rows = (f >= lo) & (f <= hi)
        if not rows.any() or f.min() > lo or f.max() < hi:
            raise BandNotCovered(f"{name} band {lo:g}-{hi:g} Hz not covered by grid")
        out.append(rows)
    return tuple(out)


def band_power(spec):
    """Mean power over the alpha rows and over the beta rows at each time point."""
    alpha_rows, beta_rows = band_rows(spec.freqs)
    return BandPower(spec.power[alpha_rows].mean(axis=0),
                     spec.power[beta_rows].mean(axis=0), spec.channel)


def band_power_array(power, freqs=DEFAULT_FREQS):
    """Vectorized band power for a (channels, freqs, time) array.

    Returns (2, channels, time): alpha rows first, then beta.
    """
    alpha_rows, beta_rows = band_rows(freqs)
    return np.stack((power[:, alpha_rows].mean(axis=1),
                     power[:, beta_rows].mean(axis=1)))


def emit_spectrogram(spec, path):
    """Write the power matrix as CSV: header ``hz,0,1,...``, one row per frequency."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hz"] + [str(t) for t in spec.times])
        for f, row in zip(spec.freqs, spec.power):
            w.writerow([repr(float(f))] + [repr(float(v)) for v in row])


def read_spectrogram(path, channel=None):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:]
    return PowerSpectrogram([float(r[0]) for r in body],
                            [[float(v) for v in r[1:]] for r in body], channel)
